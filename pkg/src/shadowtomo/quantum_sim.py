"""Dense small-n quantum oracle.

States are finite ensembles of pure statevectors. Measurements of commuting
Pauli sets use the exact joint distribution of sequential projective
measurement; Bell sampling uses the exact distribution over the 4**n
Bell-basis outcomes of ``rho (x) sigma`` (qubit i of the first copy paired with
qubit i of the second). Outcome ``(x, z)`` labels the Bell state
``(Q (x) 1)|Phi+>^n`` with ``Q`` the unsigned Pauli with masks ``(x, z)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .pauli import PauliOp, apply, commutes, popcount

STATE_CAP = 10


def wht(a: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform along the last axis (unnormalized).

    ``out[..., z] = sum_k (-1)**popcount(k & z) * a[..., k]``.
    """
    a = np.array(a, copy=True)
    size = a.shape[-1]
    lead = a.shape[:-1]
    h = 1
    while h < size:
        a = a.reshape(lead + (size // (2 * h), 2, h))
        lo = a[..., 0, :]
        hi = a[..., 1, :]
        a = np.stack((lo + hi, lo - hi), axis=-2).reshape(lead + (size,))
        h *= 2
    return a


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Ensemble ``sum_i w_i |psi_i><psi_i|`` of pure states on n qubits."""

    n: int
    weights: np.ndarray
    vectors: np.ndarray  # shape (members, 2**n)

    def __post_init__(self):
        if self.n > STATE_CAP:
            raise ValueError(f"dense cap exceeded: n={self.n} > {STATE_CAP}")
        w = np.asarray(self.weights, dtype=float)
        v = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        if v.shape != (len(w), 1 << self.n):
            raise ValueError("vectors must have shape (members, 2**n)")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-10:
            raise ValueError("ensemble weights must be nonnegative and sum to 1")
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1) > 1e-10):
            raise ValueError("ensemble members must be unit vectors")
        w.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "vectors", v)

    @property
    def is_pure(self) -> bool:
        return len(self.weights) == 1

    @property
    def dim(self) -> int:
        return 1 << self.n

    def density_matrix(self) -> np.ndarray:
        v = self.vectors
        return (v.T * self.weights) @ v.conj()


def _normalized(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex).ravel()
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("zero vector")
    return vec / norm


def _qubits_of(dim: int) -> int:
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise ValueError("vector length must be a power of two")
    return n


def pure(vec) -> QuantumState:
    v = _normalized(vec)
    return QuantumState(_qubits_of(len(v)), np.ones(1), v[None, :])


def ensemble(weights, vectors) -> QuantumState:
    vectors = [_normalized(v) for v in vectors]
    w = np.asarray(weights, dtype=float)
    return QuantumState(_qubits_of(len(vectors[0])), w / w.sum(), np.array(vectors))


def basis_state(bits: str) -> QuantumState:
    vec = np.zeros(1 << len(bits), dtype=complex)
    vec[int(bits, 2)] = 1
    return pure(vec)


_SINGLE = {
    "0": [1, 0],
    "1": [0, 1],
    "+": [1, 1],
    "-": [1, -1],
    "r": [1, 1j],
    "l": [1, -1j],
}


def product_state(labels) -> QuantumState:
    """Product of single-qubit states; each label is one of ``01+-rl`` or a
    length-2 amplitude pair."""
    vec = np.ones(1, dtype=complex)
    for lab in labels:
        amp = _SINGLE[lab] if isinstance(lab, str) else lab
        vec = np.kron(vec, _normalized(amp))
    return pure(vec)


def ghz(n: int) -> QuantumState:
    vec = np.zeros(1 << n, dtype=complex)
    vec[0] = vec[-1] = 1
    return pure(vec)


def maximally_mixed(n: int) -> QuantumState:
    dim = 1 << n
    return QuantumState(n, np.full(dim, 1 / dim), np.eye(dim, dtype=complex))


def haar_random(n: int, rng: np.random.Generator) -> QuantumState:
    dim = 1 << n
    return pure(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_product(n: int, rng: np.random.Generator) -> QuantumState:
    return product_state([rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(n)])


def random_mixed(n: int, rank: int, rng: np.random.Generator) -> QuantumState:
    dim = 1 << n
    vecs = rng.normal(size=(rank, dim)) + 1j * rng.normal(size=(rank, dim))
    return ensemble(rng.dirichlet(np.ones(rank)), vecs)


def from_density_matrix(rho: np.ndarray, cutoff: float = 1e-14) -> QuantumState:
    rho = (rho + rho.conj().T) / 2
    vals, vecs = np.linalg.eigh(rho)
    keep = vals > cutoff
    if not np.any(keep):
        raise ValueError("density matrix has no positive spectrum")
    return ensemble(vals[keep], vecs[:, keep].T)


def parse_state(spec: str, rng: np.random.Generator | None = None) -> QuantumState:
    """Parse a declarative state description.

    Generator forms: ``ghz n=3``, ``haar_random n=3 seed=7``, ``product 01+-``,
    ``basis 0101``, ``maximally_mixed n=2``, ``random_product n=4 seed=1``.
    Otherwise the text is read as ket lines ``<bitstring> <amplitude>``.
    """
    lines = [ln.split("#")[0].strip() for ln in spec.strip().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty state description")
    head = lines[0].split()
    kind = head[0].lower()
    opts = dict(tok.split("=", 1) for tok in head[1:] if "=" in tok)
    bare = [tok for tok in head[1:] if "=" not in tok]

    def n_opt():
        return int(opts.get("n", bare[0] if bare else 0))

    def seeded():
        from .rng import make_rng

        if "seed" in opts:
            return make_rng(int(opts["seed"]), "state")
        if rng is None:
            raise ValueError(f"{kind} needs seed=... or an rng")
        return rng

    if kind == "ghz":
        return ghz(n_opt())
    if kind == "haar_random":
        return haar_random(n_opt(), seeded())
    if kind == "random_product":
        return random_product(n_opt(), seeded())
    if kind == "maximally_mixed":
        return maximally_mixed(n_opt())
    if kind == "product":
        return product_state(bare[0])
    if kind == "basis":
        return basis_state(bare[0])
    amps = {}
    width = None
    for ln in lines:
        label, amp = ln.split(None, 1)
        if not re.fullmatch(r"[01]+", label):
            raise ValueError(f"bad ket label {label!r}")
        width = width or len(label)
        if len(label) != width:
            raise ValueError("ket labels must share one width")
        amps[int(label, 2)] = complex(amp.replace(" ", "").replace("i", "j"))
    vec = np.zeros(1 << width, dtype=complex)
    for idx, a in amps.items():
        vec[idx] = a
    norm = np.linalg.norm(vec)
    if abs(norm - 1) > 1e-6:
        raise ValueError(f"ket amplitudes have norm {norm}, expected 1")
    return pure(vec)


# expectations -----------------------------------------------------------------


def _require_hermitian(p: PauliOp):
    if not p.is_hermitian:
        raise ValueError(f"{p} is not Hermitian")


def expectation(state: QuantumState, p: PauliOp) -> float:
    if p.n != state.n:
        raise ValueError("dimension mismatch")
    _require_hermitian(p)
    pv = apply(p, state.vectors)
    vals = np.einsum("ij,ij->i", state.vectors.conj(), pv)
    return float(np.real(vals @ state.weights))


def pauli_expectations_matrix(rho: np.ndarray) -> np.ndarray:
    """``Tr(P rho)`` for all unsigned Paulis, indexed by ``x * 2**n + z``."""
    dim = rho.shape[0]
    n = _qubits_of(dim)
    k = np.arange(dim)
    f = rho[k[None, :], k[None, :] ^ k[:, None]]  # f[x, k] = rho[k, k ^ x]
    out = wht(f)
    y = np.bitwise_count(k[:, None] & k[None, :]) % 4
    out = out * (1j ** y)
    return np.real(out).reshape(dim * dim)


def pauli_expectations(state: QuantumState) -> np.ndarray:
    dim = state.dim
    k = np.arange(dim)
    total = np.zeros((dim, dim))
    y = np.bitwise_count(k[:, None] & k[None, :]) % 4
    phase = 1j ** y
    for w, psi in zip(state.weights, state.vectors):
        f = psi[None, :] * psi.conj()[k[None, :] ^ k[:, None]]
        total += w * np.real(wht(f) * phase)
    return total.reshape(dim * dim)


# commuting-set measurement -----------------------------------------------------


def _check_commuting(paulis):
    for i, p in enumerate(paulis):
        _require_hermitian(p)
        for q in paulis[i + 1:]:
            if not commutes(p, q):
                raise ValueError(f"{p} and {q} do not commute")


def joint_distribution(state: QuantumState, paulis, check: bool = True):
    """Exact joint outcome law of measuring ``paulis`` in order.

    Returns ``(patterns, probs)``; bit ``j`` of a pattern is set when the
    j-th Pauli returned -1.
    """
    paulis = list(paulis)
    if check:
        _check_commuting(paulis)
    acc: dict[int, float] = {}
    for w, psi in zip(state.weights, state.vectors):
        patterns = np.zeros(1, dtype=np.int64)
        branch = psi[None, :]
        for pos, p in enumerate(paulis):
            pv = apply(p, branch)
            plus = (branch + pv) / 2
            minus = (branch - pv) / 2
            branch = np.concatenate((plus, minus))
            patterns = np.concatenate((patterns, patterns | (1 << pos)))
            mass = np.einsum("ij,ij->i", branch.conj(), branch).real
            keep = mass > 1e-15
            branch, patterns = branch[keep], patterns[keep]
        mass = np.einsum("ij,ij->i", branch.conj(), branch).real
        for pat, m in zip(patterns.tolist(), mass.tolist()):
            acc[pat] = acc.get(pat, 0.0) + w * m
    pats = np.array(sorted(acc), dtype=np.int64)
    probs = np.array([acc[p] for p in pats.tolist()])
    return pats, probs / probs.sum()


def measure_commuting_set(state: QuantumState, paulis, rng: np.random.Generator) -> list[int]:
    """One joint shot: a list of +-1 outcomes in the order of ``paulis``."""
    pats, probs = joint_distribution(state, paulis)
    pat = int(pats[rng.choice(len(pats), p=probs)])
    return [-1 if pat >> j & 1 else 1 for j in range(len(paulis))]


def sample_commuting_counts(state, paulis, shots: int, rng, dist=None):
    """Histogram of ``shots`` joint measurements: ``(patterns, counts)``."""
    pats, probs = dist if dist is not None else joint_distribution(state, paulis)
    counts = rng.multinomial(shots, probs)
    keep = counts > 0
    return pats[keep], counts[keep]


def outcome_signs(patterns: np.ndarray, position: int) -> np.ndarray:
    return 1 - 2 * ((patterns >> position) & 1)


# Bell sampling ------------------------------------------------------------------


@dataclass(frozen=True)
class BellSample:
    """One Bell-basis outcome: the masks of the Pauli labelling the Bell state."""

    n: int
    x: int
    z: int

    @property
    def bits(self) -> int:
        return (self.x << self.n) | self.z


def _pair_bell_probs(psi: np.ndarray, phi: np.ndarray) -> np.ndarray:
    dim = len(psi)
    k = np.arange(dim)
    f = phi[None, :] * psi[k[None, :] ^ k[:, None]]  # f[x, k] = phi_k psi_{k^x}
    return (np.abs(wht(f)) ** 2 / dim).reshape(dim * dim)


def bell_distribution(rho: QuantumState, sigma: QuantumState, cutoff: float = 1e-15) -> np.ndarray:
    """Exact outcome probabilities indexed by ``x * 2**n + z``."""
    if rho.n != sigma.n:
        raise ValueError("dimension mismatch")
    probs = np.zeros(4**rho.n)
    for w, psi in zip(rho.weights, rho.vectors):
        if w <= cutoff:
            continue
        for v, phi in zip(sigma.weights, sigma.vectors):
            if v <= cutoff:
                continue
            probs += w * v * _pair_bell_probs(psi, phi)
    probs = np.clip(probs, 0, None)
    return probs / probs.sum()


def bell_sample_counts(rho, sigma, shots: int, rng, dist=None) -> np.ndarray:
    """Histogram over the 4**n Bell outcomes of ``shots`` samples."""
    probs = bell_distribution(rho, sigma) if dist is None else dist
    return rng.multinomial(shots, probs).astype(np.int64)


def bell_sample(rho, sigma, rng) -> BellSample:
    n = rho.n
    idx = int(rng.choice(4**n, p=bell_distribution(rho, sigma)))
    return BellSample(n, idx >> n, idx & ((1 << n) - 1))


def sign_of(p: PauliOp, b: BellSample) -> int:
    """Eigenvalue of ``P (x) P`` on the Bell state labelled by ``b``.

    ``(P (x) P)(Q (x) 1)|Phi+> = (P Q P^T (x) 1)|Phi+>`` and ``P^T`` carries a
    sign per Y factor, giving ``(-1)**(<P, Q> + #Y(P))``.
    """
    form = popcount(p.x & b.z) + popcount(p.z & b.x) + popcount(p.x & p.z)
    return -1 if form & 1 else 1


def signs_for(p: PauliOp, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Vectorized ``sign_of`` over outcome mask arrays."""
    form = np.bitwise_count(p.x & zs) + np.bitwise_count(p.z & xs) + popcount(p.x & p.z)
    return 1 - 2 * (form.astype(np.int64) & 1)


def bell_sign_sums(counts: np.ndarray, n: int) -> np.ndarray:
    """Integer sums ``sum_b counts[b] * sign_of(P, b)`` for every unsigned P.

    Indexed like ``counts`` (``x * 2**n + z``); computed by a 2-D
    Walsh-Hadamard transform in exact integer arithmetic.
    """
    dim = 1 << n
    c = np.asarray(counts, dtype=np.int64).reshape(dim, dim)
    w = wht(wht(c).T).T  # w[a, b] = sum c[xq, zq] (-1)^{a.xq + b.zq}
    k = np.arange(dim)
    ysign = 1 - 2 * (np.bitwise_count(k[:, None] & k[None, :]) & 1).astype(np.int64)
    # P = (xp, zp) reads w[zp, xp]
    return (w.T * ysign).reshape(dim * dim)


def bell_sign_sum(p: PauliOp, counts: np.ndarray) -> int:
    dim = 1 << p.n
    idx = np.arange(dim * dim)
    s = signs_for(p, idx >> p.n, idx & (dim - 1))
    return int(np.dot(s, np.asarray(counts, dtype=np.int64)))

"""Symplectic n-qubit Pauli operators.

A Pauli is stored as two n-bit masks ``x`` and ``z`` plus a Z4 phase, and its
matrix is ``i**phase * kron(s_0, ..., s_{n-1})`` with ``s_j`` selected by the
bit pair ``(x_j, z_j)``: (0,0)->I, (1,0)->X, (0,1)->Z, (1,1)->Y.

Qubit ``j`` lives at bit ``n-1-j`` of each mask, so the masks line up with
computational-basis indices (qubit 0 is the most significant bit) and integer
order of ``(x, z)`` is the lexicographic canonical order used for vertex ids.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

DENSE_OPERATOR_CAP = 12

_SIGN_PREFIXES = (("+i", 1), ("-i", 3), ("i", 1), ("+", 0), ("-", 2))
_PREFIX_OF_PHASE = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _LETTER.items()}


def popcount(v: int) -> int:
    return int(v).bit_count()


def parity(v: int) -> int:
    return int(v).bit_count() & 1


@dataclass(frozen=True, order=True)
class PauliOp:
    """An n-qubit Pauli ``i**phase * P`` in symplectic form."""

    n: int
    x: int
    z: int
    phase: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("qubit count must be nonnegative")
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError(f"bit masks out of range for n={self.n}")
        object.__setattr__(self, "phase", self.phase % 4)

    # construction ---------------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> PauliOp:
        return cls(n, 0, 0, 0)

    @classmethod
    def from_string(cls, text: str) -> PauliOp:
        """Parse ``"-XIZ"`` style text; leading sign may be +, -, +i, -i."""
        s = text.strip()
        phase = 0
        for prefix, ph in _SIGN_PREFIXES:
            if s.startswith(prefix):
                phase = ph
                s = s[len(prefix):]
                break
        n = len(s)
        x = z = 0
        for j, ch in enumerate(s):
            try:
                xb, zb = _BITS[ch.upper()]
            except KeyError:
                raise ValueError(f"bad Pauli letter {ch!r} in {text!r}") from None
            bit = n - 1 - j
            x |= xb << bit
            z |= zb << bit
        return cls(n, x, z, phase)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> PauliOp:
        xb, zb = _BITS[letter]
        bit = n - 1 - qubit
        return cls(n, xb << bit, zb << bit, 0)

    # properties -----------------------------------------------------------
    @property
    def label(self) -> str:
        return "".join(
            _LETTER[((self.x >> (self.n - 1 - j)) & 1, (self.z >> (self.n - 1 - j)) & 1)]
            for j in range(self.n)
        )

    def __str__(self) -> str:
        prefix = _PREFIX_OF_PHASE[self.phase]
        return (prefix if prefix != "+" else "") + self.label

    @property
    def weight(self) -> int:
        return popcount(self.x | self.z)

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def sign(self) -> int:
        """Real sign of a Hermitian Pauli."""
        if not self.is_hermitian:
            raise ValueError(f"{self} is not Hermitian")
        return 1 if self.phase == 0 else -1

    @property
    def key(self) -> tuple[int, int]:
        """Canonical (x, z) ordering key, phase-independent."""
        return (self.x, self.z)

    @property
    def index(self) -> int:
        """Position of the unsigned Pauli in canonical enumeration of all 4**n."""
        return (self.x << self.n) | self.z

    def unsigned(self) -> PauliOp:
        return PauliOp(self.n, self.x, self.z, 0)

    def hermitian(self) -> PauliOp:
        """Drop an imaginary unit so the operator is Hermitian (sign kept)."""
        return PauliOp(self.n, self.x, self.z, self.phase - (self.phase % 2))

    def __neg__(self) -> PauliOp:
        return PauliOp(self.n, self.x, self.z, self.phase + 2)

    def __mul__(self, other: PauliOp) -> PauliOp:
        return multiply(self, other)


def _check_dims(p: PauliOp, q: PauliOp) -> None:
    if p.n != q.n:
        raise ValueError(f"dimension mismatch: {p.n} vs {q.n} qubits")


def commutes(p: PauliOp, q: PauliOp) -> bool:
    _check_dims(p, q)
    return parity((p.x & q.z) ^ (p.z & q.x)) == 0


def multiply(p: PauliOp, q: PauliOp) -> PauliOp:
    # each factor is i^{xz} X^x Z^z; moving Z^{z1} past X^{x2} costs (-1)^{z1.x2}
    _check_dims(p, q)
    x = p.x ^ q.x
    z = p.z ^ q.z
    phase = (
        p.phase
        + q.phase
        + popcount(p.x & p.z)
        + popcount(q.x & q.z)
        + 2 * popcount(p.z & q.x)
        - popcount(x & z)
    )
    return PauliOp(p.n, x, z, phase)


def weight(p: PauliOp) -> int:
    return p.weight


def _basis_action(p: PauliOp):
    """Return (coef, signs) with P|b> = coef * signs[b] |b ^ x>."""
    dim = 1 << p.n
    b = np.arange(dim, dtype=np.int64)
    signs = 1 - 2 * (np.bitwise_count(b & p.z) & 1).astype(np.int64)
    coef = 1j ** ((p.phase + popcount(p.x & p.z)) % 4)
    return coef, signs, b


def dense_matrix(p: PauliOp) -> np.ndarray:
    if p.n > DENSE_OPERATOR_CAP:
        raise ValueError(f"dense cap exceeded: n={p.n} > {DENSE_OPERATOR_CAP}")
    coef, signs, b = _basis_action(p)
    mat = np.zeros((1 << p.n, 1 << p.n), dtype=complex)
    mat[b ^ p.x, b] = coef * signs
    return mat


def apply(p: PauliOp, psi: np.ndarray) -> np.ndarray:
    """Apply P to a statevector (or to the rows of a stacked array)."""
    coef, signs, b = _basis_action(p)
    out = np.empty_like(psi, dtype=complex)
    out[..., b ^ p.x] = coef * signs * psi[..., b]
    return out


def enumerate_all(n: int) -> list[PauliOp]:
    """All 4**n unsigned Paulis in canonical order (index = x * 2**n + z)."""
    return [PauliOp(n, x, z) for x in range(1 << n) for z in range(1 << n)]


def enumerate_local(n: int, k: int) -> list[PauliOp]:
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    out = []
    for support in itertools.combinations(range(n), k):
        for letters in itertools.product("XYZ", repeat=k):
            x = z = 0
            for q, letter in zip(support, letters):
                xb, zb = _BITS[letter]
                x |= xb << (n - 1 - q)
                z |= zb << (n - 1 - q)
            out.append(PauliOp(n, x, z))
    out.sort(key=lambda p: p.key)
    assert len(out) == 3**k * comb(n, k)
    return out


def symplectic_arrays(paulis) -> tuple[np.ndarray, np.ndarray]:
    xs = np.fromiter((p.x for p in paulis), dtype=np.int64)
    zs = np.fromiter((p.z for p in paulis), dtype=np.int64)
    return xs, zs


def anticommutation_matrix(paulis) -> np.ndarray:
    xs, zs = symplectic_arrays(paulis)
    form = (xs[:, None] & zs[None, :]) ^ (zs[:, None] & xs[None, :])
    return (np.bitwise_count(form) & 1).astype(bool)

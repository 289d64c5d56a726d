"""Matrix multiplicative weights search for a mimicking state.

Given magnitude estimates ``u`` over all 4**n Paulis (canonical order), find a
density matrix ``sigma`` with ``|Tr(P sigma)| >= eps/4`` wherever
``u_P >= 3 eps/4``. Each round picks the first Pauli (canonical order) whose
Gibbs-state expectation is more than ``eps/2`` away from both ``+u_P`` and
``-u_P``, probes the sign of ``Tr(P rho)`` on fresh copies, and adds a signed
loss ``M = sign(Tr(P w) - r_P u_P) P`` to the exponent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .pauli import DENSE_OPERATOR_CAP, PauliOp, dense_matrix
from .quantum_sim import STATE_CAP, QuantumState, expectation, pauli_expectations_matrix


@dataclass(frozen=True)
class MmwConfig:
    n: int
    epsilon: float
    sign_shots: int | None = None
    exact_probes: bool = False

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    @property
    def T(self) -> int:
        return math.ceil(64 * self.n / self.epsilon**2) + 1

    @property
    def beta(self) -> float:
        return math.sqrt(self.n / self.T)

    @property
    def shots(self) -> int:
        if self.sign_shots is not None:
            return self.sign_shots
        return math.ceil(32 * math.log(100 * self.T) / self.epsilon**2)


@dataclass
class MmwResult:
    sigma: np.ndarray
    iterations: int
    reached_T: bool
    trace: list = field(default_factory=list)
    iterates: list = field(default_factory=list)  # (M, omega) pairs
    probe_copies: int = 0
    probe_errors: int = 0  # probes whose sign disagreed with the oracle

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in self.trace)


def gibbs_state(exponent_sum: np.ndarray, beta: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(exponent_sum)
    w = np.exp(-beta * (vals - vals.min()))
    w /= w.sum()
    return (vecs * w) @ vecs.conj().T


def sign_probe(p: PauliOp, rho: QuantumState, shots: int, rng: np.random.Generator) -> int:
    """Majority vote over ``shots`` single-copy measurements of ``p`` (ties give +1)."""
    if shots < 1:
        raise ValueError("need at least one shot")
    mean = expectation(rho, p)
    plus = rng.binomial(shots, min(max((1 + mean) / 2, 0.0), 1.0))
    return 1 if 2 * plus >= shots else -1


def regret_audit(iterates) -> float:
    """``sum_t Tr(M_t w_t) - lambda_min(sum_t M_t)``; zero for an empty trace."""
    iterates = list(iterates)
    if not iterates:
        return 0.0
    total = sum(float(np.real(np.trace(m @ w))) for m, w in iterates)
    acc = sum(m for m, _ in iterates)
    return total - float(np.linalg.eigvalsh(acc)[0])


def find_violator(expect: np.ndarray, u: np.ndarray, eps: float) -> int | None:
    cand = (u >= 0.75 * eps) & (np.abs(expect - u) > eps / 2) & (np.abs(expect + u) > eps / 2)
    hits = np.flatnonzero(cand)
    return int(hits[0]) if len(hits) else None


def compute_mimicking_state(
    u: np.ndarray,
    epsilon: float,
    rho: QuantumState,
    rng: np.random.Generator | None = None,
    cfg: MmwConfig | None = None,
    keep_iterates: bool = True,
) -> MmwResult:
    """Run the MMW loop.

    ``u`` is indexed by canonical Pauli index ``x * 2**n + z``. ``rho`` serves
    only as the probe source (fresh single-copy measurements, or exact signs
    when ``cfg.exact_probes``).
    """
    n = rho.n
    if n > STATE_CAP or n > DENSE_OPERATOR_CAP:
        raise ValueError(f"dense cap exceeded: n={n}")
    u = np.asarray(u, dtype=float)
    if u.shape != (4**n,):
        raise ValueError("u must cover all 4**n Paulis")
    if np.any(u < 0):
        raise ValueError("magnitude estimates must be nonnegative")
    cfg = cfg or MmwConfig(n, epsilon)
    if not cfg.exact_probes and rng is None:
        raise ValueError("sampled probes need an rng")
    dim = 1 << n
    exact = None
    exponent = np.zeros((dim, dim), dtype=complex)
    omega = np.eye(dim, dtype=complex) / dim
    result = MmwResult(omega, 0, False)
    trace_sum = 0.0
    for t in range(cfg.T):
        expect = pauli_expectations_matrix(omega)
        hit = find_violator(expect, u, cfg.epsilon)
        if hit is None:
            result.sigma = omega
            result.iterations = t
            return result
        p = PauliOp(n, hit >> n, hit & (dim - 1))
        if exact is None:
            exact = _true_expectations(rho)
        truth = 1 if exact[hit] >= 0 else -1
        if cfg.exact_probes:
            r = truth
        else:
            r = sign_probe(p, rho, cfg.shots, rng)
            result.probe_copies += cfg.shots
        result.probe_errors += int(r != truth and abs(exact[hit]) > 0)
        s = 1 if expect[hit] - r * u[hit] >= 0 else -1
        m = s * dense_matrix(p)
        trace_sum += s * expect[hit]
        exponent += m
        if keep_iterates:
            result.iterates.append((m, omega))
        lam = float(np.linalg.eigvalsh(exponent)[0])
        result.trace.append(
            {
                "t": t,
                "chosen_pauli": p.label,
                "r_P": r,
                "sign_factor": s,
                "regret_partial": trace_sum - lam,
            }
        )
        omega = gibbs_state(exponent, cfg.beta)
    result.sigma = omega
    result.iterations = cfg.T
    result.reached_T = True
    return result


def _true_expectations(rho: QuantumState) -> np.ndarray:
    from .quantum_sim import pauli_expectations

    return pauli_expectations(rho)


def verify_mimicking(sigma: np.ndarray, u: np.ndarray, epsilon: float) -> bool:
    """Dense check of ``|Tr(P sigma)| >= eps/4`` wherever ``u_P >= 3 eps/4``."""
    expect = pauli_expectations_matrix(sigma)
    need = np.asarray(u) >= 0.75 * epsilon
    return bool(np.all(np.abs(expect[need]) >= epsilon / 4 - 1e-12))

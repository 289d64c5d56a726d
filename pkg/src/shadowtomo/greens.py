"""Time derivatives at t=0 of the one-body Green's function.

``G_ab(t) = Tr(i c_a(t) c_b rho)`` with ``c_a(t) = e^{iHt} c_a e^{-iHt}``, so the
q-th derivative is ``Tr(i L^q(c_a) c_b rho)`` with ``L(X) = i[H, X]``. The
nested commutator is expanded symbolically over ordered Majorana products
``C(x) = c_{a_1} ... c_{a_d}``; results are reported in the Hermitian basis
``Gamma(x) = i**(d(d-1)/2) C(x)``.

Matrices are indexed by Majorana labels ``a, b = 1..2n`` (0-based rows) and are
complex: ``i Gamma c_b`` is anti-Hermitian whenever ``c_b`` is a factor of
``Gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import commgraph as cg
from .fermion import (
    FermionMapping,
    MajoranaMonomial,
    hermitian_phase,
    make_mapping,
    monomial_to_pauli,
    ordered_product_sign,
    support_to_pauli,
)
from .pauli import dense_matrix, popcount
from .protocols import DEFAULT_CONSTANTS, ProtocolConstants, greedy_engine, learn_two_copy_template
from .quantum_sim import QuantumState, expectation

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class SparseHamiltonian:
    n_modes: int
    terms: tuple  # MajoranaMonomial with coefficients
    k: int
    s: int

    def __post_init__(self):
        for t in self.terms:
            if t.n_modes != self.n_modes:
                raise ValueError("term acts on the wrong mode count")
            if t.degree % 2 or t.degree > 2 * self.k or t.degree == 0:
                raise ValueError(f"term {t} is not an even degree in 2..{2 * self.k}")
        if self.sparsity() > self.s:
            raise ValueError(f"a mode appears in {self.sparsity()} > s={self.s} terms")

    def sparsity(self) -> int:
        counts = [0] * (2 * self.n_modes)
        for t in self.terms:
            for a in t.indices:
                counts[a - 1] += 1
        return max(counts, default=0)

    def dense(self, mapping: FermionMapping) -> np.ndarray:
        dim = 1 << mapping.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            out += t.coefficient * dense_matrix(monomial_to_pauli(t, mapping))
        return out

    @classmethod
    def from_lines(cls, lines, n_modes: int, k: int | None = None, s: int | None = None):
        terms = []
        for ln in lines:
            ln = ln.split("#")[0].strip()
            if ln:
                terms.append(MajoranaMonomial.from_string(ln, n_modes))
        k = k if k is not None else max((t.degree // 2 for t in terms), default=1)
        h = cls(n_modes, tuple(terms), k, 10**9)
        return cls(n_modes, tuple(terms), k, s if s is not None else h.sparsity())


def random_sparse_hamiltonian(n_modes: int, k: int, s: int, rng, attempts: int = 200) -> SparseHamiltonian:
    """Random k-body, s-sparse Hamiltonian with coefficients uniform in [-1, 1]."""
    counts = [0] * (2 * n_modes)
    terms = {}
    for _ in range(attempts):
        degree = 2 * int(rng.integers(1, k + 1))
        if degree > 2 * n_modes:
            continue
        idx = sorted(rng.choice(2 * n_modes, size=degree, replace=False).tolist())
        mask = sum(1 << a for a in idx)
        if mask in terms or any(counts[a] >= s for a in idx):
            continue
        for a in idx:
            counts[a] += 1
        terms[mask] = float(rng.uniform(-1, 1))
    mons = tuple(MajoranaMonomial(n_modes, m, c) for m, c in sorted(terms.items()))
    return SparseHamiltonian(n_modes, mons, k, s)


# symbolic algebra over ordered products -------------------------------------------------


def _mul(x: dict, y: dict) -> dict:
    out: dict[int, complex] = {}
    for sx, cx in x.items():
        for sy, cy in y.items():
            key = sx ^ sy
            out[key] = out.get(key, 0) + cx * cy * ordered_product_sign(sx, sy)
    return out


def _lie(h: dict, x: dict) -> dict:
    """``i [H, X]`` with like terms merged and negligible ones dropped."""
    out: dict[int, complex] = {}
    for sh, ch in h.items():
        for sx, cx in x.items():
            comm = ordered_product_sign(sh, sx) - ordered_product_sign(sx, sh)
            if comm:
                key = sh ^ sx
                out[key] = out.get(key, 0) + 1j * comm * ch * cx
    return {k: v for k, v in out.items() if abs(v) > MERGE_TOL}


def _to_ordered(support: int, coefficient) -> tuple[int, complex]:
    return support, coefficient * 1j ** hermitian_phase(popcount(support))


def _to_hermitian(support: int, coefficient: complex) -> complex:
    return coefficient / 1j ** hermitian_phase(popcount(support))


def _ham_ordered(h: SparseHamiltonian) -> dict:
    out = {}
    for t in h.terms:
        key, c = _to_ordered(t.support, t.coefficient)
        out[key] = out.get(key, 0) + c
    return out


@dataclass(frozen=True)
class GreensExpansion:
    a: int  # 1-based Majorana label
    q: int
    n_modes: int
    terms: dict  # support -> real coefficient in the Hermitian Gamma basis

    def supports(self) -> list:
        return sorted(self.terms)

    def target_supports(self) -> set:
        """Supports of ``Gamma c_b`` over all terms and all b, identity excluded."""
        out = set()
        for x in self.terms:
            for b in range(2 * self.n_modes):
                y = x ^ (1 << b)
                if y:
                    out.add(y)
        return out


def lie_expand(h: SparseHamiltonian, a: int, q: int) -> GreensExpansion:
    if q < 0:
        raise ValueError("q must be nonnegative")
    if not 1 <= a <= 2 * h.n_modes:
        raise ValueError("mode label out of range")
    hd = _ham_ordered(h)
    cur = {1 << (a - 1): 1.0 + 0j}
    for _ in range(q):
        cur = _lie(hd, cur)
    terms = {}
    for sup, c in cur.items():
        v = _to_hermitian(sup, c)
        assert abs(v.imag) < 1e-9 * max(1.0, abs(v)), "nested commutator lost Hermiticity"
        if abs(v.real) > MERGE_TOL:
            terms[sup] = float(v.real)
    return GreensExpansion(a, q, h.n_modes, dict(sorted(terms.items())))


def expansion_operator(exp: GreensExpansion, mapping: FermionMapping) -> np.ndarray:
    dim = 1 << mapping.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for sup, c in exp.terms.items():
        out += c * dense_matrix(support_to_pauli(sup, mapping))
    return out


def dense_nested_commutator(h: SparseHamiltonian, a: int, q: int, mapping: FermionMapping) -> np.ndarray:
    hm = h.dense(mapping)
    x = dense_matrix(mapping.majorana(a))
    for _ in range(q):
        x = 1j * (hm @ x - x @ hm)
    return x


# matrix assembly ---------------------------------------------------------------------------


def _entry_terms(exp: GreensExpansion, b: int):
    """``i L^q(c_a) c_b = const + sum_y w_y Gamma(y)``; returns (const, {y: w})."""
    const = 0j
    out: dict[int, complex] = {}
    eb = 1 << (b - 1)
    for x, h in exp.terms.items():
        _, cx = _to_ordered(x, h)
        y = x ^ eb
        c = 1j * cx * ordered_product_sign(x, eb)
        if y == 0:
            const += c
        else:
            out[y] = out.get(y, 0) + _to_hermitian(y, c)
    return const, out


def _assemble(h: SparseHamiltonian, q: int, values: dict) -> tuple[np.ndarray, dict]:
    m = 2 * h.n_modes
    mat = np.zeros((m, m), dtype=complex)
    flags = {"diagonal_convention": q == 0}
    for a in range(1, m + 1):
        exp = lie_expand(h, a, q)
        for b in range(1, m + 1):
            if q == 0 and a == b:
                mat[a - 1, b - 1] = 1.0  # i Tr(rho) by definition; reported as 1
                continue
            const, ws = _entry_terms(exp, b)
            mat[a - 1, b - 1] = const + sum(w * values[y] for y, w in ws.items())
    return mat, flags


def greens_derivative_exact(rho: QuantumState, h: SparseHamiltonian, q: int, mapping) -> np.ndarray:
    if isinstance(mapping, str):
        mapping = make_mapping(mapping, h.n_modes)
    needed = set()
    for a in range(1, 2 * h.n_modes + 1):
        needed |= lie_expand(h, a, q).target_supports()
    values = {y: expectation(rho, support_to_pauli(y, mapping)) for y in needed}
    return _assemble(h, q, values)[0]


def greens_finite_difference(rho: QuantumState, h: SparseHamiltonian, q: int, mapping, step: float = 1e-3):
    """Centered finite-difference derivative of dense ``G_ab(t)`` at t=0 (q <= 2)."""
    from scipy.linalg import expm

    if isinstance(mapping, str):
        mapping = make_mapping(mapping, h.n_modes)
    hm = h.dense(mapping)
    r = rho.density_matrix()
    m = 2 * h.n_modes
    cs = [dense_matrix(mapping.majorana(a)) for a in range(1, m + 1)]

    def g(t):
        u = expm(1j * hm * t)
        out = np.zeros((m, m), dtype=complex)
        for a in range(m):
            ca = u @ cs[a] @ u.conj().T
            for b in range(m):
                out[a, b] = np.trace(1j * ca @ cs[b] @ r)
        return out

    if q == 0:
        return g(0.0)
    if q == 1:
        return (g(step) - g(-step)) / (2 * step)
    if q == 2:
        return (g(step) - 2 * g(0.0) + g(-step)) / step**2
    raise ValueError("finite differences implemented for q <= 2")


# audits ---------------------------------------------------------------------------------


def num_terms_bound(s: int, k: int, q: int) -> float:
    if q == 0:
        return 1
    return s**q * (2 * k) ** (q - 1) * math.factorial(q - 1)


def degree_bound(k: int, q: int) -> int:
    return (2 * k - 2) * q + 1


def coloring_bound(s: int, k: int, q: int, omega: int, constant: float = 4.0) -> float:
    qq = max(q, 1)  # the bound degenerates at q = 0, where the targets are one-body
    return constant * s**qq * (2 * k) ** (qq + 2) * qq**2 * math.factorial(qq) * omega


# learning -------------------------------------------------------------------------------


@dataclass
class GreensEstimate:
    matrix: np.ndarray
    epsilon: float
    inner_epsilon: float
    targets: list
    report: object
    audits: dict = field(default_factory=dict)


def learn_greens_derivative(
    rho: QuantumState,
    h: SparseHamiltonian,
    q: int,
    eps: float,
    rng,
    mapping="jordan_wigner",
    consts: ProtocolConstants = DEFAULT_CONSTANTS,
) -> GreensEstimate:
    """Learn every ``Tr(Gamma c_b rho)`` with the two-copy template, then recombine.

    Each target is learned to ``eps / max_a sum_Gamma |h_a,Gamma|`` so the
    triangle inequality bounds every recombined entry by ``eps``.
    """
    if isinstance(mapping, str):
        mapping = make_mapping(mapping, h.n_modes)
    expansions = [lie_expand(h, a, q) for a in range(1, 2 * h.n_modes + 1)]
    weight = max((sum(abs(v) for v in e.terms.values()) for e in expansions), default=0.0)
    supports = sorted(set().union(*(e.target_supports() for e in expansions)))
    audits = {
        "num_terms": max(len(e.terms) for e in expansions),
        "num_terms_bound": num_terms_bound(h.s, h.k, q),
        "max_degree": max((popcount(x) for e in expansions for x in e.terms), default=0),
        "degree_bound": degree_bound(h.k, q),
        "coefficient_weight": weight,
    }
    if weight == 0 or not supports:
        m = 2 * h.n_modes
        mat = np.zeros((m, m), dtype=complex)
        if q == 0:
            np.fill_diagonal(mat, 1.0)
        return GreensEstimate(mat, eps, eps, [], None, audits)
    inner = min(eps / weight, 0.999)
    targets = [MajoranaMonomial(h.n_modes, y) for y in supports]
    report = learn_two_copy_template(
        rho, targets, greedy_engine, inner, rng, consts, mapping,
        descriptor={"kind": "greens", "n_modes": h.n_modes, "q": q},
    )
    values = dict(zip(supports, report.estimates))
    mat, flags = _assemble(h, q, values)
    audits.update(flags)
    audits.update(_coloring_audits(expansions, targets, report, h, q))
    m_targets = len(targets)
    base = (2 * h.s * h.k * max(q, 1)) ** (5 * max(q, 1)) / eps**4
    audits["budget_log_m"] = base * math.log(max(m_targets, 2))
    audits["budget_log_n"] = base * math.log(max(h.n_modes, 2))
    return GreensEstimate(mat, eps, inner, targets, report, audits)


def _coloring_audits(expansions, targets, report, h, q) -> dict:
    mt = report.extras["magnitudes"]
    survivors = [targets[i] for i in mt.s_eps]
    out = {"survivors": len(survivors)}
    if not survivors:
        out.update(num_colors=0, omega=0, coloring_bound=0.0, b_bound_ok=True)
        return out
    g = cg.build_graph(survivors)
    omega = cg.max_clique(g, exact_limit=None) if len(g) <= 150 else cg.clique_bounds(g)[1]
    colors = report.metadata["coloring"]["num_colors"]
    alive = {t.support for t in survivors}
    worst = 0
    for e in expansions:
        for x in e.terms:
            hits = sum(1 for b in range(2 * h.n_modes) if (x ^ (1 << b)) in alive)
            worst = max(worst, hits)
    out.update(
        num_colors=colors,
        omega=omega,
        coloring_bound=coloring_bound(h.s, h.k, q, omega),
        b_max=worst,
        b_bound_ok=worst <= 2 * omega,
    )
    return out

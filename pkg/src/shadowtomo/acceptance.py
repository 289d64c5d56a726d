"""Acceptance criteria 1-11 as plain functions, shared by the test-suite and ``selftest``.

Every function returns a ``CriterionResult``; ``passed`` includes the runtime
budget. Sizes and tolerances are the stated ones; ``seed`` fixes every stream.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import commgraph as cg
from . import compression as cmp
from .fermion import (
    MajoranaMonomial,
    enumerate_degree,
    enumerate_kbody,
    hermitian_phase,
    make_mapping,
    monomial_commutes,
    monomial_to_pauli,
    ordered_product_sign,
    support_to_pauli,
)
from .greens import (
    dense_nested_commutator,
    expansion_operator,
    greens_derivative_exact,
    learn_greens_derivative,
    lie_expand,
    num_terms_bound,
    random_sparse_hamiltonian,
)
from .mmw import MmwConfig, compute_mimicking_state, regret_audit, verify_mimicking
from .pauli import anticommutation_matrix, commutes, dense_matrix, enumerate_all, multiply, popcount
from .protocols import (
    DEFAULT_CONSTANTS,
    learn_all_paulis,
    learn_fermionic,
    learn_magnitudes,
    learn_two_copy_template,
)
from .quantum_sim import (
    expectation,
    haar_random,
    pauli_expectations,
    pauli_expectations_matrix,
    random_mixed,
    random_product,
)
from .rng import make_rng


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    seconds: float
    budget: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} {self.title}: {self.summary} ({self.seconds:.1f}s / {self.budget:.0f}s)"


def _finish(number, title, ok, summary, t0, budget, **details) -> CriterionResult:
    dt = time.perf_counter() - t0
    return CriterionResult(number, title, bool(ok and dt < budget), summary, dt, budget, details)


def _random_state(n: int, rng, trial: int):
    kind = trial % 3
    if kind == 0:
        return haar_random(n, rng)
    if kind == 1:
        return random_product(n, rng)
    return random_mixed(n, int(rng.integers(2, 1 << n)) if n > 1 else 2, rng)


# 1 -------------------------------------------------------------------------------------


def criterion_1_algebra(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    worst = 0.0
    for n in (1, 2, 3):
        ops = enumerate_all(n)
        mats = [dense_matrix(p) for p in ops]
        for i, p in enumerate(ops):
            for j, q in enumerate(ops):
                r = multiply(p, q)
                worst = max(worst, float(np.abs(mats[i] @ mats[j] - dense_matrix(r)).max()))
                comm = mats[i] @ mats[j] - mats[j] @ mats[i]
                if commutes(p, q) != bool(np.abs(comm).max() < 1e-9):
                    worst = max(worst, 1.0)
    for n_modes in (1, 2, 3):
        for kind in ("jordan_wigner", "ternary_tree"):
            mp = make_mapping(kind, n_modes)
            sups = range(1 << (2 * n_modes))
            mats = {x: dense_matrix(support_to_pauli(x, mp)) for x in sups}
            for x in sups:
                for y in sups:
                    z = x ^ y
                    ph = hermitian_phase(popcount(x)) + hermitian_phase(popcount(y)) - hermitian_phase(popcount(z))
                    coef = 1j**ph * ordered_product_sign(x, y)
                    worst = max(worst, float(np.abs(mats[x] @ mats[y] - coef * mats[z]).max()))
                    comm = mats[x] @ mats[y] - mats[y] @ mats[x]
                    if monomial_commutes(x, y) != bool(np.abs(comm).max() < 1e-9):
                        worst = max(worst, 1.0)
    return _finish(1, "algebra oracle equivalence", worst <= 1e-9, f"max deviation {worst:.2e}", t0, 60, max_dev=worst)


# 2 -------------------------------------------------------------------------------------


def criterion_2_uncertainty(seed: int = 0, states: int = 1000, sets_per_state: int = 8) -> CriterionResult:
    t0 = time.perf_counter()
    rng = make_rng(seed, "criterion-2")
    adj = {}
    for n in (1, 2, 3, 4):
        ops = enumerate_all(n)[1:]
        adj[n] = anticommutation_matrix(ops)
    worst = 0.0
    tested = 0
    for s in range(states):
        n = 1 + s % 4
        rho = random_mixed(n, int(rng.integers(1, (1 << n) + 1)), rng)
        e = pauli_expectations_matrix(rho.density_matrix())[1:]
        orders = [np.argsort(-np.abs(e), kind="stable")]
        orders += [rng.permutation(len(e)) for _ in range(sets_per_state - 1)]
        for order in orders:
            chosen = cg.greedy_anticommuting_set(adj[n], order)
            worst = max(worst, float(np.sum(e[chosen] ** 2)))
            tested += 1
    ok = worst <= 1 + 1e-9
    return _finish(2, "anticommuting uncertainty", ok, f"max sum {worst:.12f} over {tested} sets", t0, 60, max_sum=worst)


# 3 -------------------------------------------------------------------------------------


def nfs_c5_shape() -> bool:
    g = cg.graph_from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
    tree = cg.nfs_tree(g, 0)
    levels = [sorted(lv) for lv in tree.levels]
    parents = {v: tree.parent[v] for v in range(1, 5)}
    return levels == [[0], [1, 4], [2], [3]] and parents == {1: 0, 2: 1, 3: 2, 4: 0}


def criterion_3_gyarfas(seed: int = 0, graphs: int = 200) -> CriterionResult:
    t0 = time.perf_counter()
    rng = make_rng(seed, "criterion-3")
    families = [
        (enumerate_all(3)[1:], 2 * 3 + 1),
        (enumerate_degree(4, 4), 2 * 4 + 1),
    ]
    full = [cg.build_graph(ops) for ops, _ in families]
    bad = []
    worst_ratio = 0.0
    for t in range(graphs):
        fam = t % 2
        ell = families[fam][1]
        g0 = full[fam]
        keep = np.flatnonzero(rng.random(len(g0)) < rng.uniform(0.15, 1.0))
        g = g0.induced(keep)
        col = cg.gyarfas_color(g)
        omega = cg.max_clique(g, exact_limit=None) if len(g) else 0
        bound = ell ** max(omega - 1, 0)
        proper = col.is_proper(g)
        if len(g):
            worst_ratio = max(worst_ratio, col.num_colors / bound)
        if not proper or col.num_colors > bound:
            bad.append(t)
    shape = nfs_c5_shape()
    ok = not bad and shape
    return _finish(
        3, "NFS / Gyarfas coloring", ok,
        f"{graphs - len(bad)}/{graphs} within l^(w-1), max colors/bound {worst_ratio:.3f}, C5 shape {shape}",
        t0, 120, failures=bad, c5=shape,
    )


# 4 -------------------------------------------------------------------------------------


def criterion_4_misra_gries(seed: int = 0, graphs: int = 200) -> CriterionResult:
    t0 = time.perf_counter()
    rng = make_rng(seed, "criterion-4")
    ops = enumerate_kbody(8, 1)
    bad = []
    slack = []
    for t in range(graphs):
        keep = np.flatnonzero(rng.random(len(ops)) < rng.uniform(0.1, 1.0))
        sub = [ops[i] for i in keep]
        g = cg.build_graph(sub)
        col = cg.misra_gries_1body(sub)
        omega = cg.max_clique(g, exact_limit=None) if sub else 0
        slack.append(omega + 1 - col.num_colors)
        if not col.is_proper(g) or col.num_colors > omega + 1:
            bad.append(t)
    return _finish(
        4, "Misra-Gries one-body coloring", not bad,
        f"{graphs - len(bad)}/{graphs} proper with <= w+1 colors, min slack {min(slack)}",
        t0, 60, failures=bad,
    )


# 5 -------------------------------------------------------------------------------------


def criterion_5_kbody(seed: int = 0, samples: int = 10_000) -> CriterionResult:
    t0 = time.perf_counter()
    rng = make_rng(seed, "criterion-5")
    cases = []
    for n_modes in (2, 3, 4):
        full = enumerate_kbody(n_modes, 2)
        cases.append(full)
        for _ in range(2):
            keep = np.flatnonzero(rng.random(len(full)) < 0.5)
            cases.append([full[i] for i in keep])
    problems = []
    margins = []
    for ci, ops in enumerate(cases):
        if not ops:
            continue
        fc = cg.kbody_fractional_coloring(ops)
        g = fc.graph
        draws = fc.sample_many(rng, samples)
        for row in np.unique(draws, axis=0):
            if not g.is_independent(np.flatnonzero(row)):
                problems.append((ci, "dependent set"))
                break
        freq = draws.mean(axis=0)
        omega_greedy = cg.clique_bounds(g)[0]
        target = 1 / cg.f_bound(4, omega_greedy)
        sigma = np.sqrt(target * (1 - target) / samples)
        margin = float((freq - (target - 3 * sigma)).min())
        margins.append(margin)
        if margin < 0:
            problems.append((ci, "coverage"))
    return _finish(
        5, "k-body fractional coloring", not problems,
        f"{len(cases)} graphs, {samples} samples each, min coverage margin {min(margins):.3g}",
        t0, 300, problems=problems,
    )


# 6 -------------------------------------------------------------------------------------


def criterion_6_clique(seed: int = 0, runs: int = 100) -> CriterionResult:
    t0 = time.perf_counter()
    ops = enumerate_all(3)
    within = 0
    worst = []
    for t in range(runs):
        eps = (0.3, 0.5)[t % 2]
        rng = make_rng(seed, "criterion-6", str(t))
        rho = _random_state(3, rng, t // 2)
        mt = learn_magnitudes(rho, ops, eps, DEFAULT_CONSTANTS.delta_fail, rng)
        g = cg.build_graph([ops[i] for i in mt.s_eps])
        omega = cg.max_clique(g, exact_limit=None) if len(g) else 0
        within += omega <= 4 / eps**2
        worst.append(omega * eps**2 / 4)
    need = math.ceil(0.99 * runs)
    return _finish(
        6, "clique bound on S_eps", within >= need,
        f"{within}/{runs} runs with w <= 4/eps^2, max w/(4/eps^2) {max(worst):.3f}", t0, 300,
    )


# 7 -------------------------------------------------------------------------------------


def criterion_7_mmw(seed: int = 0, states: int = 50) -> CriterionResult:
    t0 = time.perf_counter()
    failures = []
    iters = []
    for t in range(states):
        rng = make_rng(seed, "criterion-7", str(t))
        n = 3 if t % 5 else 2
        rho = _random_state(n, rng, t)
        ops = enumerate_all(n)
        for eps in (0.3, 0.5):
            mt = learn_magnitudes(rho, ops, eps, DEFAULT_CONSTANTS.delta_fail, rng)
            cfg = MmwConfig(n, eps, exact_probes=True)
            res = compute_mimicking_state(mt.u, eps, rho, None, cfg)
            reg = regret_audit(res.iterates)
            ok = (
                not res.reached_T
                and verify_mimicking(res.sigma, mt.u, eps)
                and reg <= 2 * math.sqrt(n * cfg.T) + 1e-9
            )
            iters.append(res.iterations / cfg.T)
            if not ok:
                failures.append((t, eps))
    return _finish(
        7, "MMW mimicking state", not failures,
        f"{2 * states - len(failures)}/{2 * states} runs ok, max iterations/T {max(iters):.3f}",
        t0, 600, failures=failures,
    )


# 8 -------------------------------------------------------------------------------------


def bell_stage_ledger(ns=(2, 3, 4, 5), eps: float = 0.4, seed: int = 0) -> dict:
    out = {}
    for n in ns:
        rng = make_rng(seed, "ledger", str(n))
        rep = learn_all_paulis(haar_random(n, rng), eps, rng)
        tot = rep.metadata["sample_totals"]
        out[n] = tot["bell_stage1_copies"] + tot["bell_stage3_copies"]
    return out


def loglog_slope(ledger: dict) -> float:
    ns = np.array(sorted(ledger), dtype=float)
    ys = np.array([ledger[int(n)] for n in ns], dtype=float)
    return float(np.polyfit(np.log(ns), np.log(ys), 1)[0])


def criterion_8_all_paulis(seed: int = 0, trials: int = 100) -> CriterionResult:
    t0 = time.perf_counter()
    eps = 0.4
    good = 0
    errs = []
    for t in range(trials):
        rng = make_rng(seed, "criterion-8", str(t))
        rho = haar_random(3, rng)
        rep = learn_all_paulis(rho, eps, rng)
        err = float(np.abs(rep.estimates - pauli_expectations(rho)).max())
        errs.append(err)
        good += err <= eps
    ledger = bell_stage_ledger(eps=eps, seed=seed)
    slope = loglog_slope(ledger)
    ok = good >= math.ceil(0.95 * trials) and slope <= 1.5
    return _finish(
        8, "end-to-end all Paulis", ok,
        f"{good}/{trials} trials within eps (median max error {np.median(errs):.3f}), Bell-stage slope {slope:.3f}",
        t0, 1800, ledger=ledger, slope=slope,
    )


# 9 -------------------------------------------------------------------------------------


def criterion_9_fermionic(seed: int = 0, trials: int = 100) -> CriterionResult:
    t0 = time.perf_counter()
    eps = 0.3
    summary = []
    ok = True
    chi_max = 0.0
    for n_modes in (4, 6, 8):
        kind = "ternary_tree" if n_modes == 4 else "jordan_wigner"
        mp = make_mapping(kind, n_modes)
        ops = enumerate_kbody(n_modes, 1)
        paulis = [monomial_to_pauli(o, mp) for o in ops]
        good = 0
        for t in range(trials):
            rng = make_rng(seed, "criterion-9", str(n_modes), str(t))
            rho = haar_random(mp.n_qubits, rng) if t % 2 else random_product(mp.n_qubits, rng)
            rep = learn_fermionic(rho, n_modes, 1, mp, eps, rng)
            exact = np.array([expectation(rho, p) for p in paulis])
            good += float(np.abs(rep.estimates - exact).max()) <= eps
            chi = rep.metadata.get("coloring", {}).get("size_chi", 0.0)
            chi_max = max(chi_max, chi)
        ok &= good >= math.ceil(0.95 * trials)
        summary.append(f"n_modes={n_modes}: {good}/{trials}")
    ok &= chi_max <= 4 / eps**2 + 1
    return _finish(
        9, "end-to-end one-body fermionic", ok,
        ", ".join(summary) + f", max coloring size {chi_max:.0f} (limit {4 / eps**2 + 1:.1f})",
        t0, 1200, chi_max=chi_max,
    )


# 10 ------------------------------------------------------------------------------------


def fit_size_model(rows) -> tuple[float, float, float]:
    """Constants ``c1, c2 >= 0`` minimizing the worst log-ratio of measured bits to
    ``c1 * n * M + c2 * n**2 * N``; returns (c1, c2, worst factor)."""
    from scipy.optimize import minimize

    a = np.array([r["n_M"] for r in rows], dtype=float)
    b = np.array([r["n2_N"] for r in rows], dtype=float)
    bits = np.array([r["bits"] for r in rows], dtype=float)

    def worst(logc):
        model = np.exp(logc[0]) * a + np.exp(logc[1]) * b
        return float(np.abs(np.log(bits / model)).max())

    best = None
    for s1, s2 in itertools.product(np.linspace(-4, 4, 9), repeat=2):
        res = minimize(worst, [s1, s2], method="Nelder-Mead", options={"xatol": 1e-6, "fatol": 1e-9})
        if best is None or res.fun < best.fun:
            best = res
    return float(np.exp(best.x[0])), float(np.exp(best.x[1])), float(np.exp(best.fun))


def compression_rows(ns=(2, 3, 4, 5), eps: float = 0.5, seed: int = 0, check_queries: bool = True):
    rows = []
    for n in ns:
        rng = make_rng(seed, "criterion-10", str(n))
        rho = haar_random(n, rng)
        ops = enumerate_all(n)
        rep = learn_two_copy_template(rho, ops, "gyarfas", eps, rng, descriptor={"kind": "all"})
        d = cmp.compress(rep.raw, seeds={"seed": seed, "n": n})
        blob = cmp.serialize(d)
        back = cmp.deserialize(blob)
        roundtrip = back == d and cmp.serialize(back) == blob
        exact = True
        if check_queries:
            exact = all(cmp.query(back, p) == y for p, y in zip(ops, rep.estimates))
        shots = sum(len(bits) for groups in d.batches for _, bits in groups)
        rows.append(
            {
                "n": n,
                "bits": 8 * len(blob),
                "n_M": n * len(d.bell_rows),
                "n2_N": n**2 * shots,
                "roundtrip": roundtrip,
                "queries_exact": exact,
                "unit_ratio": 8 * len(blob) / cmp.scaling_model(d),
            }
        )
    return rows


def criterion_10_compression(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    rows = compression_rows(seed=seed)
    c1, c2, factor = fit_size_model(rows)
    exact = all(r["queries_exact"] for r in rows)
    rt = all(r["roundtrip"] for r in rows)
    ok = exact and rt and factor <= 2.0
    units = ", ".join(f"{r['unit_ratio']:.2f}" for r in rows)
    return _finish(
        10, "compressed record", ok,
        f"queries exact {exact}, round-trip {rt}, fitted c1={c1:.3g} c2={c2:.3g} worst factor {factor:.2f} "
        f"(unit-constant ratios {units})",
        t0, 300, rows=rows, c1=c1, c2=c2, factor=factor,
    )


# 11 ------------------------------------------------------------------------------------


def criterion_11_greens(seed: int = 0, trials: int = 100) -> CriterionResult:
    t0 = time.perf_counter()
    rng = make_rng(seed, "criterion-11")
    worst = 0.0
    for n_modes in (1, 2, 3, 4):
        mp = make_mapping("jordan_wigner", n_modes)
        for k, s in ((1, 2), (2, 2), (2, 3)):
            h = random_sparse_hamiltonian(n_modes, k, s, rng)
            for q in range(4):
                for a in range(1, 2 * n_modes + 1):
                    e = lie_expand(h, a, q)
                    d = np.abs(expansion_operator(e, mp) - dense_nested_commutator(h, a, q, mp)).max()
                    worst = max(worst, float(d))
    count_bad = 0
    for t in range(100):
        k, s = ((1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3))[t % 6]
        h = random_sparse_hamiltonian(4, k, s, rng)
        for q in range(4):
            for a in range(1, 9):
                e = lie_expand(h, a, q)
                deg = max((popcount(x) for x in e.terms), default=1)
                if len(e.terms) > num_terms_bound(s, k, q) or deg > (2 * k - 2) * q + 1:
                    count_bad += 1
    eps = 0.3
    good = 0
    for t in range(trials):
        r = make_rng(seed, "criterion-11-learn", str(t))
        n_modes = 2 + t % 2
        h = random_sparse_hamiltonian(n_modes, 2, 2, r)
        rho = _random_state(n_modes, r, t)
        ok_t = True
        for q in (0, 1):
            est = learn_greens_derivative(rho, h, q, eps, r)
            exact = greens_derivative_exact(rho, h, q, "jordan_wigner")
            ok_t &= float(np.abs(est.matrix - exact).max()) <= eps
        good += ok_t
    ok = worst <= 1e-9 and count_bad == 0 and good >= math.ceil(0.95 * trials)
    return _finish(
        11, "Green's function derivatives", ok,
        f"expansion deviation {worst:.2e}, term-count violations {count_bad}, learned {good}/{trials} within eps",
        t0, 1200, max_dev=worst,
    )


CRITERIA = [
    criterion_1_algebra,
    criterion_2_uncertainty,
    criterion_3_gyarfas,
    criterion_4_misra_gries,
    criterion_5_kbody,
    criterion_6_clique,
    criterion_7_mmw,
    criterion_8_all_paulis,
    criterion_9_fermionic,
    criterion_10_compression,
    criterion_11_greens,
]


def run_all(seed: int = 0, only=None, echo=print) -> list[CriterionResult]:
    out = []
    for i, fn in enumerate(CRITERIA, start=1):
        if only and i not in only:
            continue
        res = fn(seed)
        if echo:
            echo(res.line())
        out.append(res)
    return out

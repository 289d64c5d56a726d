"""Learning pipelines.

All shot counts are drawn as histograms (multinomial draws over exact
outcome distributions), which is statistically identical to drawing shots one
at a time and keeps every per-observable sum an exact integer. The raw
histograms are kept in ``RunData`` so a compressed record can reproduce every
estimate bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import commgraph as cg
from .fermion import FermionMapping, enumerate_kbody, make_mapping, monomial_to_pauli
from .mmw import MmwConfig, compute_mimicking_state, verify_mimicking
from .pauli import PauliOp, enumerate_all
from .quantum_sim import (
    QuantumState,
    bell_distribution,
    bell_sign_sums,
    from_density_matrix,
    joint_distribution,
)


@dataclass(frozen=True)
class ProtocolConstants:
    batch_constant: float = 4.0  # C in N = 100 C chi / eps^2
    median_factor: float = 8.0  # L = median_factor * ln(|S| / delta)
    bell_constant: float = 32.0
    delta_fail: float = 0.01

    def batch_shots(self, chi: float, eps: float) -> int:
        return math.ceil(100 * self.batch_constant * chi / eps**2)

    def num_batches(self, size: int, delta: float) -> int:
        return max(1, math.ceil(self.median_factor * math.log(max(size, 1) / delta)))

    def bell_samples(self, size: int, eps: float, delta: float) -> int:
        acc = eps**2 / 16
        return math.ceil(self.bell_constant * math.log(2 * max(size, 1) / delta) / acc**2)


DEFAULT_CONSTANTS = ProtocolConstants()


@dataclass
class EstimationReport:
    operators: list
    estimates: np.ndarray
    counts: np.ndarray  # N_P summed over batches (0 where stage 2 never ran)
    metadata: dict = field(default_factory=dict)
    raw: "RunData | None" = None
    extras: dict = field(default_factory=dict)  # in-memory artifacts, not serialized

    def as_dict(self) -> dict:
        return {str(op): float(y) for op, y in zip(self.operators, self.estimates)}

    def errors(self, exact) -> np.ndarray:
        return np.abs(self.estimates - np.asarray(exact))

    def to_json(self) -> dict:
        return {
            "estimates": self.as_dict(),
            "per_operator_counts": {str(op): int(c) for op, c in zip(self.operators, self.counts)},
            "metadata": self.metadata,
        }


@dataclass
class MagnitudeTable:
    operators: list
    u: np.ndarray
    epsilon: float
    s_eps: list  # indices into operators
    bell_counts: np.ndarray
    bell_sums: np.ndarray
    samples: int

    def __post_init__(self):
        assert self.s_eps == select_s_eps(self.u, self.epsilon)

    @property
    def s_eps_ops(self) -> list:
        return [self.operators[i] for i in self.s_eps]


@dataclass
class RunData:
    """Raw measurement data of a two-copy template run."""

    n: int
    epsilon: float
    targets: list  # signed Pauli images of the requested operators
    descriptor: dict
    constants: dict
    bell_counts: np.ndarray  # histogram over the 4**n Bell outcomes
    bell_samples: int
    s_eps: list
    batches: list  # per batch: list of (target-index tuple, patterns, counts)
    seeds: dict = field(default_factory=dict)


# shared estimator ----------------------------------------------------------------


def magnitudes_from_sums(sums, samples: int) -> np.ndarray:
    mean = np.asarray(sums, dtype=np.int64) / samples
    return np.sqrt(np.maximum(0.0, mean))


def select_s_eps(u: np.ndarray, eps: float) -> list:
    return [int(i) for i in np.flatnonzero(np.asarray(u) >= 0.75 * eps)]


def median_of_means(sums: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Median over batches (axis 0) of batch means; a batch with no shots gives 0."""
    sums = np.asarray(sums, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    means = np.divide(sums, counts, out=np.zeros(sums.shape), where=counts > 0)
    return np.clip(np.median(means, axis=0), -1.0, 1.0)


# single-copy stage ----------------------------------------------------------------


SHOT_SAMPLING_CAP = 50_000_000


def _draw_sets(fc: cg.FractionalColoring, shots: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of ``shots`` independent-set draws: (membership rows, counts)."""
    if fc.explicit is not None:
        sets, probs = fc.explicit
        counts = rng.multinomial(shots, probs)
        keep = counts > 0
        return sets[keep], counts[keep]
    if shots > SHOT_SAMPLING_CAP:
        raise ValueError(f"{shots} shots need an explicit set distribution")
    found: dict[bytes, int] = {}
    rows: dict[bytes, np.ndarray] = {}
    left = shots
    while left:
        k = min(left, 100_000)
        draw = fc.sample_many(rng, k)
        packed = np.packbits(draw, axis=1)
        uniq, inv, cnt = np.unique(packed, axis=0, return_inverse=True, return_counts=True)
        inv = np.asarray(inv).ravel()
        for j, key in enumerate(map(bytes, uniq)):
            found[key] = found.get(key, 0) + int(cnt[j])
            if key not in rows:
                rows[key] = draw[np.flatnonzero(inv == j)[0]]
        left -= k
    keys = sorted(found)
    return np.array([rows[k] for k in keys]), np.array([found[k] for k in keys])


def pattern_signs(patterns: np.ndarray, width: int) -> np.ndarray:
    bits = (patterns[:, None] >> np.arange(width)[None, :]) & 1
    return 1 - 2 * bits


def learn_single_copy_fractional(
    rho: QuantumState,
    paulis,
    fc: cg.FractionalColoring,
    eps: float,
    delta_fail: float,
    rng: np.random.Generator,
    consts: ProtocolConstants = DEFAULT_CONSTANTS,
    operators=None,
) -> EstimationReport:
    """Median-of-means estimates from joint measurements of sampled independent sets."""
    paulis = list(paulis)
    if fc.size_chi < 1:
        raise ValueError("fractional coloring size must be at least 1")
    if len(fc.graph) != len(paulis):
        raise ValueError("fractional coloring does not match the observable set")
    m = len(paulis)
    shots = consts.batch_shots(fc.size_chi, eps)
    batches = consts.num_batches(m, delta_fail)
    sums = np.zeros((batches, m), dtype=np.int64)
    counts = np.zeros((batches, m), dtype=np.int64)
    cache: dict[tuple, tuple] = {}
    records = []
    for j in range(batches):
        sets, set_counts = _draw_sets(fc, shots, rng)
        batch = []
        for member, c in zip(sets, set_counts):
            idx = tuple(np.flatnonzero(member).tolist())
            if idx not in cache:
                cache[idx] = joint_distribution(rho, [paulis[i] for i in idx], check=False)
            pats, probs = cache[idx]
            pc = rng.multinomial(int(c), probs)
            keep = pc > 0
            pats, pc = pats[keep], pc[keep].astype(np.int64)
            if idx:
                cols = np.array(idx)
                sums[j, cols] += pc @ pattern_signs(pats, len(idx))
                counts[j, cols] += int(c)
            batch.append((idx, pats, pc))
        records.append(batch)
    est = median_of_means(sums, counts)
    report = EstimationReport(
        list(operators) if operators is not None else paulis,
        est,
        counts.sum(axis=0),
        {
            "epsilon": eps,
            "size_chi": fc.size_chi,
            "batch_shots": shots,
            "batches": batches,
            "copies": shots * batches,
            "min_batch_count": int(counts.min()) if m else 0,
        },
    )
    report.extras["records"] = records
    return report


# two-copy stages -----------------------------------------------------------------------


def learn_magnitudes(
    rho: QuantumState,
    paulis,
    eps: float,
    delta_fail: float,
    rng: np.random.Generator,
    consts: ProtocolConstants = DEFAULT_CONSTANTS,
) -> MagnitudeTable:
    paulis = list(paulis)
    samples = consts.bell_samples(len(paulis), eps, delta_fail)
    counts = rng.multinomial(samples, bell_distribution(rho, rho)).astype(np.int64)
    all_sums = bell_sign_sums(counts, rho.n)
    sums = np.array([all_sums[p.index] for p in paulis], dtype=np.int64)
    u = magnitudes_from_sums(sums, samples)
    return MagnitudeTable(paulis, u, eps, select_s_eps(u, eps), counts, sums, samples)


def clique_audit(mt: MagnitudeTable, exact_limit: int | None = 64) -> int:
    if not mt.s_eps:
        return 0
    return cg.max_clique(cg.build_graph(mt.s_eps_ops), exact_limit)


def recover_signs(
    rho: QuantumState,
    sigma,
    paulis,
    eps: float,
    delta_fail: float,
    rng: np.random.Generator,
    consts: ProtocolConstants = DEFAULT_CONSTANTS,
) -> tuple[np.ndarray, dict]:
    """Signs of ``Tr(P rho)`` from Bell samples of ``rho (x) sigma``.

    The sample mean estimates ``Tr(P rho) Tr(P sigma)``; ``sigma`` is known,
    so multiplying by the sign of ``Tr(P sigma)`` leaves the sign for rho.
    """
    paulis = list(paulis)
    if isinstance(sigma, np.ndarray):
        sigma = from_density_matrix(sigma)
    meta = {"samples": 0, "ambiguous": []}
    if not paulis:
        return np.zeros(0, dtype=np.int64), meta
    samples = consts.bell_samples(len(paulis), eps, delta_fail)
    counts = rng.multinomial(samples, bell_distribution(rho, sigma)).astype(np.int64)
    all_sums = bell_sign_sums(counts, rho.n)
    from .quantum_sim import pauli_expectations

    sig_exp = pauli_expectations(sigma)
    signs = np.empty(len(paulis), dtype=np.int64)
    m_vals = []
    for i, p in enumerate(paulis):
        m = all_sums[p.index] / samples
        m_vals.append(m)
        s_sigma = p.sign * (1 if sig_exp[p.index] >= 0 else -1)
        signs[i] = (1 if m >= 0 else -1) * s_sigma
        if abs(m) < eps**2 / 16:
            meta["ambiguous"].append(str(p))
    meta["samples"] = samples
    meta["m"] = m_vals
    return signs, meta


# engines --------------------------------------------------------------------------------

Engine = Callable[[list], cg.FractionalColoring]


def greedy_engine(ops) -> cg.FractionalColoring:
    g = cg.build_graph(ops)
    return cg.from_coloring(g, cg.greedy_color(g), engine="greedy")


def gyarfas_engine(ops) -> cg.FractionalColoring:
    g = cg.build_graph(ops)
    ell = cg.longest_induced_path_bound(g) if len(g) else 1
    return cg.from_coloring(g, cg.gyarfas_color(g, ell), engine="gyarfas", path_bound=ell)


def misra_gries_engine(ops) -> cg.FractionalColoring:
    g = cg.build_graph(ops)
    return cg.from_coloring(g, cg.misra_gries_1body(ops), engine="misra-gries")


def kbody_engine(ops) -> cg.FractionalColoring:
    return cg.kbody_fractional_coloring(ops)


ENGINES: dict[str, Engine] = {
    "greedy": greedy_engine,
    "gyarfas": gyarfas_engine,
    "misra-gries": misra_gries_engine,
    "kbody": kbody_engine,
}


# pipelines ------------------------------------------------------------------------------


def _split(rng: np.random.Generator, k: int) -> list:
    return rng.spawn(k)


def _as_paulis(operators, mapping: FermionMapping | None) -> list:
    if mapping is None:
        return list(operators)
    return [monomial_to_pauli(m, mapping) for m in operators]


def learn_two_copy_template(
    rho: QuantumState,
    operators,
    engine: Engine | str,
    eps: float,
    rng: np.random.Generator,
    consts: ProtocolConstants = DEFAULT_CONSTANTS,
    mapping: FermionMapping | None = None,
    descriptor: dict | None = None,
) -> EstimationReport:
    """Magnitudes by Bell sampling, then single-copy learning on the survivors."""
    if isinstance(engine, str):
        engine = ENGINES[engine]
    operators = list(operators)
    paulis = _as_paulis(operators, mapping)
    r1, r2 = _split(rng, 2)
    delta = consts.delta_fail / 2
    mt = learn_magnitudes(rho, paulis, eps, delta, r1, consts)
    y = np.zeros(len(operators))
    counts = np.zeros(len(operators), dtype=np.int64)
    meta = {
        "epsilon": eps,
        "delta_fail": consts.delta_fail,
        "s_eps_size": len(mt.s_eps),
        "sample_totals": {"bell_samples": mt.samples, "bell_copies": 2 * mt.samples, "single_copy": 0},
    }
    records: list = []
    if mt.s_eps:
        fc = engine([operators[i] for i in mt.s_eps])
        sub = learn_single_copy_fractional(
            rho, [paulis[i] for i in mt.s_eps], fc, eps, delta, r2, consts
        )
        y[mt.s_eps] = sub.estimates
        counts[mt.s_eps] = sub.counts
        records = [
            [(tuple(mt.s_eps[i] for i in idx), pats, pc) for idx, pats, pc in batch]
            for batch in sub.extras["records"]
        ]
        meta["sample_totals"]["single_copy"] = sub.metadata["copies"]
        meta["coloring"] = {
            "size_chi": fc.size_chi,
            **{k: v for k, v in fc.meta.items() if isinstance(v, (int, float, str))},
        }
        meta["batch_shots"] = sub.metadata["batch_shots"]
        meta["batches"] = sub.metadata["batches"]
    totals = meta["sample_totals"]
    totals["copies"] = totals["bell_copies"] + totals["single_copy"]
    raw = RunData(
        n=rho.n,
        epsilon=eps,
        targets=paulis,
        descriptor=descriptor or {"kind": "explicit"},
        constants=asdict(consts),
        bell_counts=mt.bell_counts,
        bell_samples=mt.samples,
        s_eps=list(mt.s_eps),
        batches=records,
    )
    report = EstimationReport(operators, y, counts, meta, raw)
    report.extras["magnitudes"] = mt
    return report


def learn_all_paulis(
    rho: QuantumState,
    eps: float,
    rng: np.random.Generator,
    consts: ProtocolConstants = DEFAULT_CONSTANTS,
    exact_probes: bool = False,
) -> EstimationReport:
    """Magnitudes, then a mimicking state, then signs from ``rho (x) sigma``."""
    n = rho.n
    if n > 6:
        raise ValueError("all-Pauli learning enumerates 4**n operators; n <= 6")
    paulis = enumerate_all(n)
    r1, r2, r3 = _split(rng, 3)
    delta = consts.delta_fail / 3
    mt = learn_magnitudes(rho, paulis, eps, delta, r1, consts)
    cfg = MmwConfig(n, eps, exact_probes=exact_probes)
    mm = compute_mimicking_state(mt.u, eps, rho, r2, cfg, keep_iterates=False)
    survivors = [paulis[i] for i in mt.s_eps]
    signs, sign_meta = recover_signs(rho, mm.sigma, survivors, eps, delta, r3, consts)
    y = np.zeros(len(paulis))
    y[mt.s_eps] = np.minimum(mt.u[mt.s_eps], 1.0) * signs
    totals = {
        "bell_stage1_samples": mt.samples,
        "bell_stage1_copies": 2 * mt.samples,
        "mmw_probe_copies": mm.probe_copies,
        "bell_stage3_samples": sign_meta["samples"],
        "bell_stage3_copies": sign_meta["samples"],
    }
    totals["copies"] = totals["bell_stage1_copies"] + totals["mmw_probe_copies"] + totals["bell_stage3_copies"]
    meta = {
        "epsilon": eps,
        "delta_fail": consts.delta_fail,
        "s_eps_size": len(mt.s_eps),
        "mmw_iterations": mm.iterations,
        "mmw_T": cfg.T,
        "mmw_reached_T": mm.reached_T,
        "mmw_probe_errors": mm.probe_errors,
        "mimicking_ok": verify_mimicking(mm.sigma, mt.u, eps),
        "ambiguous_signs": sign_meta["ambiguous"],
        "sample_totals": totals,
    }
    report = EstimationReport(paulis, y, np.zeros(len(paulis), dtype=np.int64), meta)
    report.extras["magnitudes"] = mt
    report.extras["mmw"] = mm
    return report


def learn_fermionic(
    rho: QuantumState,
    n_modes: int,
    k: int,
    mapping: FermionMapping | str,
    eps: float,
    rng: np.random.Generator,
    consts: ProtocolConstants = DEFAULT_CONSTANTS,
) -> EstimationReport:
    if k not in (1, 2):
        raise NotImplementedError(f"k={k} fermionic learning is unsupported (k in 1, 2)")
    if isinstance(mapping, str):
        mapping = make_mapping(mapping, n_modes)
    if mapping.n_qubits != rho.n:
        raise ValueError(f"mapping acts on {mapping.n_qubits} qubits, state on {rho.n}")
    ops = enumerate_kbody(n_modes, k)
    engine = misra_gries_engine if k == 1 else kbody_engine
    report = learn_two_copy_template(
        rho, ops, engine, eps, rng, consts, mapping,
        descriptor={"kind": "fermionic", "n_modes": n_modes, "k": k, "mapping": mapping.mapping_kind},
    )
    report.metadata["mapping"] = mapping.mapping_kind
    return report


def report_json(report: EstimationReport) -> str:
    return json.dumps(report.to_json(), sort_keys=True, default=float)

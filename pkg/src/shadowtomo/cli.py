"""Command line runner: learn, color, compress, query, greens, bench, selftest.

Every subcommand reads an optional JSON config (``--config``); explicit flags
override its keys. Reports embed the resolved config, its hash and the library
version, and contain nothing run-dependent beyond that, so equal configs give
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from . import compression as cmp
from .fermion import MajoranaMonomial, enumerate_kbody, make_mapping, monomial_to_pauli, ternary_depth
from .pauli import PauliOp, enumerate_all, enumerate_local
from .protocols import (
    ENGINES,
    learn_all_paulis,
    learn_fermionic,
    learn_two_copy_template,
)
from .quantum_sim import STATE_CAP, expectation, parse_state
from .rng import make_rng

EXIT_USAGE = 2
EXIT_AUDIT = 3


class ConfigError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass
class ExperimentConfig:
    command: str = "learn"
    task: str = "all-pauli"
    n: int | None = None
    n_modes: str | None = None  # "6" or a range "4..8"
    k: int = 1
    epsilon: float = 0.4
    seed: int = 0
    trials: int = 1
    workers: int = 1
    state: str | None = None
    mapping: str = "auto"
    engine: str = "gyarfas"
    oracle: bool = True
    samples: int = 10_000
    q: int = 1
    exact_only: bool = False
    input: str | None = None
    hamiltonian: str | None = None
    record: str | None = None
    pauli: list = field(default_factory=list)
    only: list = field(default_factory=list)
    out: str | None = None

    OUTPUT_KEYS = ("out", "workers")

    @classmethod
    def resolve(cls, file_values: dict, flag_values: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        merged = {}
        for source, vals in (("config", file_values), ("flags", flag_values)):
            for key, val in vals.items():
                key = key.replace("-", "_")
                if key not in known:
                    raise ConfigError(f"{source}.{key}", "unknown field")
                merged[key] = val
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def validate(self):
        if not 0 < self.epsilon < 1:
            raise ConfigError("config.epsilon", "must lie in (0, 1)")
        if self.task not in ("all-pauli", "local-pauli", "fermionic"):
            raise ConfigError("config.task", "expected all-pauli, local-pauli or fermionic")
        if self.mapping not in ("auto", "ternary", "jw"):
            raise ConfigError("config.mapping", "expected auto, ternary or jw")
        if self.engine not in ENGINES:
            raise ConfigError("config.engine", f"expected one of {sorted(ENGINES)}")
        if self.trials < 1:
            raise ConfigError("config.trials", "must be positive")
        if self.n is not None and not 1 <= self.n <= STATE_CAP:
            raise ConfigError("config.n", f"must lie in 1..{STATE_CAP}")
        if self.q < 0:
            raise ConfigError("config.q", "must be nonnegative")

    def canonical(self) -> dict:
        d = asdict(self)
        for key in self.OUTPUT_KEYS:
            d.pop(key)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def modes(self) -> list[int]:
        if self.n_modes is None:
            raise ConfigError("config.n_modes", "required for this task")
        text = str(self.n_modes)
        try:
            if ".." in text:
                lo, hi = text.split("..")
                return list(range(int(lo), int(hi) + 1))
            return [int(text)]
        except ValueError:
            raise ConfigError("config.n_modes", f"cannot parse {text!r}") from None


def _stamp(cfg: ExperimentConfig, body: dict) -> dict:
    return {"version": __version__, "config_hash": cfg.digest(), "config": cfg.canonical(), **body}


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _write(path: str, text: str | bytes):
    mode = "wb" if isinstance(text, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(text)


def _emit(cfg: ExperimentConfig, report: dict, table: str | None = None, blob: bytes | None = None):
    text = _dump(report)
    if cfg.out is None:
        sys.stdout.write(text)
        return
    _write(cfg.out + ".json", text)
    if table is not None:
        _write(cfg.out + ".csv", table)
    if blob is not None:
        _write(cfg.out + ".stdr", blob)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# task plumbing ---------------------------------------------------------------------------


def _mapping_for(cfg: ExperimentConfig, n_modes: int):
    kind = cfg.mapping
    if kind == "auto":
        ternary_qubits = (3 ** ternary_depth(n_modes) - 1) // 2
        kind = "ternary" if ternary_qubits <= STATE_CAP else "jw"
    return make_mapping(kind, n_modes)


def _load_state(cfg: ExperimentConfig, n: int, rng):
    spec = cfg.state or f"haar_random n={n}"
    if os.path.exists(spec):
        with open(spec) as fh:
            spec = fh.read()
    state = parse_state(spec, rng)
    if state.n != n:
        raise ConfigError("config.state", f"state has {state.n} qubits, task needs {n}")
    return state


def _targets(cfg: ExperimentConfig, n_modes: int | None = None):
    """(operators, Pauli images, mapping, qubit count) for the configured task."""
    if cfg.task == "fermionic":
        n_modes = n_modes if n_modes is not None else cfg.modes()[0]
        mp = _mapping_for(cfg, n_modes)
        ops = enumerate_kbody(n_modes, cfg.k)
        return ops, [monomial_to_pauli(o, mp) for o in ops], mp, mp.n_qubits
    if cfg.n is None:
        raise ConfigError("config.n", "required for this task")
    if cfg.task == "local-pauli":
        ops = enumerate_local(cfg.n, cfg.k)
        return ops, ops, None, cfg.n
    ops = enumerate_all(cfg.n)
    return ops, ops, None, cfg.n


def _run_learning(cfg: ExperimentConfig, rng, n_modes: int | None = None, for_record: bool = False):
    ops, paulis, mp, n = _targets(cfg, n_modes)
    state = _load_state(cfg, n, rng)
    if cfg.task == "all-pauli" and not for_record:
        rep = learn_all_paulis(state, cfg.epsilon, rng)
    elif cfg.task == "fermionic" and not for_record:
        rep = learn_fermionic(state, mp.n_modes, cfg.k, mp, cfg.epsilon, rng)
    else:
        engine = cfg.engine
        if cfg.task == "fermionic":
            engine = "misra-gries" if cfg.k == 1 else "kbody"
        desc = {"kind": "all"} if cfg.task == "all-pauli" else {"kind": cfg.task, "k": cfg.k}
        rep = learn_two_copy_template(state, ops, engine, cfg.epsilon, rng, mapping=mp, descriptor=desc)
    return rep, paulis, state


def _audit_failures(meta: dict) -> list[str]:
    bad = []
    if meta.get("mimicking_ok") is False:
        bad.append("mimicking state check failed")
    if meta.get("mmw_reached_T"):
        bad.append("MMW reached T without a mimicking state")
    return bad


# subcommands ---------------------------------------------------------------------------


def cmd_learn(cfg: ExperimentConfig) -> int:
    rng = make_rng(cfg.seed, "learn")
    rep, paulis, state = _run_learning(cfg, rng)
    rows = []
    exact = None
    if cfg.oracle:
        exact = np.array([expectation(state, p) for p in paulis])
    for i, op in enumerate(rep.operators):
        row = [str(op), repr(float(rep.estimates[i]))]
        if exact is not None:
            row += [repr(float(exact[i])), repr(float(abs(rep.estimates[i] - exact[i])))]
        rows.append(row)
    header = ["operator", "estimate"] + (["exact_value", "error"] if exact is not None else [])
    body = rep.to_json()
    if exact is not None:
        body["max_error"] = float(np.abs(rep.estimates - exact).max())
    failures = _audit_failures(rep.metadata)
    body["audit_failures"] = failures
    _emit(cfg, _stamp(cfg, {"report": body, "rows": len(rows)}), _csv(rows, header))
    return EXIT_AUDIT if failures else 0


def _read_operator_file(path: str):
    with open(path) as fh:
        lines = [ln.split("#")[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ConfigError("config.input", "operator file is empty")
    if lines[0].startswith("G["):
        mons = [MajoranaMonomial.from_string(ln, 64) for ln in lines]
        top = max(max(m.indices, default=1) for m in mons)
        n_modes = (top + 1) // 2
        return [MajoranaMonomial.from_string(ln, n_modes) for ln in lines]
    return [PauliOp.from_string(ln) for ln in lines]


def cmd_color(cfg: ExperimentConfig) -> int:
    if cfg.input is None:
        raise ConfigError("config.input", "operator list file required")
    ops = _read_operator_file(cfg.input)
    rng = make_rng(cfg.seed, "color")
    fc = ENGINES[cfg.engine](ops)
    g = fc.graph
    out = {"engine": cfg.engine, "vertices": len(g), "edges": g.num_edges, "properness_checked": True}
    ok = True
    if fc.explicit is not None and cfg.engine != "kbody":
        sets, _ = fc.explicit
        colors = np.argmax(sets, axis=0).tolist()
        ok = all(g.is_independent(np.flatnonzero(s)) for s in sets)
        out.update(num_colors=int(len(sets)), colors=colors)
    else:
        draws = fc.sample_many(rng, cfg.samples)
        ok = all(g.is_independent(np.flatnonzero(r)) for r in np.unique(draws, axis=0))
        freq = draws.mean(axis=0)
        out.update(
            size_chi=fc.size_chi,
            sample_stats={
                "samples": cfg.samples,
                "min_coverage": float(freq.min()) if len(freq) else None,
                "mean_set_size": float(draws.sum(axis=1).mean()),
            },
            meta={k: v for k, v in fc.meta.items() if isinstance(v, (int, float, str))},
        )
    out["proper"] = bool(ok)
    _emit(cfg, _stamp(cfg, out))
    return 0 if ok else EXIT_AUDIT


def cmd_compress(cfg: ExperimentConfig) -> int:
    rng = make_rng(cfg.seed, "compress")
    rep, _, _ = _run_learning(cfg, rng, for_record=True)
    d = cmp.compress(rep.raw, seeds={"seed": cfg.seed, "config_hash": cfg.digest()})
    blob = cmp.serialize(d)
    ok = cmp.deserialize(blob) == d and cmp.predicted_bits(d) == 8 * len(blob)
    info = {
        "bytes": len(blob),
        "bits": 8 * len(blob),
        "scaling_model": cmp.scaling_model(d),
        "bell_rows": int(len(d.bell_rows)),
        "bases": len(d.bases),
        "roundtrip_ok": bool(ok),
    }
    _emit(cfg, _stamp(cfg, info), blob=blob)
    return 0 if ok else EXIT_AUDIT


def cmd_query(cfg: ExperimentConfig) -> int:
    if cfg.record is None:
        raise ConfigError("config.record", "compressed record file required")
    if not cfg.pauli:
        raise ConfigError("config.pauli", "at least one Pauli string required")
    with open(cfg.record, "rb") as fh:
        d = cmp.deserialize(fh.read())
    out = {p: cmp.query_record(d, PauliOp.from_string(p)) for p in cfg.pauli}
    sys.stdout.write(_dump(out if len(out) > 1 else next(iter(out.values()))))
    return 0


def cmd_greens(cfg: ExperimentConfig) -> int:
    from .greens import SparseHamiltonian, greens_derivative_exact, learn_greens_derivative

    if cfg.hamiltonian is None:
        raise ConfigError("config.hamiltonian", "Hamiltonian file required")
    with open(cfg.hamiltonian) as fh:
        lines = fh.read().splitlines()
    if cfg.n_modes is not None:
        n_modes = cfg.modes()[0]
    else:
        top = max(max(MajoranaMonomial.from_string(ln.split("#")[0], 64).indices, default=1)
                  for ln in lines if ln.split("#")[0].strip())
        n_modes = (top + 1) // 2
    h = SparseHamiltonian.from_lines(lines, n_modes)
    mp = _mapping_for(cfg, n_modes)
    rng = make_rng(cfg.seed, "greens")
    state = _load_state(cfg, mp.n_qubits, rng)
    exact = greens_derivative_exact(state, h, cfg.q, mp)
    audits: dict = {"n_modes": n_modes, "k": h.k, "s": h.s, "q": cfg.q, "mapping": mp.mapping_kind}
    mat = exact
    if not cfg.exact_only:
        est = learn_greens_derivative(state, h, cfg.q, cfg.epsilon, rng, mp)
        mat = est.matrix
        audits.update(est.audits)
        audits["max_error"] = float(np.abs(mat - exact).max())
        audits["inner_epsilon"] = est.inner_epsilon
    rows = []
    m = 2 * n_modes
    for a in range(m):
        for b in range(m):
            rows.append([a + 1, b + 1, repr(float(mat[a, b].real)), repr(float(mat[a, b].imag)),
                         repr(float(exact[a, b].real)), repr(float(exact[a, b].imag))])
    table = _csv(rows, ["a", "b", "real", "imag", "exact_real", "exact_imag"])
    ok = audits.get("b_bound_ok", True) and audits.get("num_terms", 0) <= audits.get("num_terms_bound", float("inf"))
    report = _stamp(cfg, {"audits": audits})
    if cfg.out is None:
        sys.stdout.write(table)
        sys.stdout.write(_dump(report))
    else:
        _emit(cfg, report, table)
    return 0 if ok else EXIT_AUDIT


def _bench_trial(cfg: ExperimentConfig, size: int, trial: int) -> list:
    rng = make_rng(cfg.seed, "bench", str(size), str(trial))
    if cfg.task == "fermionic":
        rep, paulis, state = _run_learning(cfg, rng, n_modes=size)
    else:
        sub = ExperimentConfig(**{**asdict(cfg), "n": size})
        rep, paulis, state = _run_learning(sub, rng)
    exact = np.array([expectation(state, p) for p in paulis])
    tot = rep.metadata["sample_totals"]
    bell = sum(v for k, v in tot.items() if k.startswith("bell") and k.endswith("copies"))
    err = float(np.abs(rep.estimates - exact).max())
    return [size, trial, tot["copies"], bell, tot["copies"] - bell, repr(err), int(err <= cfg.epsilon)]


def cmd_bench(cfg: ExperimentConfig) -> int:
    if cfg.task == "fermionic":
        sizes = cfg.modes()
    else:
        sizes = cfg.modes() if cfg.n_modes is not None else [cfg.n or 2]
    jobs = [(s, t) for s in sizes for t in range(cfg.trials)]
    with ThreadPoolExecutor(max_workers=max(cfg.workers, 1)) as pool:
        results = list(pool.map(lambda j: _bench_trial(cfg, *j), jobs))  # map keeps job order
    header = ["size", "trial", "copies", "bell_copies", "other_copies", "max_error", "within_eps"]
    summary = {}
    for s in sizes:
        rs = [r for r in results if r[0] == s]
        summary[str(s)] = {
            "trials": len(rs),
            "within_eps": sum(r[6] for r in rs),
            "mean_copies": float(np.mean([r[2] for r in rs])),
            "mean_bell_copies": float(np.mean([r[3] for r in rs])),
        }
    table = _csv(results, header)
    if cfg.out is None:
        sys.stdout.write(table)
    _emit(cfg, _stamp(cfg, {"summary": summary}), table)
    return 0


def cmd_selftest(cfg: ExperimentConfig) -> int:
    from .acceptance import run_all

    results = run_all(cfg.seed, only=set(cfg.only) or None, echo=None)
    width = max(len(r.title) for r in results)
    print(f"{'#':>2}  {'criterion':<{width}}  result  seconds  summary")
    for r in results:
        print(f"{r.number:>2}  {r.title:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.seconds:7.1f}  {r.summary}")
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


COMMANDS = {
    "learn": cmd_learn,
    "color": cmd_color,
    "compress": cmd_compress,
    "query": cmd_query,
    "greens": cmd_greens,
    "bench": cmd_bench,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    p = argparse.ArgumentParser(prog="shadowtomo", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="JSON config; flags override its keys")
        sp.add_argument("--seed", type=int, default=S)
        sp.add_argument("--out", default=S, help="output prefix (.json/.csv/.stdr)")

    def task(sp):
        sp.add_argument("--task", choices=["all-pauli", "local-pauli", "fermionic"], default=S)
        sp.add_argument("--n", type=int, default=S)
        sp.add_argument("--n-modes", dest="n_modes", default=S)
        sp.add_argument("--k", type=int, default=S)
        sp.add_argument("--epsilon", type=float, default=S)
        sp.add_argument("--state", default=S, help="state file or generator, e.g. 'ghz n=3'")
        sp.add_argument("--mapping", choices=["auto", "ternary", "jw"], default=S)
        sp.add_argument("--engine", choices=sorted(ENGINES), default=S)

    sp = sub.add_parser("learn", help="run a learning pipeline")
    common(sp)
    task(sp)
    sp.add_argument("--no-oracle", dest="oracle", action="store_false", default=S)

    sp = sub.add_parser("color", help="color an operator list")
    common(sp)
    sp.add_argument("input", nargs="?", default=S)
    sp.add_argument("--engine", choices=sorted(ENGINES), default=S)
    sp.add_argument("--samples", type=int, default=S)

    sp = sub.add_parser("compress", help="run the two-copy template and write a compressed record")
    common(sp)
    task(sp)

    sp = sub.add_parser("query", help="query a compressed record")
    sp.add_argument("record", nargs="?", default=S)
    sp.add_argument("--config", default=None)
    sp.add_argument("--pauli", action="append", default=S)

    sp = sub.add_parser("greens", help="Green's function derivative matrix")
    common(sp)
    sp.add_argument("hamiltonian", nargs="?", default=S)
    sp.add_argument("--q", type=int, default=S)
    sp.add_argument("--epsilon", type=float, default=S)
    sp.add_argument("--exact-only", dest="exact_only", action="store_true", default=S)
    sp.add_argument("--n-modes", dest="n_modes", default=S)
    sp.add_argument("--state", default=S)
    sp.add_argument("--mapping", choices=["auto", "ternary", "jw"], default=S)

    sp = sub.add_parser("bench", help="seeded sweep over sizes")
    common(sp)
    task(sp)
    sp.add_argument("--trials", type=int, default=S)
    sp.add_argument("--workers", type=int, default=S)

    sp = sub.add_parser("selftest", help="run the acceptance criteria")
    sp.add_argument("--config", default=None)
    sp.add_argument("--seed", type=int, default=S)
    sp.add_argument("--only", type=int, nargs="*", default=S)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    file_values = {}
    try:
        if config_path:
            with open(config_path) as fh:
                file_values = json.load(fh)
            if not isinstance(file_values, dict):
                raise ConfigError("config", "top level must be an object")
            file_values.pop("command", None)
        cfg = ExperimentConfig.resolve(file_values, {**args, "command": command})
        return COMMANDS[command](cfg)
    except ConfigError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, cmp.CompressedFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

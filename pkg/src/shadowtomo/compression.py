"""Compact classical record of a two-copy run and the query engine over it.

Layout (all integers little-endian)::

    b"STDR1"
    u32 header_len, header (UTF-8 JSON, sorted keys)
    bell block:    u64 rows, then rows * 2n bits (x mask then z mask, MSB first),
                   zero-padded to a byte
    basis block:   u32 bases; per basis: u16 size, then size * (2n + 1) bits
                   (x mask, z mask, sign bit), zero-padded to a byte
    outcome block: u32 batches; per batch: u32 groups; per group:
                   u32 basis index, u64 shots, then shots * g bits, padded,
                   where g is the number of generators of the basis

Only the outcomes of a generating subset of each basis are stored (the first
members, in list order, that are independent over GF(2)); outcomes of the
other members are products of generator outcomes and are rebuilt on read.
Within a group, shots are sorted by outcome pattern.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .pauli import PauliOp, multiply
from .protocols import RunData, magnitudes_from_sums, median_of_means, select_s_eps
from .quantum_sim import signs_for

MAGIC = b"STDR1"


class CompressedFormatError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


@dataclass(frozen=True)
class BasisInfo:
    paulis: tuple
    generators: tuple  # positions of the generating members
    expansion: tuple  # per member: (generator positions, sign)


def _gf2_reduce(vec: int, pivots: dict) -> tuple[int, int]:
    """Reduce ``vec`` against pivot rows; return (remainder, combination mask)."""
    combo = 0
    for bit in sorted(pivots, reverse=True):
        if vec >> bit & 1:
            row, mask = pivots[bit]
            vec ^= row
            combo ^= mask
    return vec, combo


def basis_info(paulis) -> BasisInfo:
    paulis = tuple(paulis)
    if not paulis:
        return BasisInfo((), (), ())
    n = paulis[0].n
    pivots: dict[int, tuple[int, int]] = {}
    gens: list[int] = []
    for pos, p in enumerate(paulis):
        rem, combo = _gf2_reduce((p.x << n) | p.z, pivots)
        if rem:
            g = len(gens)
            gens.append(pos)
            pivots[rem.bit_length() - 1] = (rem, combo | (1 << g))
    expansion = []
    for pos, p in enumerate(paulis):
        if pos in gens:
            expansion.append(((gens.index(pos),), 1))
            continue
        rem, combo = _gf2_reduce((p.x << n) | p.z, pivots)
        assert rem == 0
        used = tuple(g for g in range(len(gens)) if combo >> g & 1)
        prod = PauliOp.identity(n)
        for g in used:
            prod = multiply(prod, paulis[gens[g]])
        # p = sign * prod, with both Hermitian
        rel = (p.phase - prod.phase) % 4
        assert rel in (0, 2), "members of a basis must commute"
        expansion.append((used, 1 if rel == 0 else -1))
    return BasisInfo(paulis, tuple(gens), tuple(expansion))


def _pack_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8).ravel()).tobytes()


def _int_bits(values: np.ndarray, width: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.uint64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    return ((values[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)


def _bits_int(bits: np.ndarray) -> np.ndarray:
    width = bits.shape[1]
    weights = np.uint64(1) << np.arange(width - 1, -1, -1, dtype=np.uint64)
    return (bits.astype(np.uint64) * weights[None, :]).sum(axis=1, dtype=np.uint64)


@dataclass(eq=False)
class CompressedRep:
    header: dict
    bell_rows: np.ndarray  # uint64, one 2n-bit outcome per row
    bases: list  # list of tuples of PauliOp
    batches: list  # per batch: list of (basis index, (shots, g) uint8 generator bits)
    _cache: dict = field(default_factory=dict, repr=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CompressedRep):
            return NotImplemented
        if self.header != other.header or self.bases != other.bases:
            return False
        if not np.array_equal(self.bell_rows, other.bell_rows):
            return False
        if len(self.batches) != len(other.batches):
            return False
        for a, b in zip(self.batches, other.batches):
            if len(a) != len(b):
                return False
            for (ia, ba), (ib, bb) in zip(a, b):
                if ia != ib or not np.array_equal(ba, bb):
                    return False
        return True

    @property
    def n(self) -> int:
        return self.header["n"]


def compress(run: RunData, seeds: dict | None = None) -> CompressedRep:
    """Turn a run's histograms into per-shot rows in a deterministic order."""
    n = run.n
    bell_rows = np.repeat(np.arange(4**n, dtype=np.uint64), run.bell_counts)
    keys = sorted({idx for batch in run.batches for idx, _, _ in batch})
    index_of = {k: i for i, k in enumerate(keys)}
    bases = [tuple(run.targets[i] for i in k) for k in keys]
    infos = [basis_info(b) for b in bases]
    batches = []
    for batch in run.batches:
        groups = []
        for idx, pats, counts in sorted(batch, key=lambda rec: index_of[rec[0]]):
            b = index_of[idx]
            info = infos[b]
            order = np.argsort(pats, kind="stable")
            pats = np.asarray(pats)[order]
            counts = np.asarray(counts)[order]
            gens = np.array(info.generators, dtype=np.int64)
            gen_bits = ((pats[:, None] >> gens[None, :]) & 1).astype(np.uint8)
            _check_consistent(info, pats, gen_bits)
            groups.append((b, np.repeat(gen_bits, counts, axis=0).reshape(-1, len(gens))))
        batches.append(groups)
    header = {
        "format": "STDR1",
        "version": __version__,
        "n": n,
        "epsilon": run.epsilon,
        "descriptor": run.descriptor,
        "targets": [str(p) for p in run.targets] if run.descriptor.get("kind") != "all" else None,
        "constants": run.constants,
        "bell_samples": int(run.bell_samples),
        "seeds": seeds or run.seeds,
    }
    return CompressedRep(header, bell_rows, bases, batches)


def _check_consistent(info: BasisInfo, pats: np.ndarray, gen_bits: np.ndarray):
    rebuilt = _member_bits(info, gen_bits)
    width = len(info.paulis)
    stored = ((pats[:, None] >> np.arange(width)[None, :]) & 1).astype(np.uint8)
    if not np.array_equal(rebuilt, stored):
        raise ValueError("recorded outcomes are not consistent with the basis algebra")


def _member_bits(info: BasisInfo, gen_bits: np.ndarray) -> np.ndarray:
    out = np.zeros((len(gen_bits), len(info.paulis)), dtype=np.uint8)
    for pos, (used, sign) in enumerate(info.expansion):
        col = np.zeros(len(gen_bits), dtype=np.uint8)
        for g in used:
            col ^= gen_bits[:, g]
        out[:, pos] = col ^ (1 if sign < 0 else 0)
    return out


# serialization -------------------------------------------------------------------------


def serialize(rep: CompressedRep) -> bytes:
    n = rep.n
    head = json.dumps(rep.header, sort_keys=True, separators=(",", ":")).encode()
    parts = [MAGIC, struct.pack("<I", len(head)), head]
    parts.append(struct.pack("<Q", len(rep.bell_rows)))
    parts.append(_pack_bits(_int_bits(rep.bell_rows, 2 * n)))
    parts.append(struct.pack("<I", len(rep.bases)))
    for basis in rep.bases:
        parts.append(struct.pack("<H", len(basis)))
        if basis:
            xs = _int_bits(np.array([p.x for p in basis]), n)
            zs = _int_bits(np.array([p.z for p in basis]), n)
            sg = np.array([[0 if p.sign > 0 else 1] for p in basis], dtype=np.uint8)
            parts.append(_pack_bits(np.hstack((xs, zs, sg))))
    parts.append(struct.pack("<I", len(rep.batches)))
    for groups in rep.batches:
        parts.append(struct.pack("<I", len(groups)))
        for b, bits in groups:
            parts.append(struct.pack("<IQ", b, len(bits)))
            parts.append(_pack_bits(bits))
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int, what: str) -> bytes:
        if size < 0 or self.pos + size > len(self.data):
            raise CompressedFormatError(f"truncated {what}", self.pos)
        out = self.data[self.pos:self.pos + size]
        self.pos += size
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def bits(self, count: int, width: int, what: str) -> np.ndarray:
        nbytes = (count * width + 7) // 8
        raw = np.frombuffer(self.take(nbytes, what), dtype=np.uint8)
        return np.unpackbits(raw)[: count * width].reshape(count, width)


def deserialize(data: bytes) -> CompressedRep:
    r = _Reader(data)
    if r.take(len(MAGIC), "magic") != MAGIC:
        raise CompressedFormatError("bad magic", 0)
    (hlen,) = r.unpack("<I", "header length")
    start = r.pos
    try:
        header = json.loads(r.take(hlen, "header").decode())
        n = int(header["n"])
    except (ValueError, KeyError, TypeError) as err:
        raise CompressedFormatError(f"corrupt header ({err})", start) from None
    (rows,) = r.unpack("<Q", "bell row count")
    if rows != header.get("bell_samples"):
        raise CompressedFormatError("bell row count disagrees with header", r.pos - 8)
    bell_rows = _bits_int(r.bits(rows, 2 * n, "bell block")) if rows else np.zeros(0, dtype=np.uint64)
    (nb,) = r.unpack("<I", "basis count")
    bases = []
    for _ in range(nb):
        (size,) = r.unpack("<H", "basis size")
        if size == 0:
            bases.append(())
            continue
        bits = r.bits(size, 2 * n + 1, "basis record")
        xs = _bits_int(bits[:, :n]) if n else np.zeros(size, dtype=np.uint64)
        zs = _bits_int(bits[:, n:2 * n]) if n else np.zeros(size, dtype=np.uint64)
        bases.append(tuple(PauliOp(n, int(x), int(z), 2 * int(s)) for x, z, s in zip(xs, zs, bits[:, 2 * n])))
    infos = [basis_info(b) for b in bases]
    (nbatch,) = r.unpack("<I", "batch count")
    batches = []
    for _ in range(nbatch):
        (ng,) = r.unpack("<I", "group count")
        groups = []
        for _ in range(ng):
            at = r.pos
            b, shots = r.unpack("<IQ", "group header")
            if b >= nb:
                raise CompressedFormatError(f"basis index {b} out of range", at)
            width = len(infos[b].generators)
            bits = r.bits(shots, width, "outcome block") if width else np.zeros((shots, 0), dtype=np.uint8)
            groups.append((b, bits))
        batches.append(groups)
    if r.pos != len(data):
        raise CompressedFormatError("trailing bytes", r.pos)
    return CompressedRep(header, bell_rows, bases, batches)


# queries -------------------------------------------------------------------------------


def _target_list(rep: CompressedRep):
    desc = rep.header["descriptor"]
    if desc.get("kind") == "all":
        return None
    return [PauliOp.from_string(s) for s in rep.header["targets"]]


def query_record(rep: CompressedRep, p: PauliOp) -> dict:
    """Estimate of ``Tr(P rho)`` with its s_eps membership and extrapolation flag."""
    n = rep.n
    if p.n != n:
        raise ValueError("query Pauli acts on the wrong number of qubits")
    if not p.is_hermitian:
        raise ValueError("query Pauli must be Hermitian")
    if p.x == 0 and p.z == 0:
        return {"estimate": float(p.sign), "in_s_eps": True, "extrapolated": False}
    targets = _target_list(rep)
    stored = None
    if targets is None:
        stored = p.unsigned()
    else:
        for t in targets:
            if t.key == p.key:
                stored = t
                break
    extrapolated = stored is None
    hist = rep._cache.get("bell_hist")
    if hist is None:
        # one pass over the rows; later queries touch at most 4**n outcomes
        hist = np.bincount(rep.bell_rows.astype(np.int64), minlength=4**n)
        rep._cache["bell_hist"] = hist
    seen = np.flatnonzero(hist)
    signs = signs_for(p, seen >> n, seen & ((1 << n) - 1))
    total = int((signs * hist[seen]).sum())
    u = magnitudes_from_sums([total], rep.header["bell_samples"])
    eps = rep.header["epsilon"]
    in_s = bool(select_s_eps(u, eps))
    if not in_s or extrapolated:
        return {"estimate": 0.0, "in_s_eps": in_s, "extrapolated": extrapolated}
    infos = rep._cache.setdefault("infos", {})
    sums = np.zeros((len(rep.batches), 1), dtype=np.int64)
    counts = np.zeros((len(rep.batches), 1), dtype=np.int64)
    for j, groups in enumerate(rep.batches):
        for b, bits in groups:
            basis = rep.bases[b]
            pos = next((i for i, q in enumerate(basis) if q.key == stored.key), None)
            if pos is None:
                continue
            if b not in infos:
                infos[b] = basis_info(basis)
            used, sign = infos[b].expansion[pos]
            col = np.zeros(len(bits), dtype=np.int64)
            for g in used:
                col ^= bits[:, g]
            if sign < 0:
                col ^= 1
            sums[j, 0] += len(col) - 2 * int(col.sum())
            counts[j, 0] += len(col)
    est = float(median_of_means(sums, counts)[0])
    if stored.sign != p.sign:
        est = -est
    return {"estimate": est, "in_s_eps": True, "extrapolated": False}


def query(rep: CompressedRep, p: PauliOp) -> float:
    return query_record(rep, p)["estimate"]


def predicted_bits(rep: CompressedRep) -> int:
    """Exact bit count implied by the layout, from the record's own contents."""
    n = rep.n
    head = len(json.dumps(rep.header, sort_keys=True, separators=(",", ":")).encode())
    total = 8 * (len(MAGIC) + 4 + head + 8 + 4 + 4)
    total += 8 * ((len(rep.bell_rows) * 2 * n + 7) // 8)
    for basis in rep.bases:
        total += 16 + 8 * ((len(basis) * (2 * n + 1) + 7) // 8)
    for groups in rep.batches:
        total += 32
        for _, bits in groups:
            total += 96 + 8 * ((bits.size + 7) // 8)
    return total


def scaling_model(rep: CompressedRep) -> float:
    """``n * M_bell + n**2 * N_basis`` with N_basis the number of basis shots."""
    n = rep.n
    shots = sum(len(bits) for groups in rep.batches for _, bits in groups)
    return n * len(rep.bell_rows) + n**2 * shots

"""Commutation graphs and coloring engines.

Vertices are operators (Paulis or Majorana monomials) in the order given;
an edge joins two vertices when the operators anticommute. Engines return a
proper ``Coloring`` or a ``FractionalColoring`` (a sampler over independent
sets with a declared size).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .fermion import MajoranaMonomial
from .pauli import PauliOp, anticommutation_matrix, popcount

PAULI = "pauli"
MAJORANA = "majorana"
ABSTRACT = "abstract"


@dataclass(frozen=True, eq=False)
class CommutationGraph:
    vertices: tuple
    adjacency: np.ndarray
    kind: str = ABSTRACT
    n: int = 0  # qubits for Pauli graphs, modes for Majorana graphs

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.shape != (len(self.vertices), len(self.vertices)):
            raise ValueError("adjacency shape does not match the vertex count")
        if np.any(np.diag(adj)) or np.any(adj != adj.T):
            raise ValueError("adjacency must be symmetric without self-loops")
        adj = adj.copy()
        adj.flags.writeable = False
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "adjacency", adj)

    def __len__(self) -> int:
        return len(self.vertices)

    def neighbors(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[v])

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def num_edges(self) -> int:
        return int(self.adjacency.sum()) // 2

    def induced(self, indices) -> CommutationGraph:
        idx = np.asarray(list(indices), dtype=np.int64)
        return CommutationGraph(
            tuple(self.vertices[i] for i in idx),
            self.adjacency[np.ix_(idx, idx)],
            self.kind,
            self.n,
        )

    def is_independent(self, members) -> bool:
        idx = _as_indices(members, len(self))
        return not self.adjacency[np.ix_(idx, idx)].any()


def _as_indices(members, m: int) -> np.ndarray:
    arr = np.asarray(members)
    if arr.dtype == bool:
        if arr.shape != (m,):
            raise ValueError("membership vector has the wrong length")
        return np.flatnonzero(arr)
    return arr.astype(np.int64).ravel()


def majorana_adjacency(supports) -> np.ndarray:
    s = np.asarray(list(supports), dtype=np.int64)
    deg = np.bitwise_count(s).astype(np.int64)
    overlap = np.bitwise_count(s[:, None] & s[None, :]).astype(np.int64)
    return ((deg[:, None] * deg[None, :] + overlap) & 1).astype(bool)


def build_graph(ops: Sequence) -> CommutationGraph:
    ops = tuple(ops)
    if not ops:
        return CommutationGraph((), np.zeros((0, 0), dtype=bool))
    if all(isinstance(p, PauliOp) for p in ops):
        n = ops[0].n
        if any(p.n != n for p in ops):
            raise ValueError("operators act on different qubit counts")
        return CommutationGraph(ops, anticommutation_matrix(ops), PAULI, n)
    if all(isinstance(p, MajoranaMonomial) for p in ops):
        n = ops[0].n_modes
        if any(p.n_modes != n for p in ops):
            raise ValueError("monomials have different mode counts")
        return CommutationGraph(ops, majorana_adjacency(p.support for p in ops), MAJORANA, n)
    raise ValueError("mixed operator kinds in one graph")


def graph_from_edges(m: int, edges, labels=None) -> CommutationGraph:
    adj = np.zeros((m, m), dtype=bool)
    for a, b in edges:
        adj[a, b] = adj[b, a] = True
    return CommutationGraph(tuple(labels) if labels is not None else tuple(range(m)), adj)


# colorings -------------------------------------------------------------------------


@dataclass(frozen=True)
class Coloring:
    color_of: tuple[int, ...]
    num_colors: int

    def is_proper(self, g: CommutationGraph) -> bool:
        c = np.asarray(self.color_of)
        if len(c) != len(g):
            return False
        return not np.any(g.adjacency & (c[:, None] == c[None, :]))

    def classes(self) -> list[np.ndarray]:
        c = np.asarray(self.color_of)
        return [np.flatnonzero(c == k) for k in range(self.num_colors)]


def _compact(colors) -> Coloring:
    colors = list(colors)
    remap = {c: i for i, c in enumerate(sorted(set(colors)))}
    return Coloring(tuple(remap[c] for c in colors), len(remap))


def check_proper(g: CommutationGraph, col: Coloring) -> Coloring:
    if not col.is_proper(g):
        raise AssertionError("coloring is not proper")
    return col


def greedy_color(g: CommutationGraph) -> Coloring:
    """First-fit coloring in vertex-id order."""
    colors = []
    for v in range(len(g)):
        taken = {colors[u] for u in np.flatnonzero(g.adjacency[v, :v])}
        c = 0
        while c in taken:
            c += 1
        colors.append(c)
    return check_proper(g, _compact(colors))


# cliques and induced paths -----------------------------------------------------


def _bit_rows(adj: np.ndarray) -> list[int]:
    rows = []
    for row in adj:
        mask = 0
        for j in np.flatnonzero(row).tolist():
            mask |= 1 << j
        rows.append(mask)
    return rows


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _max_clique_bits(nbrs: list[int], cand: int) -> int:
    best = 0

    def color_bound(p: int):
        # sequential greedy coloring of the candidates; vertices sorted by color
        order, bounds = [], []
        color = 0
        uncolored = p
        while uncolored:
            color += 1
            avail = uncolored
            while avail:
                v = (avail & -avail).bit_length() - 1
                avail &= ~nbrs[v] & ~(1 << v)
                uncolored &= ~(1 << v)
                order.append(v)
                bounds.append(color)
        return order, bounds

    def expand(size: int, p: int):
        nonlocal best
        order, bounds = color_bound(p)
        for v, b in zip(reversed(order), reversed(bounds)):
            if size + b <= best:
                return
            sub = p & nbrs[v]
            if sub:
                expand(size + 1, sub)
            elif size + 1 > best:
                best = size + 1
            p &= ~(1 << v)

    if cand:
        expand(0, cand)
    return best


def max_clique(g: CommutationGraph, exact_limit: int | None = 64) -> int:
    """Exact clique number by branch and bound.

    Graphs larger than ``exact_limit`` are refused; use ``clique_bounds`` or
    pass ``exact_limit=None`` to force the exact search.
    """
    m = len(g)
    if exact_limit is not None and m > exact_limit:
        raise ValueError(f"exact clique search limited to {exact_limit} vertices; got {m}")
    if m == 0:
        return 0
    return _max_clique_bits(_bit_rows(g.adjacency), (1 << m) - 1)


def clique_bounds(g: CommutationGraph) -> tuple[int, int]:
    """(greedy clique size, degeneracy + 1): a lower and an upper bound on omega."""
    m = len(g)
    if m == 0:
        return 0, 0
    adj = g.adjacency
    lower = 0
    for start in range(m):
        clique = [start]
        for v in np.argsort(-adj.sum(axis=1), kind="stable"):
            if v != start and all(adj[v, u] for u in clique):
                clique.append(int(v))
        lower = max(lower, len(clique))
    deg = adj.sum(axis=1).astype(int)
    alive = np.ones(m, dtype=bool)
    degeneracy = 0
    for _ in range(m):
        v = int(np.argmin(np.where(alive, deg, m + 1)))
        degeneracy = max(degeneracy, int(deg[v]))
        alive[v] = False
        deg[adj[v]] -= 1
    return lower, degeneracy + 1


def greedy_anticommuting_set(adj: np.ndarray, order=None) -> list[int]:
    """Maximal clique grown from the first vertex, scanning in ``order``."""
    order = list(range(len(adj))) if order is None else list(order)
    clique: list[int] = []
    for v in order:
        if all(adj[v, u] for u in clique):
            clique.append(v)
    return clique


def longest_induced_path_bound(g: CommutationGraph) -> int:
    """Structural bound on induced-path length (in vertices) for operator graphs."""
    if g.kind == PAULI:
        return 2 * g.n + 1
    if g.kind == MAJORANA:
        # 2n Majoranas generate the same algebra as n qubits
        return 2 * g.n + 1
    raise ValueError("no structural bound for abstract graphs; use longest_induced_path")


def longest_induced_path(g: CommutationGraph, limit: int = 20) -> int:
    """Exhaustive longest induced path (vertex count); test oracle for small graphs."""
    m = len(g)
    if m > limit:
        raise ValueError(f"exhaustive search limited to {limit} vertices")
    if m == 0:
        return 0
    nbrs = _bit_rows(g.adjacency)
    best = 1

    def extend(path_len: int, end: int, blocked: int):
        nonlocal best
        best = max(best, path_len)
        # blocked holds the path and every neighbour of a non-end path vertex
        for w in _bits(nbrs[end] & ~blocked):
            extend(path_len + 1, w, blocked | nbrs[end] | (1 << w))

    for s in range(m):
        extend(1, s, 1 << s)
    return best


# neighbour-first search and the chi-bounded coloring ---------------------------------


@dataclass(frozen=True)
class NfsTree:
    root: int
    parent: dict
    levels: list

    @property
    def depth(self) -> int:
        return len(self.levels) - 1


def _is_connected(adj: np.ndarray) -> bool:
    if len(adj) <= 1:
        return True
    k, _ = connected_components(csr_matrix(adj), directed=False)
    return k == 1


def _nfs(adj: np.ndarray, seed: int):
    m = len(adj)
    parent = {seed: None}
    depth = {seed: 0}
    stack = [seed]
    while stack:
        v = stack.pop()
        children = [int(w) for w in np.flatnonzero(adj[v]) if int(w) not in parent]
        for w in children:
            parent[w] = v
            depth[w] = depth[v] + 1
        # children are expanded in ascending order, each subtree before the next
        stack.extend(reversed(children))
    if len(parent) != m:
        raise ValueError("graph is not connected")
    levels = [[] for _ in range(max(depth.values()) + 1)]
    for v in sorted(depth):
        levels[depth[v]].append(v)
    return parent, levels


def nfs_tree(g: CommutationGraph, seed_vertex: int = 0) -> NfsTree:
    if not _is_connected(g.adjacency):
        raise ValueError("graph is not connected")
    parent, levels = _nfs(g.adjacency, seed_vertex)
    return NfsTree(seed_vertex, parent, levels)


def _gyarfas(adj: np.ndarray, verts: np.ndarray, out: np.ndarray, base: int) -> int:
    """Color ``verts`` (indices into adj) from color ``base`` on; return colors used."""
    if len(verts) == 0:
        return 0
    sub = adj[np.ix_(verts, verts)]
    if not sub.any():
        out[verts] = base
        return 1
    k, labels = connected_components(csr_matrix(sub), directed=False)
    used = 0
    for comp in range(k):
        local = np.flatnonzero(labels == comp)
        comp_adj = sub[np.ix_(local, local)]
        _, levels = _nfs(comp_adj, 0)
        offset = 0
        for level in levels:
            offset += _gyarfas(adj, verts[local[level]], out, base + offset)
        used = max(used, offset)
    return used


def gyarfas_color(g: CommutationGraph, path_bound: int | None = None) -> Coloring:
    """Recursive NFS-level coloring; uses at most ``path_bound**(omega-1)`` colors."""
    if path_bound is not None and path_bound < 1:
        raise ValueError("path bound must be positive")
    out = np.zeros(len(g), dtype=np.int64)
    _gyarfas(g.adjacency, np.arange(len(g)), out, 0)
    return check_proper(g, _compact(out.tolist()))


# one-body fermions: Misra-Gries edge coloring of the auxiliary graph -------------------


def _pair_of(op) -> tuple[int, int]:
    if not isinstance(op, MajoranaMonomial) or op.degree != 2:
        raise ValueError(f"{op} is not a degree-2 Majorana monomial")
    a, b = op.indices
    return a - 1, b - 1


def misra_gries_edge_coloring(num_vertices: int, edges: list[tuple[int, int]]) -> list[int]:
    """Proper edge coloring with at most max_degree + 1 colors."""
    deg = [0] * num_vertices
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    palette = max(deg, default=0) + 1
    at: list[dict[int, int]] = [dict() for _ in range(num_vertices)]  # color -> neighbour

    def free(x: int) -> int:
        c = 0
        while c in at[x]:
            c += 1
        return c

    def is_free(x: int, c: int) -> bool:
        return c not in at[x]

    def color_edge(x, y, c):
        at[x][c] = y
        at[y][c] = x

    def uncolor(x, y):
        for c, w in list(at[x].items()):
            if w == y:
                del at[x][c]
                del at[y][c]
                return c
        return None

    def edge_color(x, y):
        for c, w in at[x].items():
            if w == y:
                return c
        return None

    for u, v in edges:
        # maximal fan of u starting at v
        fan = [v]
        in_fan = {v}
        grown = True
        while grown:
            grown = False
            last = fan[-1]
            for c, w in sorted(at[u].items()):
                if w not in in_fan and is_free(last, c):
                    fan.append(w)
                    in_fan.add(w)
                    grown = True
                    break
        c = free(u)
        d = free(fan[-1])
        if not is_free(u, d):
            # invert the cd-path from u (it starts with the d-colored edge at u)
            path = [u]
            x, want = u, d
            while want in at[x]:
                y = at[x][want]
                path.append(y)
                x = y
                want = c if want == d else d
            cols = [edge_color(path[i], path[i + 1]) for i in range(len(path) - 1)]
            for i in range(len(path) - 1):
                uncolor(path[i], path[i + 1])
            for i, col in enumerate(cols):
                color_edge(path[i], path[i + 1], c if col == d else d)
        # first fan prefix still valid after the inversion whose tip has d free
        w_pos = None
        for i, w in enumerate(fan):
            if i > 0:
                prev = fan[i - 1]
                cw = edge_color(u, w)
                if cw is None or not is_free(prev, cw):
                    break
            if is_free(w, d):
                w_pos = i
                break
        assert w_pos is not None, "Misra-Gries fan invariant violated"
        # rotate the fan prefix
        for i in range(w_pos):
            nxt = edge_color(u, fan[i + 1])
            uncolor(u, fan[i + 1])
            color_edge(u, fan[i], nxt)
        color_edge(u, fan[w_pos], d)
        assert max(at[u]) < palette

    return [edge_color(u, v) for u, v in edges]


def one_body_aux_degree(ops) -> int:
    deg: dict[int, int] = {}
    for op in ops:
        for a in _pair_of(op):
            deg[a] = deg.get(a, 0) + 1
    return max(deg.values(), default=0)


def misra_gries_1body(ops) -> Coloring:
    ops = list(ops)
    if not ops:
        return Coloring((), 0)
    edges = [_pair_of(op) for op in ops]
    n_vertices = 2 * ops[0].n_modes
    colors = misra_gries_edge_coloring(n_vertices, edges)
    g = build_graph(ops)
    col = check_proper(g, _compact(colors))
    assert col.num_colors <= one_body_aux_degree(ops) + 1
    return col


# fractional colorings ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FractionalColoring:
    """Distribution over independent sets of ``graph`` with declared size ``size_chi``.

    ``sample_many(rng, k)`` returns a ``(k, |V|)`` boolean membership matrix.
    ``explicit`` is ``(sets, probs)`` when the distribution is small enough to list.
    """

    graph: CommutationGraph
    size_chi: float
    sample_many: Callable[[np.random.Generator, int], np.ndarray]
    explicit: tuple[np.ndarray, np.ndarray] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.size_chi < 1 and len(self.graph) > 0:
            raise ValueError("fractional coloring size must be at least 1")

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_many(rng, 1)[0]

    @property
    def explicit_distribution(self):
        if self.explicit is None:
            return None
        sets, probs = self.explicit
        return [(tuple(np.flatnonzero(s).tolist()), float(p)) for s, p in zip(sets, probs)]

    def coverage(self) -> np.ndarray:
        """Exact per-vertex inclusion probability (explicit distributions only)."""
        if self.explicit is None:
            raise ValueError("no explicit distribution")
        sets, probs = self.explicit
        return probs @ sets


def _explicit_sampler(sets: np.ndarray, probs: np.ndarray):
    def sample_many(rng, k):
        return sets[rng.choice(len(probs), size=k, p=probs)]

    return sample_many


def from_explicit(g: CommutationGraph, sets, probs, size_chi=None, **meta) -> FractionalColoring:
    sets = np.asarray(sets, dtype=bool).reshape(-1, len(g))
    probs = np.asarray(probs, dtype=float)
    probs = probs / probs.sum()
    for s in sets:
        if not g.is_independent(s):
            raise ValueError("distribution contains a non-independent set")
    if size_chi is None:
        cov = probs @ sets
        size_chi = 1 / cov.min() if len(g) else 1.0
    return FractionalColoring(g, float(size_chi), _explicit_sampler(sets, probs), (sets, probs), meta)


def from_coloring(g: CommutationGraph, col: Coloring, size_chi=None, **meta) -> FractionalColoring:
    """Uniform distribution over the color classes."""
    c = np.asarray(col.color_of, dtype=np.int64)
    k = max(col.num_colors, 1)
    sets = np.arange(k)[:, None] == c[None, :]
    probs = np.full(k, 1 / k)
    return FractionalColoring(
        g,
        float(size_chi if size_chi is not None else k),
        _explicit_sampler(sets, probs),
        (sets, probs),
        dict(meta, num_colors=col.num_colors),
    )


def f_bound(r: int, omega: int) -> int:
    """Size of the recursive k-body construction as a function of the clique bound."""
    if r < 2:
        raise ValueError("degree must be at least 2")
    if r == 2:
        return omega + 1
    if r % 2:
        return r * omega * f_bound(r - 1, omega)
    return f_bound(r - 1, omega) ** r


EXPLICIT_CAP = 200_000


class _Node:
    """One level of the k-body recursion over a set of supports."""

    def __init__(self, supports: np.ndarray, degree: int, n_modes: int):
        self.supports = supports
        self.degree = degree
        self.m = len(supports)
        adj = majorana_adjacency(supports) if self.m else np.zeros((0, 0), dtype=bool)
        self.adj = adj
        self.children: list[tuple[np.ndarray, _Node]] = []
        if self.m == 0:
            self.size = 1
            self.omega = 0
            return
        if degree == 2:
            self._init_base(n_modes)
        elif degree % 2:
            self._init_odd(n_modes)
        else:
            self._init_even(n_modes)

    def _init_base(self, n_modes):
        edges = []
        for s in self.supports.tolist():
            a = (s & -s).bit_length() - 1
            b = (s ^ (1 << a)).bit_length() - 1
            edges.append((a, b))
        colors = _compact(misra_gries_edge_coloring(2 * n_modes, edges))
        self.color_of = np.asarray(colors.color_of, dtype=np.int64)
        self.num_colors = colors.num_colors
        star = one_body_aux_degree_from_edges(edges)
        self.omega = max(star, len(greedy_anticommuting_set(self.adj)))
        self.size = self.num_colors

    def _init_odd(self, n_modes):
        witness = greedy_anticommuting_set(self.adj)
        self.omega_here = len(witness)
        index_mask = 0
        for v in witness:
            index_mask |= int(self.supports[v])
        self.index_set = [i for i in range(2 * n_modes) if index_mask >> i & 1]
        assigned = np.zeros(self.m, dtype=bool)
        for i in self.index_set:
            member = ((self.supports >> i) & 1).astype(bool) & ~assigned
            if member.any():
                assigned |= member
                idx = np.flatnonzero(member)
                child = _Node(self.supports[idx] ^ (1 << i), self.degree - 1, n_modes)
                self.children.append((idx, child))
        assert assigned.all(), "odd-degree partition does not cover the vertex set"
        self.size = len(self.children) * max(c.size for _, c in self.children)
        self.omega = max([self.omega_here] + [c.omega for _, c in self.children])

    def _init_even(self, n_modes):
        for i in range(2 * n_modes):
            member = ((self.supports >> i) & 1).astype(bool)
            if member.any():
                idx = np.flatnonzero(member)
                child = _Node(self.supports[idx] ^ (1 << i), self.degree - 1, n_modes)
                self.children.append((idx, child))
        self.omega = max([len(greedy_anticommuting_set(self.adj))] + [c.omega for _, c in self.children])
        # guaranteed per-vertex coverage is the product over the vertex's indices
        log_cov = np.zeros(self.m)
        for idx, c in self.children:
            log_cov[idx] += np.log(c.size)
        self.size = int(round(np.exp(log_cov.max())))

    # sampling ----------------------------------------------------------------
    def sample_many(self, rng, k: int) -> np.ndarray:
        out = np.zeros((k, self.m), dtype=bool)
        if self.m == 0 or k == 0:
            return out
        if self.degree == 2:
            chosen = rng.integers(0, self.num_colors, size=k)
            return chosen[:, None] == self.color_of[None, :]
        if self.degree % 2:
            branch = rng.integers(0, len(self.children), size=k)
            for b, (idx, child) in enumerate(self.children):
                rows = np.flatnonzero(branch == b)
                if len(rows):
                    out[np.ix_(rows, idx)] = child.sample_many(rng, len(rows))
            return out
        out[:] = True
        for idx, child in self.children:
            picked = child.sample_many(rng, k)
            out[:, idx] &= picked
        return out

    def explicit(self, cap: int = EXPLICIT_CAP):
        """Exact distribution as ``{membership mask: prob}`` or None if too large."""
        if self.m == 0:
            return {0: 1.0}
        if self.degree == 2:
            dist = {}
            for c in range(self.num_colors):
                mask = 0
                for v in np.flatnonzero(self.color_of == c).tolist():
                    mask |= 1 << v
                dist[mask] = 1 / self.num_colors
            return dist
        child_dists = []
        for idx, child in self.children:
            d = child.explicit(cap)
            if d is None:
                return None
            lifted = {}
            for mask, p in d.items():
                big = 0
                for j in _bits(mask):
                    big |= 1 << int(idx[j])
                lifted[big] = lifted.get(big, 0.0) + p
            child_dists.append((idx, lifted))
        if self.degree % 2:
            w = 1 / len(child_dists)
            dist: dict[int, float] = {}
            for _, d in child_dists:
                for mask, p in d.items():
                    dist[mask] = dist.get(mask, 0.0) + w * p
            return dist
        full = (1 << self.m) - 1
        dist = {full: 1.0}
        for idx, d in child_dists:
            region = 0
            for j in idx.tolist():
                region |= 1 << j
            nxt: dict[int, float] = {}
            for alive, p in dist.items():
                for picked, q in d.items():
                    key = alive & ~(region & ~picked)
                    nxt[key] = nxt.get(key, 0.0) + p * q
            if len(nxt) > cap:
                return None
            dist = nxt
        return dist


def one_body_aux_degree_from_edges(edges) -> int:
    deg: dict[int, int] = {}
    for a, b in edges:
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1
    return max(deg.values(), default=0)


def kbody_fractional_coloring(ops, explicit_cap: int = EXPLICIT_CAP) -> FractionalColoring:
    """Recursive fractional coloring for monomials of one even or odd degree r >= 2.

    ``size_chi`` is the recursion's size function evaluated at ``omega_used``,
    the largest clique witness met anywhere in the recursion. The tighter
    size actually guaranteed by the constructed sampler is kept in
    ``meta["constructive_chi"]``.
    """
    ops = list(ops)
    g = build_graph(ops)
    if not ops:
        return FractionalColoring(g, 1.0, lambda rng, k: np.zeros((k, 0), dtype=bool), None, {})
    degrees = {op.degree for op in ops}
    if len(degrees) != 1:
        raise ValueError("monomials of mixed degree")
    r = degrees.pop()
    if r < 2:
        raise ValueError("degree must be at least 2")
    supports = np.array([op.support for op in ops], dtype=np.int64)
    root = _Node(supports, r, ops[0].n_modes)
    omega = max(root.omega, 1)
    size = f_bound(r, omega)
    assert root.size <= size
    explicit = None
    dist = root.explicit(explicit_cap)
    if dist is not None:
        masks = sorted(dist)
        sets = np.array([[m >> v & 1 for v in range(len(ops))] for m in masks], dtype=bool)
        probs = np.array([dist[m] for m in masks])
        explicit = (sets, probs / probs.sum())
    meta = {"degree": r, "omega_used": omega, "constructive_chi": root.size, "bound": size}
    return FractionalColoring(g, float(size), root.sample_many, explicit, meta)


# commutation index ------------------------------------------------------------------


def _pauli_dense_stack(paulis) -> np.ndarray:
    from .pauli import dense_matrix

    return np.array([dense_matrix(p) for p in paulis])


def estimate_commutation_index(paulis, trials: int = 20, seed: int = 0, steps: int = 50) -> float:
    """Heuristic lower estimate of max over pure states of the mean squared expectation.

    Restarts alternate Haar-random states and product eigenstates of random
    members of the set; each restart climbs by replacing the state with the
    top eigenvector of ``sum_P <P> P``, which never decreases the objective.
    """
    from .quantum_sim import haar_random, product_state
    from .rng import make_rng

    paulis = list(paulis)
    if not paulis:
        raise ValueError("empty operator set")
    n = paulis[0].n
    if n > 8:
        raise ValueError("commutation-index estimation capped at 8 qubits")
    rng = make_rng(seed, "commutation-index")
    mats = _pauli_dense_stack([p.hermitian() for p in paulis])
    eig = {"X": ("+", "-"), "Y": ("r", "l"), "Z": ("0", "1"), "I": ("0", "1")}

    def score(psi):
        vals = np.einsum("i,kij,j->k", psi.conj(), mats, psi).real
        return float(np.mean(vals**2)), vals

    best = 0.0
    for t in range(max(trials, 1)):
        if t % 2 == 0:
            psi = haar_random(n, rng).vectors[0]
        else:
            label = paulis[int(rng.integers(len(paulis)))].label
            psi = product_state([eig[ch][int(rng.integers(2))] for ch in label]).vectors[0]
        val, exps = score(psi)
        for _ in range(steps):
            a = np.einsum("k,kij->ij", exps, mats)
            _, vecs = np.linalg.eigh(a)
            new = vecs[:, -1]
            new_val, new_exps = score(new)
            if new_val <= val + 1e-13:
                break
            psi, val, exps = new, new_val, new_exps
        best = max(best, val)
    return best

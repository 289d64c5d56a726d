import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowtomo import commgraph as cg
from shadowtomo.fermion import MajoranaMonomial, enumerate_kbody
from shadowtomo.pauli import PauliOp, enumerate_all
from shadowtomo.rng import make_rng

PAULI3 = enumerate_all(3)[1:]
G_P3 = cg.build_graph(PAULI3)
ONE_BODY8 = enumerate_kbody(8, 1)


def _nx(g):
    return nx.from_numpy_array(g.adjacency.astype(int))


def _nx_omega(g):
    if len(g) == 0:
        return 0
    return max(len(c) for c in nx.find_cliques(_nx(g)))


@st.composite
def pauli_subgraphs(draw):
    keep = draw(st.lists(st.booleans(), min_size=len(PAULI3), max_size=len(PAULI3)))
    return G_P3.induced([i for i, k in enumerate(keep) if k])


def test_graph_kinds_and_edges():
    g = cg.build_graph([PauliOp.from_string(s) for s in ["XI", "ZI", "IZ"]])
    assert g.kind == "pauli" and g.n == 2
    assert g.num_edges == 1
    m = cg.build_graph(enumerate_kbody(2, 1))
    # one-body monomials anticommute exactly when they share one Majorana
    assert m.num_edges == 12


def test_c5_nfs_levels():
    g = cg.graph_from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
    tree = cg.nfs_tree(g, 0)
    assert tree.levels == [[0], [1, 4], [2], [3]]
    assert tree.parent == {0: None, 1: 0, 4: 0, 2: 1, 3: 2}
    assert tree.depth == 3


def test_nfs_disconnected_raises():
    with pytest.raises(ValueError):
        cg.nfs_tree(cg.graph_from_edges(3, [(0, 1)]))


def test_edgeless_graph_one_color():
    g = cg.graph_from_edges(4, [])
    assert cg.gyarfas_color(g).num_colors == 1


@given(pauli_subgraphs())
def test_max_clique_matches_networkx(g):
    assert cg.max_clique(g, exact_limit=None) == _nx_omega(g)


@given(pauli_subgraphs())
def test_clique_bounds_bracket(g):
    lo, hi = cg.clique_bounds(g)
    w = cg.max_clique(g, exact_limit=None)
    assert lo <= w <= hi


def test_max_clique_refuses_large_without_override():
    with pytest.raises(ValueError):
        cg.max_clique(cg.build_graph(enumerate_all(4)), exact_limit=64)


@given(pauli_subgraphs())
def test_gyarfas_proper_and_bounded(g):
    col = cg.gyarfas_color(g)
    assert col.is_proper(g)
    if len(g):
        w = cg.max_clique(g, exact_limit=None)
        assert col.num_colors <= 7 ** (w - 1)


@given(pauli_subgraphs())
def test_nfs_levels_lose_a_clique_unit(g):
    if len(g) == 0:
        return
    comp = max(nx.connected_components(_nx(g)), key=len)
    sub = g.induced(sorted(comp))
    w = cg.max_clique(sub, exact_limit=None)
    tree = cg.nfs_tree(sub, 0)
    for level in tree.levels[1:]:
        assert cg.max_clique(sub.induced(level), exact_limit=None) <= max(w - 1, 1)


@given(pauli_subgraphs())
def test_nfs_depth_below_induced_path(g):
    if len(g) == 0 or len(g) > 18:
        return
    comp = sorted(max(nx.connected_components(_nx(g)), key=len))
    sub = g.induced(comp)
    assert cg.nfs_tree(sub, 0).depth <= cg.longest_induced_path(sub) - 1


def test_longest_induced_path_small_cases():
    c5 = cg.graph_from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
    assert cg.longest_induced_path(c5) == 4
    p4 = cg.graph_from_edges(4, [(0, 1), (1, 2), (2, 3)])
    assert cg.longest_induced_path(p4) == 4
    k4 = cg.graph_from_edges(4, [(a, b) for a in range(4) for b in range(a + 1, 4)])
    assert cg.longest_induced_path(k4) == 2


def test_path_bound_for_operator_graphs():
    assert cg.longest_induced_path_bound(G_P3) == 7
    with pytest.raises(ValueError):
        cg.longest_induced_path_bound(cg.graph_from_edges(2, [(0, 1)]))


@given(st.lists(st.booleans(), min_size=len(ONE_BODY8), max_size=len(ONE_BODY8)))
def test_misra_gries_within_omega_plus_one(keep):
    ops = [o for o, k in zip(ONE_BODY8, keep) if k]
    col = cg.misra_gries_1body(ops)
    g = cg.build_graph(ops)
    assert col.is_proper(g)
    if ops:
        assert col.num_colors <= cg.max_clique(g, exact_limit=None) + 1


def test_misra_gries_on_complete_graph_edges():
    # K5 has class-two chromatic index 5 = Delta + 1
    edges = [(a, b) for a in range(5) for b in range(a + 1, 5)]
    colors = cg.misra_gries_edge_coloring(5, edges)
    assert max(colors) + 1 == 5
    for i, (a, b) in enumerate(edges):
        for j, (c, d) in enumerate(edges[:i]):
            if {a, b} & {c, d}:
                assert colors[i] != colors[j]


def test_greedy_color_is_proper():
    col = cg.greedy_color(G_P3)
    assert col.is_proper(G_P3)


def test_f_bound_values():
    assert cg.f_bound(2, 3) == 4
    assert cg.f_bound(3, 2) == 3 * 2 * 3
    assert cg.f_bound(4, 1) == (3 * 1 * 2) ** 4


def test_kbody_one_body_size_is_omega_plus_one():
    ops = enumerate_kbody(3, 1)
    fc = cg.kbody_fractional_coloring(ops)
    cov = fc.coverage()
    assert fc.size_chi == fc.meta["omega_used"] + 1
    assert np.allclose(cov, cov[0])


@pytest.mark.parametrize("n_modes", [3, 4])
def test_kbody_samples_independent_and_cover(n_modes):
    ops = enumerate_kbody(n_modes, 2)
    fc = cg.kbody_fractional_coloring(ops)
    rng = make_rng(0, "kbody", n_modes)
    draws = fc.sample_many(rng, 10_000)
    for row in np.unique(draws, axis=0):
        assert fc.graph.is_independent(np.flatnonzero(row))
    cov = fc.coverage()
    assert cov.min() >= 1 / fc.size_chi
    assert cov.min() >= 1 / fc.meta["constructive_chi"] - 1e-12
    freq = draws.mean(axis=0)
    sigma = np.sqrt(cov * (1 - cov) / len(draws))
    assert np.all(np.abs(freq - cov) <= 5 * sigma + 1e-12)


def test_kbody_rejects_mixed_degree():
    ops = [MajoranaMonomial.from_indices(3, [1, 2]), MajoranaMonomial.from_indices(3, [1, 2, 3, 4])]
    with pytest.raises(ValueError):
        cg.kbody_fractional_coloring(ops)


def test_commutation_index_examples():
    xyz = [PauliOp.from_string(s) for s in "XYZ"]
    assert cg.estimate_commutation_index(xyz, trials=6) == pytest.approx(1 / 3, abs=1e-9)
    local = [PauliOp.from_string(s) for s in ["ZI", "IZ"]]
    assert cg.estimate_commutation_index(local, trials=4) == pytest.approx(1.0, abs=1e-9)
    assert cg.estimate_commutation_index([PauliOp.from_string("Z")], trials=2) == pytest.approx(1.0)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowtomo.fermion import MajoranaMonomial, make_mapping
from shadowtomo.greens import (
    SparseHamiltonian,
    coloring_bound,
    degree_bound,
    dense_nested_commutator,
    expansion_operator,
    greens_derivative_exact,
    greens_finite_difference,
    learn_greens_derivative,
    lie_expand,
    num_terms_bound,
    random_sparse_hamiltonian,
)
from shadowtomo.quantum_sim import haar_random, product_state, random_mixed
from shadowtomo.rng import make_rng

from conftest import dense_close


def test_single_quadratic_term():
    # L_H(c1) = i[i c1 c2, c1] = 2 c2
    h = SparseHamiltonian.from_lines(["G[1,2]"], 1)
    assert lie_expand(h, 1, 1).terms == {0b10: 2.0}
    assert lie_expand(h, 2, 1).terms == {0b01: -2.0}
    assert lie_expand(h, 1, 2).terms == {0b01: -4.0}


def test_parse_hamiltonian_and_sparsity():
    h = SparseHamiltonian.from_lines(["G[1,2]*0.5", "G[2,3,4,5]*-0.3", "# comment", "G[3,6]"], 3)
    assert h.k == 2 and h.s == 2
    assert [t.coefficient for t in h.terms] == [0.5, -0.3, 1.0]
    with pytest.raises(ValueError):
        SparseHamiltonian(3, (MajoranaMonomial.from_indices(3, [1, 2, 3]),), 2, 3)
    with pytest.raises(ValueError):
        SparseHamiltonian(2, tuple(MajoranaMonomial.from_indices(2, p) for p in ([1, 2], [1, 3])), 1, 1)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 2), st.integers(1, 3), st.integers(0, 3))
def test_expansion_matches_dense_nested_commutator(seed, n_modes, k, s, q):
    rng = make_rng(seed, "greens")
    h = random_sparse_hamiltonian(n_modes, k, s, rng)
    mp = make_mapping("jw", n_modes)
    a = int(rng.integers(1, 2 * n_modes + 1))
    e = lie_expand(h, a, q)
    assert dense_close(expansion_operator(e, mp), dense_nested_commutator(h, a, q, mp))


@given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.integers(1, 3), st.integers(1, 4))
def test_term_count_and_degree_bounds(seed, k, s, q):
    rng = make_rng(seed, "bounds")
    h = random_sparse_hamiltonian(4, k, s, rng)
    for a in range(1, 9):
        e = lie_expand(h, a, q)
        assert len(e.terms) <= num_terms_bound(s, k, q)
        assert all(bin(x).count("1") <= degree_bound(k, q) for x in e.terms)


def test_bound_formulas():
    assert num_terms_bound(3, 2, 1) == 3
    assert num_terms_bound(3, 2, 3) == 27 * 16 * 2
    assert degree_bound(2, 3) == 7
    assert coloring_bound(2, 1, 1, 3) == 4 * 2 * 8 * 1 * 1 * 3


@pytest.mark.parametrize("q", [0, 1, 2])
def test_exact_derivative_matches_finite_difference(q):
    rng = make_rng(q, "fd")
    h = random_sparse_hamiltonian(3, 2, 2, rng)
    rho = random_mixed(3, 2, rng)
    ex = greens_derivative_exact(rho, h, q, "jw")
    fd = greens_finite_difference(rho, h, q, "jw")
    if q == 0:
        np.fill_diagonal(fd, 1.0)
    assert dense_close(ex, fd, 1e-5)


def test_q0_matrix_is_two_point_function():
    rho = product_state("0")
    g = greens_derivative_exact(rho, SparseHamiltonian(1, (), 1, 0), 0, "jw")
    # i c1 c2 = -Z, so Tr(i c1 c2 |0><0|) = -1
    assert np.allclose(g, [[1, -1], [1, 1]])


@pytest.mark.parametrize("q", [0, 1])
def test_learned_derivative_within_eps(q):
    rng = make_rng(40 + q, "learn")
    h = random_sparse_hamiltonian(3, 2, 2, rng)
    rho = haar_random(3, rng)
    est = learn_greens_derivative(rho, h, q, 0.3, rng, "jw")
    exact = greens_derivative_exact(rho, h, q, "jw")
    assert np.abs(est.matrix - exact).max() <= 0.3
    assert est.audits["b_bound_ok"]
    assert est.audits["num_terms"] <= est.audits["num_terms_bound"]
    assert est.audits["num_colors"] <= est.audits["coloring_bound"]


def test_zero_hamiltonian_derivative_vanishes():
    h = SparseHamiltonian(2, (), 1, 0)
    est = learn_greens_derivative(haar_random(2, make_rng(0)), h, 1, 0.3, make_rng(1))
    assert np.allclose(est.matrix, 0)

import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowtomo.fermion import (
    MajoranaMonomial,
    enumerate_degree,
    enumerate_kbody,
    hermitian_phase,
    jordan_wigner_mapping,
    make_mapping,
    monomial_commutes,
    monomial_to_pauli,
    ordered_product_sign,
    support_to_pauli,
    ternary_tree_mapping,
)
from shadowtomo.pauli import commutes, dense_matrix, popcount

from conftest import dense_close


def test_ternary_images_four_modes():
    mp = ternary_tree_mapping(4)
    assert [str(p) for p in mp.majorana_paulis] == [
        "XXII", "XYII", "XZII", "YIXI", "YIYI", "YIZI", "ZIIX", "ZIIY",
    ]
    assert mp.n_qubits == 4


def test_ternary_qubit_counts():
    # complete ternary trees have (3**depth - 1) / 2 internal nodes
    assert ternary_tree_mapping(1).n_qubits == 1
    assert ternary_tree_mapping(4).n_qubits == 4
    assert ternary_tree_mapping(13).n_qubits == 13


def test_jordan_wigner_images():
    assert [str(p) for p in jordan_wigner_mapping(2).majorana_paulis] == ["XI", "YI", "ZX", "ZY"]


def test_known_monomial_images():
    jw = jordan_wigner_mapping(2)
    # i c1 c2 = -Z on the first mode; the full product is the parity ZZ
    assert str(monomial_to_pauli(MajoranaMonomial.from_indices(2, [1, 2]), jw)) == "-ZI"
    assert str(monomial_to_pauli(MajoranaMonomial.from_indices(2, [1, 2, 3, 4]), jw)) == "ZZ"


def test_parse_monomial():
    m = MajoranaMonomial.from_string("G[1,4]*-0.5", 2)
    assert m.indices == (1, 4) and m.coefficient == -0.5
    assert str(m) == "G[1,4]*-0.5"
    with pytest.raises(ValueError):
        MajoranaMonomial.from_string("G[1,1]", 2)
    with pytest.raises(ValueError):
        MajoranaMonomial.from_string("G[5]", 2)


def test_enumeration_counts():
    assert len(enumerate_kbody(4, 1)) == comb(8, 2)
    assert len(enumerate_kbody(4, 2)) == comb(8, 4)
    assert len(enumerate_degree(3, 3)) == comb(6, 3)


@pytest.mark.parametrize("kind", ["jw", "ternary"])
@pytest.mark.parametrize("n_modes", [1, 2, 3])
def test_images_are_hermitian_and_square_to_one(kind, n_modes):
    mp = make_mapping(kind, n_modes)
    dim = 1 << mp.n_qubits
    for x in range(1 << (2 * n_modes)):
        m = dense_matrix(support_to_pauli(x, mp))
        assert dense_close(m, m.conj().T)
        assert dense_close(m @ m, np.eye(dim))


def test_invalid_mapping_rejected():
    from shadowtomo.fermion import FermionMapping
    from shadowtomo.pauli import PauliOp

    with pytest.raises(ValueError):
        FermionMapping(1, (PauliOp.from_string("X"), PauliOp.from_string("X")), "bad")


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 4**n - 1), st.integers(0, 4**n - 1))))
def test_ordered_product_sign_matches_dense(args):
    n, x, y = args
    mp = jordan_wigner_mapping(n)
    cs = [dense_matrix(p) for p in mp.majorana_paulis]

    def ordered(s):
        out = np.eye(1 << n, dtype=complex)
        for a in range(2 * n):
            if s >> a & 1:
                out = out @ cs[a]
        return out

    assert dense_close(ordered(x) @ ordered(y), ordered_product_sign(x, y) * ordered(x ^ y))


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 4**n - 1), st.integers(0, 4**n - 1))))
def test_commutation_rule_matches_images(args):
    n, x, y = args
    for kind in ("jw", "ternary"):
        mp = make_mapping(kind, n)
        assert monomial_commutes(x, y) == commutes(support_to_pauli(x, mp), support_to_pauli(y, mp))


def test_hermitian_phase_values():
    assert [hermitian_phase(d) for d in range(6)] == [0, 0, 1, 3, 2, 2]

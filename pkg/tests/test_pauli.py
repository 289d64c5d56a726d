import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowtomo.pauli import (
    PauliOp,
    anticommutation_matrix,
    apply,
    commutes,
    dense_matrix,
    enumerate_all,
    enumerate_local,
    multiply,
)

from conftest import dense_close


@st.composite
def paulis(draw, n=None):
    n = n if n is not None else draw(st.integers(1, 4))
    x = draw(st.integers(0, (1 << n) - 1))
    z = draw(st.integers(0, (1 << n) - 1))
    return PauliOp(n, x, z, draw(st.integers(0, 3)))


@st.composite
def pauli_pairs(draw):
    n = draw(st.integers(1, 4))
    return draw(paulis(n)), draw(paulis(n))


def test_parse_and_print_roundtrip():
    for text in ["XIZ", "-XIZ", "+iY", "-iZZ", "I"]:
        assert str(PauliOp.from_string(text)) == text
    assert str(PauliOp.from_string("+XY")) == "XY"


def test_bad_letter():
    with pytest.raises(ValueError):
        PauliOp.from_string("XQ")


def test_single_qubit_table():
    # X Y = iZ, Y Z = iX, Z X = iY
    x, y, z = (PauliOp.from_string(s) for s in "XYZ")
    assert multiply(x, y) == PauliOp.from_string("+iZ")
    assert multiply(y, z) == PauliOp.from_string("+iX")
    assert multiply(z, x) == PauliOp.from_string("+iY")
    assert multiply(y, x) == PauliOp.from_string("-iZ")


def test_canonical_index_is_first_qubit_most_significant():
    p = PauliOp.from_string("XZ")
    assert (p.x, p.z) == (0b10, 0b01)
    assert p.index == 0b10 << 2 | 0b01
    assert [q.label for q in enumerate_all(1)] == ["I", "Z", "X", "Y"]


def test_dense_matrix_of_y():
    assert dense_close(dense_matrix(PauliOp.from_string("Y")), [[0, -1j], [1j, 0]])


@given(pauli_pairs())
def test_product_matches_dense(pair):
    p, q = pair
    assert dense_close(dense_matrix(p) @ dense_matrix(q), dense_matrix(multiply(p, q)))


@given(pauli_pairs())
def test_commutation_matches_dense(pair):
    p, q = pair
    a, b = dense_matrix(p), dense_matrix(q)
    assert commutes(p, q) == dense_close(a @ b, b @ a)


@given(pauli_pairs())
def test_commutes_symmetric(pair):
    p, q = pair
    assert commutes(p, q) == commutes(q, p)


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(paulis(n), paulis(n), paulis(n))))
def test_associative(triple):
    a, b, c = triple
    assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))


@given(paulis())
def test_square_is_phase_times_identity(p):
    sq = multiply(p, p)
    assert sq.x == 0 and sq.z == 0
    if p.is_hermitian:
        assert sq.phase == 0


@given(paulis(), st.data())
def test_apply_matches_dense(p, data):
    vec = np.array(data.draw(st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                                      min_size=1 << p.n, max_size=1 << p.n)))
    assert dense_close(apply(p, vec), dense_matrix(p) @ vec)


def test_local_enumeration_counts():
    assert len(enumerate_local(4, 2)) == 9 * 6
    assert len(enumerate_all(3)) == 64


def test_anticommutation_matrix_symmetric():
    ops = enumerate_all(2)
    a = anticommutation_matrix(ops)
    assert (a == a.T).all() and not a.diagonal().any()
    # every non-identity Pauli anticommutes with exactly half of all Paulis
    assert a.sum() == 15 * 8

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowtomo.pauli import PauliOp, commutes, dense_matrix, enumerate_all
from shadowtomo.quantum_sim import (
    BellSample,
    basis_state,
    bell_distribution,
    bell_sample_counts,
    bell_sign_sum,
    bell_sign_sums,
    expectation,
    ghz,
    haar_random,
    joint_distribution,
    maximally_mixed,
    outcome_signs,
    parse_state,
    pauli_expectations,
    product_state,
    random_mixed,
    sample_commuting_counts,
    sign_of,
    wht,
)
from shadowtomo.rng import make_rng

from conftest import dense_close


def _bell_vectors(n):
    """Dense (Q (x) 1)|Phi+>^n for every outcome, copy A first."""
    d = 1 << n
    phi = np.eye(d).reshape(d * d) / np.sqrt(d)
    out = []
    for p in enumerate_all(n):
        out.append(np.kron(dense_matrix(p), np.eye(d)) @ phi)
    return np.array(out)


def test_wht_matches_hadamard_matrix():
    h = np.array([[1, 1], [1, -1]])
    h3 = np.kron(np.kron(h, h), h)
    v = np.arange(8.0)
    assert dense_close(wht(v), h3 @ v)


def test_ghz_expectations():
    e = pauli_expectations(ghz(3))
    got = {str(p): round(float(v), 9) for p, v in zip(enumerate_all(3), e) if abs(v) > 1e-9}
    assert got == {"III": 1.0, "IZZ": 1.0, "ZIZ": 1.0, "ZZI": 1.0,
                   "XXX": 1.0, "XYY": -1.0, "YXY": -1.0, "YYX": -1.0}


@pytest.mark.parametrize("n", [1, 2, 3])
def test_all_expectations_match_dense(n):
    rho = random_mixed(n, 2, make_rng(n, "exp"))
    dm = rho.density_matrix()
    for p, v in zip(enumerate_all(n), pauli_expectations(rho)):
        assert v == pytest.approx(np.trace(dense_matrix(p) @ dm).real, abs=1e-12)
        assert v == pytest.approx(expectation(rho, p), abs=1e-12)


def test_bell_distribution_product_state():
    # |0+>: ZZ fixes the first x bit, XX fixes the second z bit
    d = bell_distribution(product_state("0+"), product_state("0+"))
    assert {i: round(float(v), 12) for i, v in enumerate(d) if v > 1e-12} == {0: 0.25, 2: 0.25, 4: 0.25, 6: 0.25}


@pytest.mark.parametrize("n", [1, 2])
def test_bell_distribution_matches_dense_projectors(n):
    rng = make_rng(7, "bell", n)
    rho, sigma = random_mixed(n, 2, rng), haar_random(n, rng)
    vecs = _bell_vectors(n)
    joint = np.kron(rho.density_matrix(), sigma.density_matrix())
    dense = np.einsum("bi,ij,bj->b", vecs.conj(), joint, vecs).real
    assert dense_close(bell_distribution(rho, sigma), dense, 1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_sign_of_is_bell_eigenvalue(n):
    vecs = _bell_vectors(n)
    for p in enumerate_all(n):
        pp = np.kron(dense_matrix(p), dense_matrix(p))
        for b, v in enumerate(vecs):
            s = sign_of(p, BellSample(n, b >> n, b & ((1 << n) - 1)))
            assert dense_close(pp @ v, s * v)


def test_bell_sign_mean_is_product_of_expectations():
    rng = make_rng(3, "bellmean")
    rho, sigma = haar_random(2, rng), random_mixed(2, 3, rng)
    probs = bell_distribution(rho, sigma)
    for p in enumerate_all(2):
        mean = sum(probs[b] * sign_of(p, BellSample(2, b >> 2, b & 3)) for b in range(16))
        assert mean == pytest.approx(expectation(rho, p) * expectation(sigma, p), abs=1e-12)


@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_sign_sums_match_direct_sum(n, seed):
    counts = make_rng(seed, "counts").integers(0, 50, size=4**n)
    sums = bell_sign_sums(counts, n)
    for p in enumerate_all(n):
        direct = sum(int(c) * sign_of(p, BellSample(n, b >> n, b & ((1 << n) - 1))) for b, c in enumerate(counts))
        assert sums[p.index] == direct == bell_sign_sum(p, counts)


def test_bell_counts_total():
    counts = bell_sample_counts(ghz(2), ghz(2), 1000, make_rng(0, "c"))
    assert counts.sum() == 1000 and counts.dtype == np.int64


def test_joint_distribution_of_stabilizers():
    pats, probs = joint_distribution(ghz(3), [PauliOp.from_string(s) for s in ["ZZI", "IZZ", "XXX"]])
    assert pats.tolist() == [0] and probs.tolist() == [1.0]
    pats, probs = joint_distribution(basis_state("01"), [PauliOp.from_string(s) for s in ["ZZ", "XX"]])
    # ZZ = -1 and XX is then uniform
    assert pats.tolist() == [0b01, 0b11]
    assert np.allclose(probs, [0.5, 0.5])


@given(st.integers(0, 2**32 - 1))
def test_joint_marginals_are_expectations(seed):
    rng = make_rng(seed, "joint")
    rho = random_mixed(3, 2, rng)
    pool = enumerate_all(3)[1:]
    chosen = []
    for i in rng.permutation(len(pool)):
        if all(commutes(pool[i], q) for q in chosen):
            chosen.append(pool[i])
    pats, probs = joint_distribution(rho, chosen)
    for j, p in enumerate(chosen):
        assert float(probs @ outcome_signs(pats, j)) == pytest.approx(expectation(rho, p), abs=1e-10)


def test_joint_distribution_rejects_anticommuting():
    with pytest.raises(ValueError):
        joint_distribution(ghz(1), [PauliOp.from_string("X"), PauliOp.from_string("Z")])


def test_sample_counts_sum():
    ops = [PauliOp.from_string("ZI")]
    pats, counts = sample_commuting_counts(maximally_mixed(2), ops, 500, make_rng(0, "s"))
    assert counts.sum() == 500


def test_parse_state_forms():
    assert dense_close(parse_state("ghz n=2").density_matrix(), ghz(2).density_matrix())
    assert parse_state("haar_random n=2 seed=4").n == 2
    assert dense_close(
        parse_state("haar_random n=2 seed=4").density_matrix(),
        parse_state("haar_random n=2 seed=4").density_matrix(),
    )
    s = parse_state("00 0.70710678118654752\n11 0.70710678118654752")
    assert dense_close(s.density_matrix(), ghz(2).density_matrix())
    assert expectation(parse_state("product +0"), PauliOp.from_string("XZ")) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        parse_state("00 1\n11 1")


def test_state_validation():
    from shadowtomo.quantum_sim import QuantumState

    with pytest.raises(ValueError):
        QuantumState(1, np.array([0.5]), np.array([[1, 0]]))
    with pytest.raises(ValueError):
        QuantumState(11, np.array([1.0]), np.zeros((1, 2048)))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowtomo import compression as cmp
from shadowtomo.fermion import make_mapping, monomial_to_pauli
from shadowtomo.pauli import PauliOp, enumerate_all, enumerate_local
from shadowtomo.protocols import learn_fermionic, learn_two_copy_template
from shadowtomo.quantum_sim import ghz, haar_random, random_mixed
from shadowtomo.rng import make_rng


@pytest.fixture(scope="module")
def all_run():
    rho = haar_random(3, make_rng(21, "state"))
    ops = enumerate_all(3)
    rep = learn_two_copy_template(rho, ops, "gyarfas", 0.5, make_rng(21, "run"), descriptor={"kind": "all"})
    return rep, cmp.compress(rep.raw, seeds={"seed": 21})


def test_roundtrip_is_bit_exact(all_run):
    _, d = all_run
    blob = cmp.serialize(d)
    back = cmp.deserialize(blob)
    assert back == d
    assert cmp.serialize(back) == blob
    assert blob.startswith(cmp.MAGIC)


def test_predicted_size_is_exact(all_run):
    _, d = all_run
    assert cmp.predicted_bits(d) == 8 * len(cmp.serialize(d))


def test_queries_equal_pipeline_estimates(all_run):
    rep, d = all_run
    back = cmp.deserialize(cmp.serialize(d))
    for p, y in zip(rep.operators, rep.estimates):
        assert cmp.query(back, p) == y


def test_query_signs_and_identity(all_run):
    rep, d = all_run
    i = rep.extras["magnitudes"].s_eps[1]
    p = rep.operators[i]
    assert cmp.query(d, -p) == -rep.estimates[i]
    assert cmp.query_record(d, PauliOp.from_string("-III")) == {"estimate": -1.0, "in_s_eps": True, "extrapolated": False}
    with pytest.raises(ValueError):
        cmp.query(d, PauliOp.from_string("XX"))
    with pytest.raises(ValueError):
        cmp.query(d, PauliOp.from_string("+iXXX"))


def test_local_record_flags_extrapolation():
    rho = random_mixed(3, 2, make_rng(2, "loc"))
    ops = enumerate_local(3, 1)
    rep = learn_two_copy_template(rho, ops, "greedy", 0.4, make_rng(2, "r"), descriptor={"kind": "local", "k": 1})
    d = cmp.deserialize(cmp.serialize(cmp.compress(rep.raw)))
    for p, y in zip(ops, rep.estimates):
        rec = cmp.query_record(d, p)
        assert rec["estimate"] == y and not rec["extrapolated"]
    assert cmp.query_record(d, PauliOp.from_string("XXX"))["extrapolated"]


def test_fermionic_record_queries_signed_images():
    mp = make_mapping("jw", 3)
    rho = ghz(3)
    rep = learn_fermionic(rho, 3, 1, mp, 0.4, make_rng(8, "f"))
    d = cmp.deserialize(cmp.serialize(cmp.compress(rep.raw)))
    for op, y in zip(rep.operators, rep.estimates):
        assert cmp.query(d, monomial_to_pauli(op, mp)) == y


def test_stored_outcomes_rebuild_all_members():
    basis = [PauliOp.from_string(s) for s in ["ZZ", "XX", "-YY"]]
    info = cmp.basis_info(basis)
    assert len(info.generators) == 2
    # on a GHZ state ZZ = XX = +1 forces -YY = +1
    pats = np.array([0])
    gen = ((pats[:, None] >> np.array(info.generators)[None, :]) & 1).astype(np.uint8)
    assert cmp._member_bits(info, gen).tolist() == [[0, 0, 0]]


def test_truncated_and_corrupt_inputs_report_offsets(all_run):
    _, d = all_run
    blob = cmp.serialize(d)
    with pytest.raises(cmp.CompressedFormatError) as e:
        cmp.deserialize(b"XXXXX" + blob[5:])
    assert e.value.offset == 0
    with pytest.raises(cmp.CompressedFormatError) as e:
        cmp.deserialize(blob[:-3])
    assert 0 < e.value.offset <= len(blob)
    with pytest.raises(cmp.CompressedFormatError) as e:
        cmp.deserialize(blob + b"\0")
    assert e.value.offset == len(blob)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_random_truncation_never_crashes_unexpectedly(cut):
    rho = ghz(2)
    rep = learn_two_copy_template(rho, enumerate_all(2), "greedy", 0.6, make_rng(0, "t"), descriptor={"kind": "all"})
    blob = cmp.serialize(cmp.compress(rep.raw))
    k = cut % len(blob)
    with pytest.raises(cmp.CompressedFormatError):
        cmp.deserialize(blob[:k])


def test_scaling_model_components(all_run):
    _, d = all_run
    shots = sum(len(bits) for groups in d.batches for _, bits in groups)
    assert cmp.scaling_model(d) == 3 * len(d.bell_rows) + 9 * shots

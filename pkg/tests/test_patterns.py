import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stringnet_mbqc.certify import certify, certify_cz, certify_init, certify_single_wire
from stringnet_mbqc.errors import DecodingError, InvalidArgumentError
from stringnet_mbqc.patterns import (
    ROLE_ORDER, PauliFrame, couple_frames, cz_couple, decode, encoding_isometry,
    frame_before, init_frame, init_leg, operator_fidelity, path_step, readout,
    role_pauli, rot_x, rot_z, update_frame,
)

X = np.array([[0, 1], [1, 0]])
Z = np.diag([1, -1])
frames = st.builds(PauliFrame, st.integers(0, 1), st.integers(0, 1), st.sampled_from(["I", "II"]))


def test_encodings():
    e1, e2 = encoding_isometry("I"), encoding_isometry("II")
    assert np.allclose(e1[:, 0], [1, 0, 0, 0]) and np.allclose(e1[:, 1], [0, 0, 0, 1])
    assert np.allclose(e2[:, 0], [0, 1, 0, 0]) and np.allclose(e2[:, 1], [0, 0, 1, 0])
    xl, zl = np.kron(X, X), np.kron(Z, np.eye(2))
    for e in (e1, e2):
        assert np.allclose(xl @ e, e @ X)
        assert np.allclose(zl @ e, e @ Z)


def test_byproduct_algebra():
    x, z = PauliFrame(1, 0).byproduct(), PauliFrame(0, 1).byproduct()
    assert np.allclose(x @ z, -z @ x)
    assert np.allclose(x @ x, np.eye(2)) and np.allclose(z @ z, np.eye(2))
    with pytest.raises(InvalidArgumentError):
        PauliFrame(0, 0, "III")


@given(frames, st.integers(0, 1), st.integers(0, 1), st.integers(0, 1), st.integers(0, 1))
def test_apply_is_an_involution(frame, xu, zu, xl, zl):
    twice = frame.apply(xu, zu, xl, zl).apply(xu, zu, xl, zl)
    assert twice == frame


@given(frames)
def test_bond_state_matches_frame_after_physical_pauli(frame):
    # Enc_tau' X^v' Z^r' |psi>  ==  (X^xu Z^zu (x) X^xl Z^zl) Enc_tau X^v Z^r |psi>  up to phase
    for xu, zu, xl, zl in itertools.product((0, 1), repeat=4):
        phys = np.kron(
            np.linalg.matrix_power(X, xu) @ np.linalg.matrix_power(Z, zu),
            np.linalg.matrix_power(X, xl) @ np.linalg.matrix_power(Z, zl),
        )
        lhs = phys @ encoding_isometry(frame.encoding) @ frame.byproduct()
        new = frame.apply(xu, zu, xl, zl)
        rhs = encoding_isometry(new.encoding) @ new.byproduct()
        assert operator_fidelity(lhs, rhs) == pytest.approx(1, abs=1e-12)


def test_role_paulis():
    assert role_pauli("a", "Z", 1) == (1, 0, 0, 0)
    assert role_pauli("d", "Z", 1) == (0, 0, 1, 0)
    assert role_pauli("g", "Z", 1) == (1, 0, 1, 0)
    assert role_pauli("b", "X", 1) == (0, 1, 0, 0)
    assert role_pauli("l", "X", 1) == (0, 0, 0, 1)
    assert role_pauli("h", "Z", 1) == (0, 0, 0, 0)
    assert all(role_pauli(r, "X", 0) == (0, 0, 0, 0) for r in ROLE_ORDER)
    with pytest.raises(InvalidArgumentError):
        role_pauli("z", "X", 1)


def test_path_step_frame_examples():
    p = path_step()
    zeros = {r: 0 for r in ROLE_ORDER}
    assert update_frame(PauliFrame(), p, zeros) == PauliFrame()
    assert update_frame(PauliFrame(), p, {**zeros, "b": 1}) == PauliFrame(0, 1, "I")
    assert update_frame(PauliFrame(), p, {**zeros, "b": 1, "c": 1, "e": 1}) == PauliFrame(0, 1, "I")
    assert update_frame(PauliFrame(), p, {**zeros, "a": 1}) == PauliFrame(1, 0, "II")
    assert update_frame(PauliFrame(), p, {**zeros, "a": 1, "g": 1}) == PauliFrame(0, 0, "II")


def test_every_role_has_one_basis():
    for pat in (path_step(), rot_z(0.3), rot_x(0.3), cz_couple()):
        assert set(pat.bases) == set(ROLE_ORDER)
    assert rot_z(0.3).bases["h"] == ("ZRot", 0.3)
    assert rot_x(0.3).bases["g"] == ("XRot", 0.3)
    assert set(readout().bases) == set("abcdefghjk")


def test_adaptive_rules_depend_on_frame_only_through_named_bit():
    rz, rx = rot_z(0.5), rot_x(0.5)
    zeros = {r: 0 for r in ROLE_ORDER}
    assert rz.basis_for("h", PauliFrame(0, 1, "II"), zeros).theta == 0.5
    assert rz.basis_for("h", PauliFrame(1, 0, "I"), zeros).theta == -0.5
    assert rx.basis_for("g", PauliFrame(1, 0, "I"), zeros).theta == 0.5
    assert rx.basis_for("g", PauliFrame(0, 1, "I"), zeros).theta == -0.5
    assert rx.basis_for("g", PauliFrame(0, 1, "I"), {**zeros, "j": 1}).theta == 0.5


def test_frame_before_uses_only_earlier_roles():
    p = rot_z(1.0)
    outs = {r: 1 for r in ROLE_ORDER}
    f = frame_before(PauliFrame(), p, outs, "h")
    assert f == update_frame(PauliFrame(), p, outs, roles=("a", "b", "c", "d", "e", "f"))


@pytest.mark.parametrize("mh,mg,expect", [(0, 0, 0), (1, 0, 1), (0, 1, 1), (1, 1, 0)])
def test_vertex_init_formula(mh, mg, expect):
    # Z on h and g of a rung vertex: the third leg is fixed to |mh xor mg>
    from stringnet_mbqc.tensornet import VERTEX_TENSOR

    t = VERTEX_TENSOR[mh, :, mg, mh, :, mg]  # (p_out, v_out)
    out_leg = np.einsum("pv->v", t)
    assert np.argmax(np.abs(out_leg)) == expect and np.count_nonzero(out_leg) == 1


def test_init_frame():
    assert init_frame({"g": 0, "j": 0, "i": 0, "l": 0}) == PauliFrame(0, 0, "I")
    assert init_frame({"g": 1, "j": 1, "i": 0, "l": 0}) == PauliFrame(1, 0, "I")
    assert init_frame({"g": 0, "j": 0, "i": 1, "l": 1}) == PauliFrame(0, 0, "I")
    assert init_frame({"g": 0, "j": 0, "i": 1, "l": 0}) == PauliFrame(0, 1, "I")


def test_decode():
    assert decode(PauliFrame(0, 0, "I"), 0, 0) == 0
    assert decode(PauliFrame(1, 0, "II"), 1, 0) == 0
    assert decode(PauliFrame(1, 1, "I"), 0, 0) == 1
    with pytest.raises(DecodingError):
        decode(PauliFrame(0, 0, "I"), 0, 1)


def test_couple_frames_type_two_correction():
    up, lo = couple_frames(PauliFrame(0, 0, "II"), PauliFrame(0, 0, "I"))
    assert (up.r, lo.r) == (0, 1)
    up, lo = couple_frames(PauliFrame(1, 0, "I"), PauliFrame(1, 0, "I"))
    assert (up.r, lo.r) == (1, 1)


def test_targets():
    t = 0.8
    assert np.allclose(rot_z(t).target(), np.diag([np.exp(-0.4j), np.exp(0.4j)]))
    assert np.allclose(rot_x(t).target(), math.cos(0.4) * np.eye(2) - 1j * math.sin(0.4) * X)
    assert np.allclose(rot_x(0).target(), np.eye(2))


def test_two_rot_x_compose():
    a, b = 0.3, 1.1
    assert operator_fidelity(rot_x(b).target() @ rot_x(a).target(), rot_x(a + b).target()) == pytest.approx(1)


def test_cz_twice_is_identity_up_to_frame():
    # Two couplings: logical CZ^2 = I; frames pick up r ^= v twice, i.e. cancel.
    f_u, f_l = PauliFrame(1, 0, "I"), PauliFrame(1, 1, "I")
    u2, l2 = couple_frames(*couple_frames(f_u, f_l))
    assert (u2, l2) == (f_u, f_l)
    cz = cz_couple().target()
    assert np.allclose(cz @ cz, np.eye(4))


@pytest.mark.parametrize("make", [path_step, readout, init_leg, cz_couple])
def test_certify_fixed_patterns(make):
    rep = certify(make())
    assert rep.passed, rep.failures[:3]
    assert rep.max_deviation < 1e-10


@pytest.mark.parametrize("theta", [0.0, math.pi / 8, 1.234, -2.5])
def test_certify_rotations(theta):
    for pat in (rot_z(theta), rot_x(theta)):
        rep = certify(pat)
        assert rep.passed and rep.branches > 0


def test_certify_detects_wrong_target():
    assert not certify_single_wire(rot_z(0.5), target=rot_z(0.6).target()).passed
    assert not certify_cz(target=np.eye(4)).passed


def test_certify_detects_wrong_frame_rule(monkeypatch):
    import stringnet_mbqc.certify as cert

    def broken(role, family, m):
        x = role_pauli(role, family, m)
        return (x[0], 0, x[2], x[3]) if role == "b" else x

    monkeypatch.setattr(cert, "role_pauli", broken)
    assert not certify_single_wire(path_step()).passed


def test_certify_init_counts_branches():
    rep = certify_init()
    assert rep.passed and rep.branches == 8


def test_pattern_json():
    j = rot_x(0.25).to_json()
    assert j["kind"] == "RotX" and j["bases"]["g"]["negate_if"]["xor_outcomes"] == ["j"]
    assert cz_couple().to_json()["couple"] == ["f", "c"]

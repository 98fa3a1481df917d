import itertools

import numpy as np
import pytest

from stringnet_mbqc.errors import ImpossibleOutcomeError, IncompletePatternError, InvalidArgumentError
from stringnet_mbqc.lattice import build_patch, cell_map, prologue_cell
from stringnet_mbqc.oracle import X_BASIS, Z_BASIS, MeasurementBasis, measure
from stringnet_mbqc.resource import ground_state
from stringnet_mbqc.tensornet import (
    VERTEX_TENSOR, CorrelationState, Fragment, apply_measurement, contract_patch,
    fingerprint, induced_operator, induced_operators,
)


def test_vertex_tensor_support():
    nz = np.argwhere(VERTEX_TENSOR)
    assert len(nz) == 4
    for idx in nz:
        phys, virt = idx[:3], idx[3:]
        assert list(phys) == list(virt) and sum(virt) % 2 == 0


@pytest.mark.parametrize("dims", [(1, 1), (1, 2)])
def test_contraction_equals_loop_state(dims):
    p = build_patch(*dims)
    a = contract_patch(p).canonical()
    b = ground_state(p).state.canonical()
    assert np.max(np.abs(a - b)) < 1e-10


def test_sequential_engine_matches_dense_oracle():
    p = build_patch(1, 2)
    dense = ground_state(p).state
    live = list(range(p.qubit_count))
    corr = CorrelationState(p)
    rng = np.random.default_rng(11)
    order = rng.permutation(p.qubit_count)
    for site in order:
        basis = MeasurementBasis(("Z", "X", "ZRot", "XRot")[site % 4], 0.3 * site)
        probs = corr.branch_probabilities(int(site), basis)
        ax = live.index(site)
        m, p_dense, dense = measure(dense, ax, basis, rng=rng, drop=True)
        live.pop(ax)
        assert probs[m] == pytest.approx(p_dense, abs=1e-12)
        assert sum(probs) == pytest.approx(1, abs=1e-12)
        corr, p_corr = apply_measurement(corr, int(site), basis, m)
        assert p_corr == pytest.approx(p_dense, abs=1e-12)


def test_forbidden_outcome_raises():
    p = build_patch(1, 1)
    st, _ = apply_measurement(CorrelationState(p), 0, Z_BASIS, 1)
    with pytest.raises(ImpossibleOutcomeError):
        apply_measurement(st, 1, Z_BASIS, 0)


def test_remeasure_rejected():
    p = build_patch(1, 1)
    st, _ = apply_measurement(CorrelationState(p), 0, X_BASIS, 0)
    with pytest.raises(InvalidArgumentError):
        st.branch_probabilities(0, X_BASIS)
    with pytest.raises(InvalidArgumentError):
        CorrelationState(p, pending_cz=((2, 2),))


def test_fingerprint_ignores_global_phase():
    p = build_patch(1, 1)
    st = CorrelationState(p)
    st.ensure_site(0)
    other = st.copy()
    other.tensor.data = other.tensor.data * np.exp(0.7j)
    assert fingerprint(st) == fingerprint(other)


def test_pending_cz_matches_dense():
    p = build_patch(1, 2)
    from stringnet_mbqc.resource import apply_precoupling

    pairs = [(4, 10)]
    dense = apply_precoupling(ground_state(p), pairs).state
    corr = CorrelationState(p, pending_cz=tuple(pairs))
    live = list(range(p.qubit_count))
    for site in (4, 10, 3, 11):
        probs = corr.branch_probabilities(site, X_BASIS)
        ax = live.index(site)
        _, pd, dense = measure(dense, ax, X_BASIS, forced_outcome=0, drop=True)
        live.pop(ax)
        assert probs[0] == pytest.approx(pd, abs=1e-12)
        corr, _ = apply_measurement(corr, site, X_BASIS, 0)


def test_prologue_fragment_prepares_rung_state():
    p = build_patch(1, 1)
    roles = cell_map(prologue_cell(p, 0))
    verts = sorted({p.site_owner[s][0] for s in roles.values()})
    frag = Fragment(p, tuple(verts), (), (roles["i"] // 2, roles["l"] // 2))
    bases = {s: Z_BASIS for s in frag.sites}
    for mg, mj in itertools.product((0, 1), repeat=2):
        outs = {s: 0 for s in frag.sites}
        outs[roles["g"]], outs[roles["j"]] = mg, mj
        outs[roles["i"]] = outs[roles["l"]] = mg
        op = induced_operator(frag, bases, outs)
        if mg != mj:
            assert np.allclose(op, 0)
        else:
            expected = np.zeros((4, 1))
            expected[3 * mg, 0] = 1
            assert np.allclose(op, expected)


def test_vectorized_operators_agree_with_single_branch():
    p = build_patch(1, 2)
    roles = cell_map(prologue_cell(p, 0))
    verts = sorted({p.site_owner[s][0] for s in roles.values()})
    frag = Fragment(p, tuple(verts), (), (roles["i"] // 2, roles["l"] // 2))
    bases = {s: MeasurementBasis("XRot", 0.3 * s) for s in frag.sites}
    allops = induced_operators(frag, bases)
    for outs in itertools.product((0, 1), repeat=len(frag.sites)):
        one = induced_operator(frag, bases, dict(zip(frag.sites, outs)))
        assert np.allclose(allops[outs].reshape(4, 1), one)
    with pytest.raises(IncompletePatternError):
        induced_operators(frag, {})

import numpy as np
import pytest

from sembed.hfunction import (
    HFunction,
    NotSHolomorphic,
    comparison_check,
    dS_HF_residual,
    f_from_spinor,
    integrate_HF,
    max_principle_check,
    s_positivity,
    shol_residuals,
    spinor_from_f,
)
from sembed.lattices import SquarePatch, perturbed_embedding
from sembed.spinor import propagation_nullspace


@pytest.fixture(scope="module")
def inst():
    emb, wts, X, cover = perturbed_embedding(8, 8, seed=1)
    nb = propagation_nullspace(emb.graph, cover, wts.theta, emb.quads)
    return emb, wts, cover, nb


def random_shol(inst, seed):
    emb, wts, cover, nb = inst
    rng = np.random.default_rng(seed)
    xr = nb @ rng.standard_normal(nb.shape[1])
    return xr, f_from_spinor(emb, xr)


def test_smirnov_correspondence_roundtrip(inst):
    emb = inst[0]
    for seed in range(4):
        xr, F = random_shol(inst, seed)
        res, _ = shol_residuals(emb, F)
        assert res < 1e-10
        xr2 = spinor_from_f(emb, F)
        m = ~np.isnan(xr2)
        assert np.abs(xr2[m] - xr[m]).max() < 1e-10 * max(np.abs(xr).max(), 1)


def test_constant_F_increments(inst):
    emb = inst[0]
    g = emb.graph
    f0 = 0.8 - 0.3j
    F = np.full(g.n_quads, f0)
    H = integrate_HF(emb, F=F)
    # edgewise: H(vb) - H(vw) = (Im(F^2 dS) + |F|^2 dQ)/2
    for z in emb.quads[:10]:
        for c in g.quad_corners[z]:
            vb, vw = int(g.cor_vb[c]), int(g.cor_vw[c])
            dS = emb.S[vb] - emb.S[vw]
            dQ = emb.Q[vb] - emb.Q[vw]
            want = 0.5 * (np.imag(f0**2 * dS) + abs(f0) ** 2 * dQ)
            got = H.values[vb] - H.values[vw]
            assert got == pytest.approx(want, abs=1e-12)
    # Delta_S H vanishes for constant F
    assert abs(s_positivity(emb, H)) < 1e-10


def test_sholomorphy_precondition(inst):
    emb = inst[0]
    rng = np.random.default_rng(7)
    F = rng.standard_normal(emb.graph.n_quads) + 1j * rng.standard_normal(
        emb.graph.n_quads
    )
    with pytest.raises(NotSHolomorphic):
        integrate_HF(emb, F=F)


def test_dS_identity_and_positivity(inst):
    emb = inst[0]
    for seed in (0, 3):
        _, F = random_shol(inst, seed)
        H = integrate_HF(emb, F=F)
        assert dS_HF_residual(emb, F, H) < 1e-10
        assert s_positivity(emb, H) > -1e-10
        assert max_principle_check(H) == []


def test_comparison_principle(inst):
    emb = inst[0]
    _, F1 = random_shol(inst, 1)
    _, F2 = random_shol(inst, 2)
    H1 = integrate_HF(emb, F=F1)
    H2 = integrate_HF(emb, F=F2)
    assert comparison_check(H1, H2) == []


def test_forced_non_shol_H_goes_negative(inst):
    # pushing a random (non-s-holomorphic) F through the increment formula
    # generically breaks s-positivity: search over seeds for a witness
    emb, wts, cover, nb = inst
    g = emb.graph
    found = False
    for seed in range(10):
        rng = np.random.default_rng(seed)
        xr = rng.standard_normal(g.n_corners)  # not a propagation solution
        try:
            H = integrate_HF(emb, X_values=xr, check_shol=False)
        except Exception:
            found = True  # increments refuse to close: also a failure mode
            break
        if s_positivity(emb, H) < -1e-8:
            found = True
            break
    assert found


def test_monotone_H_extrema_on_boundary_only(inst):
    # H built from constant F is monotone along a direction: extrema only at
    # the boundary of its domain of definition
    emb = inst[0]
    F = np.full(emb.graph.n_quads, 1.0 + 0j)
    H = integrate_HF(emb, F=F)
    assert max_principle_check(H) == []

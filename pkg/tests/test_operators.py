import numpy as np
import pytest

from sembed.lattices import SquarePatch, perturbed_embedding
from sembed.operators import (
    abc_coefficients,
    coarse_laplacian_error_averaged,
    averaged_q_operator_residual,
    bc_square_sums,
    coarse_laplacian_error,
    d_bar_S,
    d_omega,
    laplacian_S,
    operator_identity_report,
    square_mask_quads,
    taylor_check_dbar,
)


@pytest.fixture(scope="module")
def iso16():
    return SquarePatch(16, 16, delta=1.0).isoradial()


@pytest.fixture(scope="module")
def perturbed_set():
    return [
        perturbed_embedding(8, 8, seed=1),
        perturbed_embedding(8, 8, seed=2, theta_spread=0.2),
        perturbed_embedding(10, 10, seed=3, eps=0.2),
    ]


def test_identity_suite_isoradial(iso16):
    rep = operator_identity_report(iso16[0])
    assert rep["dbar_1"] < 1e-10
    assert rep["dbar_S"] < 1e-10
    assert rep["dbar_Q"] < 1e-10
    assert rep["dbar_Sbar_minus_1"] < 1e-10
    assert rep["transpose_identity"] < 1e-12
    assert rep["laplacian_symmetry"] == 0.0
    assert rep["laplacian_rowsum"] < 1e-10
    assert rep["laplacian_S_moment"] < 1e-10
    assert rep["laplacian_vs_product"] < 1e-12
    assert rep["a_coefficients"] < 1e-10
    assert rep["A_vs_area"] < 1e-12


def test_identity_suite_perturbed(perturbed_set):
    for emb, *_ in perturbed_set:
        rep = operator_identity_report(emb)
        assert max(rep.values()) < 1e-10


def test_isoradial_b_vanishes(iso16):
    _, coeffs = laplacian_S(iso16[0])
    assert max(abs(v) for v in coeffs.b.values()) < 1e-12


def test_dbar_omega_kills_constants(iso16):
    emb = iso16[0]
    dbw, dom = d_omega(emb)
    ones = np.ones(emb.graph.n_quads, dtype=complex)
    r = np.abs((dbw.mat @ ones)[dbw.valid_rows])
    assert r.max() < 1e-13


def test_taylor_dbar_smooth(iso16):
    emb = iso16[0]
    # phi(w) = conj(w)^2: [dbar_S phi](z) = 2 conj(S(z)) + O(delta)
    r = taylor_check_dbar(emb, lambda s: np.conj(s) ** 2, lambda s: 2 * np.conj(s))
    assert r.max() < 0.5 * emb.delta
    # holomorphic test function: O(delta) residual
    r2 = taylor_check_dbar(emb, lambda s: s**3, lambda s: 0 * s)
    assert r2.max() < 4.0 * emb.delta


def test_abc_square_sums_scale():
    # |sum B_z|, |sum C_z| over ell-squares bounded by C * delta * ell with a
    # stable constant over two dyadic levels
    consts = []
    for delta in (1 / 8, 1 / 16):
        M = int(3 / delta) // 2 * 2
        p = SquarePatch(M, M, delta=delta)
        emb = p.isoradial()[0]
        center = delta * (M / 2) * (1 + 1j)
        ell = 1.0
        sb, sc = bc_square_sums(emb, center, ell)
        consts.append(max(sb, sc) / (delta * ell))
    assert consts[0] < 10.0 and consts[1] < 10.0
    # perturbed embeddings: nonzero but same scaling
    emb, *_ = perturbed_embedding(12, 12, seed=5, eps=0.15)
    sb, sc = bc_square_sums(emb, emb.delta * 6 * (1 + 1j), 4.0)
    assert max(sb, sc) < 10.0 * emb.delta * 4.0


def test_averaged_q_operator(iso16):
    emb = iso16[0]
    # phi quadratic: D^3 = 0, residual O(delta^3 * |D^2 phi|)
    r = averaged_q_operator_residual(
        emb,
        phi=lambda s: np.abs(s) ** 2,
        d_phi=lambda s: np.conj(s),
        dbar_phi=lambda s: s,
        q_gauge_vertex=None,
    )
    assert r.max() < 5.0 * emb.delta**3 * 2


def test_coarse_laplacian_decay():
    # errors decrease monotonically over three dyadic levels with ell=delta^0.6
    errs = []
    for delta in (1 / 8, 1 / 16, 1 / 32):
        M = int(2.5 / delta) // 2 * 2
        p = SquarePatch(M, M, delta=delta)
        emb = p.isoradial()[0]
        ell = delta**0.6
        mid = delta * (M / 2) * (1 + 1j)
        errs.append(
            coarse_laplacian_error_averaged(
                emb, phi=lambda s: np.abs(s) ** 2, lap_phi=4.0, center=mid, ell=ell
            )
        )
    assert errs[0] > errs[1] > errs[2]


def test_coarse_laplacian_harmonic_and_linear():
    p = SquarePatch(24, 24, delta=1 / 8)
    emb = p.isoradial()[0]
    mid = (24 / 8 / 2) * (1 + 1j)
    e_h = coarse_laplacian_error(
        emb, phi=lambda s: np.real(s**2), lap_phi=0.0, center=mid, ell=1.0
    )
    e_l = coarse_laplacian_error(
        emb, phi=lambda s: np.real(s), lap_phi=0.0, center=mid, ell=1.0
    )
    assert e_h < 1.0
    assert e_l < 0.5  # boundary term only, O(delta/ell)


def test_periodic_bc_sums_vanish_on_full_periods():
    # on the isoradial lattice, summing B_z, C_z over an exact period block
    # reproduces the doubly-periodic cancellation
    p = SquarePatch(12, 12, delta=1.0)
    emb = p.isoradial()[0]
    A, B, C = abc_coefficients(emb, q_gauge_vertex=None)
    m = square_mask_quads(emb, 6.0 * (1 + 1j), 2.0)
    # 2x2 block of unit quads = one fundamental domain of the coloring
    assert abs(B[m].sum()) < 1e-10
    assert abs(C[m].sum()) < 1e-10

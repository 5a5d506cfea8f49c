import numpy as np
import pytest

from sembed.embedding import (
    InconsistentCycles,
    ZeroSpinor,
    assumption_report,
    build_embedding,
    propriety_check,
    recover_theta,
)
from sembed.lattices import SquarePatch, perturbed_embedding
from sembed.spinor import DiracSpinor, check_propagation
from sembed.weights import IsingWeights, OutOfRange, theta_from_x


def test_theta_from_x_values():
    assert theta_from_x(1.0) == pytest.approx(np.pi / 2)
    assert theta_from_x(np.sqrt(2) - 1) == pytest.approx(np.pi / 4)
    assert theta_from_x(1e-9) == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(OutOfRange):
        theta_from_x(0.0)
    with pytest.raises(OutOfRange):
        theta_from_x(1.2)


def test_propagation_single_quad_example():
    # theta = pi/4, X(c00) = 1, X(c11) = 0 gives X(c01) = X(c10) = sqrt2/2
    th = np.pi / 4
    x00, x11 = 1.0, 0.0
    x01 = x00 * np.cos(th) + x11 * np.sin(th)
    x10 = x00 * np.sin(th) - x11 * np.cos(th)
    assert x01 == pytest.approx(np.sqrt(2) / 2)
    assert x10 == pytest.approx(np.sqrt(2) / 2)


def test_isoradial_spinor_propagates():
    p = SquarePatch(8, 8)
    emb, weights, X, cover = p.isoradial()
    res, _ = check_propagation(X, weights, p.interior_quads())
    assert res < 1e-13


def test_random_values_do_not_propagate():
    p = SquarePatch(6, 6)
    emb, weights, X, cover = p.isoradial()
    rng = np.random.default_rng(1)
    Xr = DiracSpinor(p.graph, cover, rng.standard_normal(p.graph.n_corners))
    res, _ = check_propagation(Xr, weights, p.interior_quads())
    assert res > 1e-3


class TestIsoradialEmbedding:
    def setup_method(self):
        self.patch = SquarePatch(8, 8, delta=1.0)
        self.emb, self.weights, self.X, self.cover = self.patch.isoradial()
        self.iq = self.patch.interior_quads()

    def test_unit_squares_inradius_half(self):
        np.testing.assert_allclose(self.emb.r_z[self.iq], 0.5, atol=1e-12)
        np.testing.assert_allclose(self.emb.quad_area(), 1.0, atol=1e-12)

    def test_origami_two_valued(self):
        g = self.patch.graph
        verts = sorted({int(v) for z in self.iq for v in g.quads[z]})
        Q = self.emb.Q[verts] - min(self.emb.Q[verts])
        blacks = [q for v, q in zip(verts, Q) if v < g.nb]
        whites = [q for v, q in zip(verts, Q) if v >= g.nb]
        # isoradial: Q constant on each sublattice, gap = delta
        np.testing.assert_allclose(blacks, 1.0, atol=1e-12)
        np.testing.assert_allclose(whites, 0.0, atol=1e-12)

    def test_theta_recovery(self):
        th = [recover_theta(self.emb, z) for z in self.iq]
        np.testing.assert_allclose(th, np.pi / 4, atol=1e-10)

    def test_proper(self):
        ok, msgs = propriety_check(self.emb)
        assert ok, msgs

    def test_center_equidistant_from_sides(self):
        g = self.patch.graph
        for z in self.iq[:6]:
            pts = self.emb.S[g.quads[z]]
            c = self.emb.S_z[z]
            for k in range(4):
                a, b = pts[k], pts[(k + 1) % 4]
                d = abs(np.imag(np.conj(b - a) * (c - a))) / abs(b - a)
                assert d == pytest.approx(self.emb.r_z[z], abs=1e-10)

    def test_quad_sum_identities(self):
        # around every quad: X10^2 + X01^2 = X00^2 + X11^2 and same for
        # absolute squares (tangential quad identities)
        loc = self.emb.local_X()
        s = loc**2
        lhs = s[:, 2] + s[:, 1]
        rhs = s[:, 0] + s[:, 3]
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)
        a = np.abs(loc) ** 2
        np.testing.assert_allclose(a[:, 2] + a[:, 1], a[:, 0] + a[:, 3], atol=1e-12)

    def test_zero_spinor_rejected(self):
        vals = self.X.values.copy()
        c = int(self.patch.graph.quad_corners[self.iq[0], 0])
        vals[c] = 0.0
        X2 = DiracSpinor(self.patch.graph, self.cover, vals)
        with pytest.raises(ZeroSpinor):
            build_embedding(X2, self.weights, quads=self.iq, check=False)

    def test_assumption_report(self):
        rep = assumption_report(self.emb)
        assert rep["min_half_angle"] == pytest.approx(np.pi / 4)
        assert rep["kappa_hat"] <= 1.0 + 1e-12
        assert rep["kappa_hat_2delta"] < 1.0
        assert rep["supQ_over_delta"] == pytest.approx(0.5)

    def test_kappa_shift_invariance(self):
        emb2, w2, X2, c2 = self.patch.isoradial()
        emb2.Q = emb2.Q + 3.7
        r1 = assumption_report(self.emb)
        r2 = assumption_report(emb2)
        assert r2["kappa_hat"] == pytest.approx(r1["kappa_hat"])
        assert r2["supQ_over_delta"] == pytest.approx(r1["supQ_over_delta"])


class TestPerturbedEmbeddings:
    def test_proper_and_consistent(self):
        for seed in (0, 1, 2):
            emb, w, X, cover = perturbed_embedding(8, 8, seed=seed, eps=0.12)
            ok, msgs = propriety_check(emb)
            assert ok, msgs
            res, _ = check_propagation(X, w, emb.quads)
            assert res < 1e-12

    def test_theta_roundtrip(self):
        emb, w, X, cover = perturbed_embedding(8, 8, seed=4, theta_spread=0.3)
        for z in emb.quads:
            assert recover_theta(emb, z) == pytest.approx(w.theta[z], abs=1e-9)

    def test_theta_roundtrip_at_03(self):
        # build from theta = 0.3 everywhere, then recover: 0.3 +- 1e-10
        from sembed.cover import make_double_cover
        from sembed.lattices import SquarePatch
        from sembed.spinor import (
            assemble_from_local_tuples,
            local_tuples_from_positions,
            propagation_nullspace,
        )

        patch = SquarePatch(6, 6)
        g = patch.graph
        iq = patch.interior_quads()
        theta = np.full(g.n_quads, 0.3)
        cover = make_double_cover(g)
        nb = propagation_nullspace(g, cover, theta, iq)
        loc = local_tuples_from_positions(g, patch.theta, patch.pos, None, iq)
        x_iso, _ = assemble_from_local_tuples(g, cover, loc, iq)
        x0 = np.where(np.isnan(x_iso), 0.0, x_iso)
        vals = nb @ (nb.T @ x0.real) + 1j * (nb @ (nb.T @ x0.imag))
        X = DiracSpinor(g, cover, vals)
        emb = build_embedding(X, IsingWeights(theta), quads=iq,
                              base_vertex=int(g.quads[iq[0], 0]))
        for z in iq:
            assert recover_theta(emb, z) == pytest.approx(0.3, abs=1e-10)

    def test_random_quads_theta_recovery(self):
        # 100 random single-quad instances: build from theta, recover theta
        rng = np.random.default_rng(11)
        from sembed.lattices import SquarePatch
        p = SquarePatch(4, 4)
        g = p.graph
        z = int(p.interior_quads()[0])
        from sembed.cover import make_double_cover
        cover = make_double_cover(g)
        for _ in range(100):
            th = rng.uniform(0.15, np.pi / 2 - 0.15)
            x00 = rng.standard_normal() + 1j * rng.standard_normal()
            x11 = rng.standard_normal() + 1j * rng.standard_normal()
            if np.imag(x11 * np.conj(x00)) < 0:
                x11 = -x11
            x01 = x00 * np.cos(th) + x11 * np.sin(th)
            x10 = x00 * np.sin(th) - x11 * np.cos(th)
            loc = np.array([[x00, x01, x10, x11]])
            theta = np.full(g.n_quads, th)
            from sembed.spinor import assemble_from_local_tuples
            vals, _ = assemble_from_local_tuples(g, cover, loc, [z])
            X = DiracSpinor(g, cover, vals)
            emb = build_embedding(
                X, IsingWeights(theta), quads=[z], check=False,
                base_vertex=int(g.quads[z, 0]),
            )
            if emb.r_z[z] > 1e-6 * emb.delta:
                assert recover_theta(emb, z) == pytest.approx(th, abs=1e-9)

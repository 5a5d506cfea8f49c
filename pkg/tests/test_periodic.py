import numpy as np
import pytest

from sembed.embedding import assumption_report, propriety_check
from sembed.periodic import (
    NotCritical,
    TangentCircles,
    _solve_circle_pair,
    canonical_periodic,
    period_increments,
    similarity_error,
    torus_model,
    tune_critical,
    unroll,
)
from sembed.spinor import check_propagation


class TestSquareLattice:
    def test_critical_kernel_and_gauge(self):
        model = torus_model("square", 2, 2)
        theta = np.full(model.graph.n_quads, np.pi / 4)
        vals, data = canonical_periodic(model, theta)
        assert abs(data.k) < 1e-10  # Q of X0 already periodic
        (A_S, B_S), (A_Q, B_Q) = period_increments(model, vals)
        assert abs(A_Q) < 1e-8 and abs(B_Q) < 1e-8
        assert abs(A_S) > 0.1 and abs(B_S) > 0.1

    def test_embedding_similar_to_isoradial(self):
        model = torus_model("square", 2, 2)
        theta = np.full(model.graph.n_quads, np.pi / 4)
        vals, data = canonical_periodic(model, theta)
        emb, patch, qm, X, w, cover = unroll(model, vals, data.holonomy)
        assert similarity_error(emb, patch.pos) < 1e-6
        assert propriety_check(emb)[0]
        res, _ = check_propagation(X, w, emb.quads)
        assert res < 1e-9

    def test_off_critical_rejected(self):
        model = torus_model("square", 2, 2)
        x = (np.sqrt(2) - 1) * 1.05
        theta = np.full(model.graph.n_quads, 2 * np.arctan(x))
        with pytest.raises(NotCritical):
            canonical_periodic(model, theta)


class TestRhombicLattice:
    def test_pi6_embedding(self):
        model = torus_model("triangular", 2, 2)
        theta = np.full(model.graph.n_quads, np.pi / 6)
        vals, data = canonical_periodic(model, theta)
        (A_S, B_S), (A_Q, B_Q) = period_increments(model, vals)
        assert abs(A_Q) < 1e-8 and abs(B_Q) < 1e-8
        emb, patch, qm, X, w, cover = unroll(model, vals, data.holonomy)
        assert similarity_error(emb, patch.pos) < 1e-6
        assert propriety_check(emb)[0]

    def test_off_critical_rejected(self):
        model = torus_model("triangular", 2, 2)
        theta = np.full(model.graph.n_quads, np.pi / 6 * 1.08)
        with pytest.raises(NotCritical):
            canonical_periodic(model, theta)


class TestNonIsoradial:
    def test_tuned_critical_embedding(self):
        model = torus_model("triangular", 2, 2)
        rng = np.random.default_rng(4)
        base = np.full(model.graph.n_quads, np.pi / 6) + rng.uniform(
            -0.12, 0.12, model.graph.n_quads
        )
        theta, t = tune_critical(model, base, np.ones(model.graph.n_quads))
        vals, data = canonical_periodic(model, theta)
        (A_S, B_S), (A_Q, B_Q) = period_increments(model, vals)
        assert abs(A_Q) < 1e-7 and abs(B_Q) < 1e-7
        emb, patch, qm, X, w, cover = unroll(model, vals, data.holonomy)
        assert propriety_check(emb)[0]
        # genuinely non-isoradial: the origami map is not two-valued
        qv = emb.Q[~np.isnan(emb.Q)]
        assert len(np.unique(np.round(qv - qv.min(), 8))) > 2
        assert similarity_error(emb, patch.pos) > 1e-4
        rep = assumption_report(emb)
        assert rep["kappa_hat"] <= 1.0 + 1e-9


class TestCircleSolve:
    def test_reciprocal_roots(self):
        # constructed data with a genuine solution inside the disc
        A_S, B_S = 1.0 + 0.3j, 0.2 + 1.1j
        k_true = 0.3 - 0.2j
        A_Q = -2 * np.real(k_true * A_S) / (1 + abs(k_true) ** 2)
        B_Q = -2 * np.real(k_true * B_S) / (1 + abs(k_true) ** 2)
        k = _solve_circle_pair(A_S, A_Q, B_S, B_Q)
        assert k == pytest.approx(k_true, abs=1e-12)

    def test_degenerate_line_case(self):
        # A_Q = 0: first equation degenerates to a line through the origin
        A_S, B_S = 1.0 + 0.0j, 0.0 + 1.0j
        k_true = 0.4j
        A_Q = 0.0
        B_Q = -2 * np.real(k_true * B_S) / (1 + abs(k_true) ** 2)
        k = _solve_circle_pair(A_S, A_Q, B_S, B_Q)
        assert abs((1 + abs(k) ** 2) * A_Q + 2 * np.real(k * A_S)) < 1e-12
        assert abs((1 + abs(k) ** 2) * B_Q + 2 * np.real(k * B_S)) < 1e-12

    def test_tangent_circles_raises(self):
        # admissibility equality: circles touch on the unit circle
        model = torus_model("square", 2, 2)
        theta = np.full(model.graph.n_quads, np.pi / 4)
        vals, data = canonical_periodic(model, theta)
        # directly: radical-line miss
        with pytest.raises(TangentCircles):
            _solve_circle_pair(1.0 + 0j, 1.0, 1j, 1.0)

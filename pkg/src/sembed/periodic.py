"""Canonical double-periodic s-embeddings of critical Ising tori.

The propagation operator of a double-periodic critical model has a
two-dimensional space of real periodic solutions.  Forming ``X0 = X1 + i*X2``
and correcting by the unique gauge ``X = X0 + k*conj(X0)`` with ``|k| < 1``
makes the origami map doubly periodic; the gauge solves a pair of circle
equations whose intersection is guaranteed by an admissibility inequality.

Covers on the torus are handled by assembling the propagation operator in a
translation-periodic reference gauge with explicit holonomy signs along the
two periods; all four sign classes are scanned for the kernel.
"""

import numpy as np

from .embedding import build_embedding
from .lambda_graph import build_lambda
from .lattices import SquarePatch, square_torus, triangular_torus
from .planar import trace_faces
from .spinor import DiracSpinor, assemble_from_local_tuples
from .weights import IsingWeights


class NotCritical(ValueError):
    """Propagation operator has no two-dimensional periodic kernel."""


class TangentCircles(ValueError):
    """The admissibility inequality fails or degenerates."""


class PeriodicData:
    """Gauge data of a canonical periodic embedding.

    Attributes: period increments A_S, B_S (complex) and A_Q, B_Q (real) of
    the ungauged solution, the gauge ``k`` in the unit disc, the holonomy
    signs of the kernel's cover, and the singular-value gap diagnostics.
    """

    def __init__(self, A_S, B_S, A_Q, B_Q, k, holonomy, sigma, periods):
        self.A_S = A_S
        self.B_S = B_S
        self.A_Q = A_Q
        self.B_Q = B_Q
        self.k = k
        self.holonomy = holonomy
        self.sigma = sigma
        self.periods = periods


class TorusModel:
    """A double-periodic weighted graph with reference geometry.

    ``pos4[z, slot]`` holds unrolled reference positions of the quad's
    vertex slots; ``wrap[z, slot]`` the integer period shifts of the slot
    relative to the corner's canonical instance; ``tau4`` the reference-gauge
    local sheet signs.
    """

    def __init__(self, kind, M, N, graph, cells, pos4, theta_ref, periods,
                 patch_factory):
        self.kind = kind
        self.M, self.N = M, N
        self.graph = graph
        self.cells = cells
        self.pos4 = pos4
        self.theta_ref = theta_ref
        self.periods = periods
        self.patch_factory = patch_factory
        self._setup_gauge()

    def _setup_gauge(self):
        g = self.graph
        pos4 = self.pos4
        # canonical corner midpoints: first slot instance encountered
        mid = np.full(g.n_corners, np.nan + 0j, dtype=np.complex128)
        slots_bw = [(0, 1), (3, 0), (2, 1), (2, 3)]  # (black, white) per slot
        self.slot_mid = np.empty((g.n_quads, 4), dtype=np.complex128)
        for z in range(g.n_quads):
            for slot in range(4):
                bs, ws = slots_bw[slot]
                m = 0.5 * (pos4[z, bs] + pos4[z, ws])
                self.slot_mid[z, slot] = m
                c = int(g.quad_corners[z, slot])
                if np.isnan(mid[c].real):
                    mid[c] = m
        self.corner_mid = mid

        # integer wrap shifts per slot
        P1, P2 = self.periods
        Pm = np.array([[P1.real, P2.real], [P1.imag, P2.imag]])
        Pinv = np.linalg.inv(Pm)
        self.wrap = np.zeros((g.n_quads, 4, 2), dtype=np.int64)
        for z in range(g.n_quads):
            for slot in range(4):
                c = int(g.quad_corners[z, slot])
                d = self.slot_mid[z, slot] - mid[c]
                ab = Pinv @ np.array([d.real, d.imag])
                ab_i = np.round(ab).astype(int)
                if np.abs(ab - ab_i).max() > 1e-9:
                    raise ValueError("slot shift is not an integer period")
                self.wrap[z, slot] = ab_i

        # edge vectors per corner and reference local tuples / sheet signs
        E = np.empty(g.n_corners, dtype=np.complex128)
        for z in range(g.n_quads):
            q = pos4[z]
            e = (q[0] - q[1], q[0] - q[3], q[2] - q[1], q[2] - q[3])
            for slot in range(4):
                E[int(g.quad_corners[z, slot])] = e[slot]
        self.rho = np.sqrt(E)

        th = self.theta_ref
        tau4 = np.empty((g.n_quads, 4), dtype=np.int8)
        for z in range(g.n_quads):
            q = pos4[z]
            x00 = np.sqrt(q[0] - q[1])
            x11 = np.sqrt(q[2] - q[3])
            if np.imag(x11 * np.conj(x00)) * np.sin(th[z]) * np.cos(th[z]) < 0:
                x11 = -x11
            x01 = x00 * np.cos(th[z]) + x11 * np.sin(th[z])
            x10 = x00 * np.sin(th[z]) - x11 * np.cos(th[z])
            loc = (x00, x01, x10, x11)
            if abs(x01**2 - (q[0] - q[3])) + abs(x10**2 - (q[2] - q[1])) > 1e-8 * (
                abs(x00**2) + abs(x11**2)
            ):
                raise ValueError(
                    f"reference positions/weights inconsistent at quad {z}"
                )
            for slot in range(4):
                c = int(g.quad_corners[z, slot])
                ratio = loc[slot] / self.rho[c]
                tau4[z, slot] = 1 if ratio.real > 0 else -1
        self.tau4 = tau4

    def propagation_dense(self, theta, holonomy):
        """Dense real propagation operator for given weights and holonomy."""
        g = self.graph
        hx, hy = holonomy
        P = np.zeros((2 * g.n_quads, g.n_corners))
        for z in range(g.n_quads):
            th = theta[z]
            cs, sn = np.cos(th), np.sin(th)
            coef = (
                (1, -cs, -sn),  # X01 - X00 cos - X11 sin
                (1, -sn, +cs),  # X10 - X00 sin + X11 cos
            )
            slots_rows = ((1, 0, 3), (2, 0, 3))
            for r in range(2):
                for w, slot in zip(coef[r], slots_rows[r]):
                    c = int(g.quad_corners[z, slot])
                    a, b = self.wrap[z, slot]
                    h = (hx ** abs(int(a))) * (hy ** abs(int(b)))
                    P[2 * z + r, c] += w * self.tau4[z, slot] * h
        return P


def _square_model(M, N, delta=1.0):
    g, cells = square_torus(M, N)
    pos4 = np.empty((g.n_quads, 4), dtype=np.complex128)
    for z, (m, n) in enumerate(cells):
        if (m + n) % 2 == 1:
            u, w = m + 1j * n, (m + 1) + 1j * (n + 1)
            fr, fl = (m + 1) + 1j * n, m + 1j * (n + 1)
        else:
            u, w = (m + 1) + 1j * n, m + 1j * (n + 1)
            fr, fl = (m + 1) + 1j * (n + 1), m + 1j * n
        pos4[z] = np.array([u, fr, w, fl]) * delta
    theta_ref = np.full(g.n_quads, np.pi / 4)
    periods = (M * delta, 1j * N * delta)

    def patch_factory(tiles_x, tiles_y):
        p = SquarePatch(M * tiles_x, N * tiles_y, delta=delta)

        def quad_map(zp):
            m, n = p.cell_of_edge[zp]
            return (m % M) + (n % N) * M, (m // M, n // N)

        return p.graph, p.theta, quad_map, p

    return TorusModel("square", M, N, g, cells, pos4, theta_ref, periods,
                      patch_factory)


class TriangularPatch:
    """Parallelogram block of the triangular lattice with its quad-graph."""

    def __init__(self, M, N, delta=1.0):
        u1, u2 = delta * np.sqrt(3.0), delta * np.sqrt(3.0) * np.exp(1j * np.pi / 3)
        self.M, self.N, self.delta = M, N, delta
        self.u1, self.u2 = u1, u2

        def vid(m, n):
            return n * (M + 1) + m

        pos_b = np.array(
            [m * u1 + n * u2 for n in range(N + 1) for m in range(M + 1)]
        )
        edges, cells, classes = [], [], []
        for n in range(N + 1):
            for m in range(M + 1):
                for cls, (dm, dn) in enumerate([(1, 0), (0, 1), (-1, 1)]):
                    m2, n2 = m + dm, n + dn
                    if 0 <= m2 <= M and 0 <= n2 <= N:
                        if cls == 2 and (m2 > M or n2 > N):
                            continue
                        edges.append((vid(m, n), vid(m2, n2)))
                        cells.append((m, n))
                        classes.append(cls)
        # drop the two sharp-corner vertices of the parallelogram if degree 1
        faces, outer = trace_faces(len(pos_b), edges, pos_b)
        self.graph = build_lambda(len(pos_b), edges, faces, outer_face=outer)
        g = self.graph
        pos = np.full(g.nb + g.nw, np.nan + 0j, dtype=np.complex128)
        pos[: g.nb] = pos_b
        for f, cyc in enumerate(g._faces_darts):
            if g.nb + f == g.outer_white:
                continue
            pts = [pos_b[h] for (_, h) in cyc]
            pos[g.nb + f] = sum(pts) / len(pts)
        self.pos = pos
        self.cells = cells
        self.classes = classes

    def interior_quads(self):
        g = self.graph
        return np.nonzero((g.quads != g.outer_white).all(axis=1))[0]


def _triangular_model(M, N, delta=1.0):
    g, cells, classes, pos_hint = triangular_torus(M, N)
    u1 = delta * np.sqrt(3.0)
    u2 = delta * np.sqrt(3.0) * np.exp(1j * np.pi / 3)

    def vpos(m, n):
        return m * u1 + n * u2

    up_center = (vpos(0, 0) + vpos(1, 0) + vpos(0, 1)) / 3.0
    dn_center = (vpos(1, 0) + vpos(1, 1) + vpos(0, 1)) / 3.0
    pos4 = np.empty((g.n_quads, 4), dtype=np.complex128)
    for z, ((m, n), cls) in enumerate(zip(cells, classes)):
        base = vpos(m, n)
        if cls == 0:  # edge v -> v+u1; faces: up(m,n) left? derive from duals
            u, w = base, base + u1
            f_candidates = (base + up_center, base + dn_center - u2)
        elif cls == 1:  # v -> v+u2
            u, w = base, base + u2
            f_candidates = (base + up_center, base + dn_center - u1)
        else:  # v -> v-u1+u2
            u, w = base, base - u1 + u2
            f_candidates = (base - u1 + dn_center, base - u1 + up_center)
        # right face of u->w: cross product test
        d = w - u
        fr, fl = f_candidates
        if np.imag(np.conj(d) * (fr - u)) > 0:
            fr, fl = fl, fr
        pos4[z] = (u, fr, w, fl)
    theta_ref = np.full(g.n_quads, np.pi / 6)
    periods = (M * u1, N * u2)

    def patch_factory(tiles_x, tiles_y):
        p = TriangularPatch(M * tiles_x, N * tiles_y, delta=delta)
        lut = {}
        for zp, ((m, n), cls) in enumerate(zip(p.cells, p.classes)):
            lut[zp] = (m, n, cls)

        def quad_map(zp):
            m, n, cls = lut[zp]
            zf = 3 * ((n % N) * M + (m % M)) + cls
            return zf, (m // M, n // N)

        theta_patch = np.full(p.graph.n_quads, np.pi / 6)
        return p.graph, theta_patch, quad_map, p

    return TorusModel("triangular", M, N, g, cells, pos4, theta_ref, periods,
                      patch_factory)


def torus_model(kind, M, N, delta=1.0):
    if kind == "square":
        return _square_model(M, N, delta)
    if kind == "triangular":
        return _triangular_model(M, N, delta)
    raise ValueError(f"unknown torus kind {kind!r}")


def kernel_scan(model, theta, rcond=1e-6):
    """Singular values of the propagation operator over the holonomy classes.

    Returns (holonomy, X1, X2, sigma) of the class with a two-dimensional
    kernel; raises :class:`NotCritical` when the gap test fails everywhere.
    """
    best = None
    for hx in (1, -1):
        for hy in (1, -1):
            P = model.propagation_dense(theta, (hx, hy))
            u, s, vt = np.linalg.svd(P)
            gap = s[-2] / max(s[-3], 1e-300)
            if best is None or gap < best[0]:
                best = (gap, (hx, hy), vt, s)
    gap, hol, vt, s = best
    if gap > rcond:
        raise NotCritical(
            f"no two-dimensional kernel: best sigma2/sigma3 = {gap:.2e} "
            f"(holonomy {hol})"
        )
    return hol, vt[-1], vt[-2], s


def period_increments(model, values):
    """(dS, dQ) increments of the (possibly complex) solution along both periods.

    Uses the wrap bookkeeping: summing corner increments along a fundamental
    chain is equivalent to comparing S at a vertex and its translate; here we
    integrate S and Q over a 2x2-tile unrolled patch and difference.
    """
    emb, patch, quad_map = unroll(model, values, holonomy=model._hol,
                                  tiles=(3, 3), _raw=True)
    g = patch.graph
    P1, P2 = model.periods
    pos = patch.pos
    idx = {}
    for v in range(g.nb):
        idx[(round(pos[v].real, 6), round(pos[v].imag, 6))] = v

    def increment(P):
        for v in range(g.nb):
            if np.isnan(emb.S[v]):
                continue
            key = (round((pos[v] + P).real, 6), round((pos[v] + P).imag, 6))
            if key in idx and not np.isnan(emb.S[idx[key]]):
                u = idx[key]
                return emb.S[u] - emb.S[v], emb.Q[u] - emb.Q[v]
        raise RuntimeError("no translated vertex pair in the unrolled patch")

    dS1, dQ1 = increment(P1)
    dS2, dQ2 = increment(P2)
    return (dS1, dS2), (dQ1, dQ2)


def unroll(model, values, holonomy, tiles=(3, 3), _raw=False):
    """Unroll a torus solution to a plane patch and build its embedding.

    Returns (embedding, patch, quad_map); the patch's interior quads carry
    the geometry.  ``values`` are fundamental corner values in the reference
    gauge; plane values pick up holonomy signs per tile and per wrap shift.
    """
    from .cover import make_double_cover

    gph, theta_patch, quad_map, patch = model.patch_factory(*tiles)
    hx, hy = holonomy
    gf = model.graph
    nq = gph.n_quads
    if gph.outer_white is not None:
        quads = np.nonzero((gph.quads != gph.outer_white).all(axis=1))[0]
    else:
        quads = np.arange(nq)
    loc = np.empty((len(quads), 4), dtype=np.complex128)
    theta_vals = np.empty(nq)
    for i, zp in enumerate(quads):
        zf, (tx, ty) = quad_map(int(zp))
        for slot in range(4):
            c = int(gf.quad_corners[zf, slot])
            a, b = model.wrap[zf, slot]
            h = (hx ** abs(int(a) + tx)) * (hy ** abs(int(b) + ty))
            loc[i, slot] = h * model.tau4[zf, slot] * values[c]
    for zp in range(nq):
        zf, _ = quad_map(int(zp))
        theta_vals[zp] = model._theta[zf]
    cover = make_double_cover(gph)
    vals, _sz = assemble_from_local_tuples(gph, cover, loc, quads)
    X = DiracSpinor(gph, cover, vals)
    weights = IsingWeights(theta_vals)
    emb = build_embedding(X, weights, quads=quads,
                          base_vertex=int(gph.quads[quads[0], 0]))
    if _raw:
        return emb, patch, quad_map
    return emb, patch, quad_map, X, weights, cover


def canonical_periodic(model, theta, rcond=1e-6):
    """Lemma-level construction: kernel, gauge k, and periodicity data.

    Returns (values, PeriodicData): ``values`` is the gauged complex solution
    ``X0 + k*conj(X0)`` on the fundamental corners.  Raises
    :class:`NotCritical` or :class:`TangentCircles`.
    """
    theta = np.asarray(theta, dtype=float)
    model._theta = theta
    hol, X1, X2, sigma = kernel_scan(model, theta, rcond)
    model._hol = hol
    X0 = X1 + 1j * X2
    (A_S, B_S), (A_Q, B_Q) = period_increments(model, X0)

    # admissibility: |A_Q B_S - B_Q A_S|^2 <= (Im[A_S conj(B_S)])^2, strict
    lhs = abs(A_Q * B_S - B_Q * A_S) ** 2
    rhs = np.imag(A_S * np.conj(B_S)) ** 2
    if not (lhs < rhs * (1 - 1e-12) + 1e-300):
        raise TangentCircles(
            f"admissibility fails: |AQ BS - BQ AS|^2 = {lhs:.6e} "
            f">= (Im AS conj BS)^2 = {rhs:.6e}"
        )

    # Q_X increments of X = X0 + k conj(X0) are (1+|k|^2) A_Q + 2 Re[conj(k) A_S]
    k = _solve_circle_pair(np.conj(A_S), A_Q, np.conj(B_S), B_Q)
    values = X0 + k * np.conj(X0)
    data = PeriodicData(A_S, B_S, A_Q, B_Q, k, hol, sigma, model.periods)
    return values, data


def similarity_error(emb, ref_pos):
    """Best-fit similarity (rotation+scale+shift) distance to a reference.

    Fits ``ref -> lam*ref + mu`` to the embedding's S over all vertices with
    geometry and returns the max residual relative to the embedding scale.
    """
    m = ~np.isnan(emb.S) & ~np.isnan(ref_pos)
    S = emb.S[m]
    R = ref_pos[m]
    Rc = R - R.mean()
    Sc = S - S.mean()
    lam = np.vdot(Rc, Sc) / np.vdot(Rc, Rc)
    resid = np.abs(Sc - lam * Rc)
    return float(resid.max() / (np.abs(Sc).max() + 1e-300))


def tune_critical(model, theta_base, direction, bracket=(-0.4, 0.4), tol=1e-13):
    """Scalar tuning of weights to criticality via the singular-value gap.

    Minimizes the second-smallest singular value of the propagation operator
    along ``theta_base + t*direction`` over the holonomy classes; returns
    (theta_critical, t).  The minimum must produce a clean kernel gap.
    """
    from scipy.optimize import minimize_scalar

    direction = np.asarray(direction, dtype=float)

    def s2(t):
        theta = theta_base + t * direction
        if theta.min() <= 0.01 or theta.max() >= np.pi / 2 - 0.01:
            return 1e6
        best = None
        for hx in (1, -1):
            for hy in (1, -1):
                P = model.propagation_dense(theta, (hx, hy))
                s = np.linalg.svd(P, compute_uv=False)
                best = s[-2] if best is None else min(best, s[-2])
        return best

    res = minimize_scalar(s2, bounds=bracket, method="bounded",
                          options={"xatol": tol})
    theta = theta_base + res.x * direction
    # will raise NotCritical downstream if the gap is not clean
    return theta, float(res.x)


def _solve_circle_pair(A_S, A_Q, B_S, B_Q):
    """k in the unit disc with (1+|k|^2) A_Q + 2 Re[k A_S] = 0 = same for B.

    Both solutions lie on a radical line through the origin and have
    reciprocal-conjugate moduli, so exactly one is inside the disc.
    """
    if abs(A_Q) < 1e-14 and abs(B_Q) < 1e-14:
        return 0.0 + 0.0j
    # reduce to a single circle + line through the origin
    if abs(A_Q) < 1e-14:
        # line Re[k A_S] = 0 intersect circle of B
        direction = 1j * A_S / abs(A_S)
        a, b = B_S, B_Q
    elif abs(B_Q) < 1e-14:
        direction = 1j * B_S / abs(B_S)
        a, b = A_S, A_Q
    else:
        alpha = A_S.real / A_Q - B_S.real / B_Q
        beta = A_S.imag / A_Q - B_S.imag / B_Q
        direction = beta + 1j * alpha
        if abs(direction) < 1e-15:
            raise TangentCircles("coincident circles: gauge not unique")
        direction = direction / abs(direction)
        a, b = A_S, A_Q
    # k = t*direction on circle: t^2 + 2 t Re[direction*aS]/aQ + 1 = 0
    p = np.real(direction * a) / b
    disc = p * p - 1.0
    if disc <= 0:
        raise TangentCircles("radical line misses the circles")
    t1 = -p + np.sqrt(disc)
    t2 = -p - np.sqrt(disc)
    k1, k2 = t1 * direction, t2 * direction
    inside = [k for k in (k1, k2) if abs(k) < 1.0]
    if not inside:
        raise TangentCircles("no gauge root inside the unit disc")
    return min(inside, key=abs)

"""s-embeddings: integrating a Dirac spinor into quad geometry.

The embedding S on the quad-graph satisfies ``S(vb) - S(vw) = X(c)^2`` per
corner and extends to quad centers; the origami map Q has increments
``|X(c)|^2``.  Quads are tangential; ``r_z`` is their inradius.  All algebraic
identities carry explicit consistency checks since they are exact in exact
arithmetic.
"""

import numpy as np

from .spinor import DiracSpinor, check_propagation


class ZeroSpinor(ValueError):
    pass


class InconsistentCycles(ValueError):
    pass


class DegenerateQuad(ValueError):
    pass


class SEmbedding:
    """Geometry of an s-embedding on (a sub-patch of) a quad-graph.

    Attributes
    ----------
    S, Q : complex/real arrays over Lambda-vertices (NaN where undefined).
    S_z : complex per quad, the incircle center (NaN on boundary quads).
    O_z : complex per quad, origami value at the center, Im >= 0.
    r_z : inradius per quad.
    theta : weight angles per quad.
    quads : the quads carrying geometry.
    delta : mesh scale (max edge length over the geometric quads).
    """

    def __init__(self, graph, X, weights, S, Q, S_z, O_z, r_z, quads, delta):
        self.graph = graph
        self.X = X
        self.weights = weights
        self.theta = weights.theta
        self.S = S
        self.Q = Q
        self.S_z = S_z
        self.O_z = O_z
        self.r_z = r_z
        self.quads = np.asarray(quads)
        self.delta = delta
        self._quad_set = None

    # -- basic per-quad data ----------------------------------------------

    def local_X(self, quads=None):
        """Consecutive-lift spinor values per quad (slots c00,c01,c10,c11)."""
        return self.X.local_tuples(self.quads if quads is None else quads)

    def quad_positions(self, quads=None):
        q = self.quads if quads is None else np.asarray(quads)
        return self.S[self.graph.quads[q]]

    def quad_area(self, quads=None):
        pts = self.quad_positions(quads)
        return 0.5 * np.sum(np.imag(np.conj(pts) * np.roll(pts, -1, axis=1)), axis=1)

    def has_geometry(self, z):
        if self._quad_set is None:
            self._quad_set = set(int(q) for q in self.quads)
        return int(z) in self._quad_set

    def is_degenerate(self, z):
        k = self._quad_index(z)
        return self.r_z[k] <= 1e-12 * self.delta

    def _quad_index(self, z):
        if not hasattr(self, "_qidx"):
            self._qidx = {int(q): i for i, q in enumerate(self.quads)}
        return self._qidx[int(z)]

    # -- diagnostics -------------------------------------------------------

    def half_angles(self, z):
        """Half-angles of the quad at (v0b, v0w, v1b, v1w)."""
        pts = self.S[self.graph.quads[z]]
        out = np.empty(4)
        for k in range(4):
            a = pts[(k - 1) % 4] - pts[k]
            b = pts[(k + 1) % 4] - pts[k]
            ang = np.angle(a / b) % (2 * np.pi)  # interior angle, ccw quad
            out[k] = 0.5 * ang
        return out


def build_embedding(X, weights, base_vertex=None, base_value=0.0, quads=None,
                    tol=1e-9, check=True):
    """Integrate a Dirac spinor into an s-embedding.

    Parameters
    ----------
    X : DiracSpinor
    weights : IsingWeights
    base_vertex : Lambda-vertex id anchored at ``base_value``.
    quads : quad ids to integrate over (default: all quads whose vertices
        avoid the outer face).
    tol : relative tolerance for cycle consistency.

    Raises
    ------
    ZeroSpinor, InconsistentCycles
    """
    g = X.graph
    if quads is None:
        if g.outer_white is not None:
            quads = np.nonzero((g.quads != g.outer_white).all(axis=1))[0]
        else:
            quads = np.arange(g.n_quads)
    quads = np.asarray(quads)
    loc = X.local_tuples(quads)
    if np.abs(loc).min() == 0.0:
        k, slot = np.unravel_index(np.argmin(np.abs(loc)), loc.shape)
        raise ZeroSpinor(f"X vanishes at a corner of quad {int(quads[k])}")
    if check:
        res, _ = check_propagation(X, weights, quads)
        if res > 1e-6:
            raise InconsistentCycles(f"propagation residual {res:.2e}")

    th = weights.theta[quads]
    sq = loc**2
    absq = np.abs(loc) ** 2
    scale = float(np.abs(sq).max())

    # spanning-tree integration over corners of the selected quads
    nL = g.nb + g.nw
    S = np.full(nL, np.nan + 0j, dtype=np.complex128)
    Q = np.full(nL, np.nan, dtype=np.float64)
    # corner -> (vb, vw, X^2, |X|^2), one entry per (quad, slot)
    inc = {}
    for k, z in enumerate(quads):
        for slot, c in enumerate(g.quad_corners[z]):
            vb = int(g.cor_vb[c])
            vw = int(g.cor_vw[c])
            inc.setdefault(int(c), []).append((vb, vw, sq[k, slot], absq[k, slot]))

    verts = sorted(
        {int(v) for z in quads for v in g.quads[z]}
    )
    if base_vertex is None:
        base_vertex = verts[0]
    S[base_vertex] = complex(base_value)
    Q[base_vertex] = 0.0
    adjacency = {v: [] for v in verts}
    for c, lst in inc.items():
        vb, vw, s2, a2 = lst[0]
        adjacency[vb].append((vw, -s2, -a2, c))
        adjacency[vw].append((vb, s2, a2, c))
    stack = [int(base_vertex)]
    seen = {int(base_vertex)}
    while stack:
        v = stack.pop()
        for u, ds, dq, _c in adjacency[v]:
            if u not in seen:
                S[u] = S[v] + ds
                Q[u] = Q[v] + dq
                seen.add(u)
                stack.append(u)
    if len(seen) < len(verts):
        raise InconsistentCycles("quad set is not edge-connected")

    # closure check on every corner, and against any duplicate increments
    worst = 0.0
    for c, lst in inc.items():
        for vb, vw, s2, a2 in lst:
            worst = max(worst, abs(S[vb] - S[vw] - s2), abs(Q[vb] - Q[vw] - a2))
    if worst > tol * scale:
        raise InconsistentCycles(
            f"tree-independent integration disagrees by {worst:.2e}"
        )

    # centers: S(v0b) - S(z) = X00*X01*cos, S(v1b) - S(z) = -X10*X11*cos,
    # S(v0w) - S(z) = -X00*X10*sin, S(v1w) - S(z) = -X11*X01*sin
    nQ = g.n_quads
    S_z = np.full(nQ, np.nan + 0j, dtype=np.complex128)
    O_z = np.full(nQ, np.nan + 0j, dtype=np.complex128)
    r_z = np.full(nQ, np.nan)
    cth, sth = np.cos(th), np.sin(th)
    offs = np.stack(
        [
            loc[:, 0] * loc[:, 1] * cth,
            -loc[:, 0] * loc[:, 2] * sth,
            -loc[:, 2] * loc[:, 3] * cth,
            -loc[:, 3] * loc[:, 1] * sth,
        ],
        axis=1,
    )
    pts = S[g.quads[quads]]
    centers = pts - offs
    spread = np.abs(centers - centers.mean(axis=1, keepdims=True)).max(axis=1)
    if spread.size and spread.max() > tol * max(scale, 1.0):
        k = int(np.argmax(spread))
        raise InconsistentCycles(
            f"center formulas disagree at quad {int(quads[k])} ({spread[k]:.2e})"
        )
    S_z[quads] = centers.mean(axis=1)

    # inradius, four expressions
    r4 = np.stack(
        [
            np.imag(loc[:, 1] * np.conj(loc[:, 2])) * cth * sth,
            np.imag(loc[:, 3] * np.conj(loc[:, 0])) * cth * sth,
            np.imag(loc[:, 1] * np.conj(loc[:, 0])) * cth,
            np.imag(loc[:, 0] * np.conj(loc[:, 2])) * sth,
        ],
        axis=1,
    )
    if r4.size and np.abs(r4 - r4.mean(axis=1, keepdims=True)).max() > tol * max(scale, 1.0):
        raise InconsistentCycles("inradius expressions disagree")
    r_z[quads] = r4.mean(axis=1)

    # origami value at centers: intersection of circles about Q(v0b), Q(v0w)
    q1 = Q[g.quads[quads][:, 0]]
    q2 = Q[g.quads[quads][:, 1]]
    rr1 = np.abs(offs[:, 0])
    rr2 = np.abs(offs[:, 1])
    with np.errstate(invalid="ignore"):
        xloc = 0.5 * (q1 + q2) + 0.5 * (rr1**2 - rr2**2) / np.where(q2 - q1 == 0, np.inf, q2 - q1)
        y2 = rr1**2 - (xloc - q1) ** 2
        O_z[quads] = xloc + 1j * np.sqrt(np.maximum(y2, 0.0))

    delta = float(np.abs(absq).max())
    emb = SEmbedding(g, X, weights, S, Q, S_z, O_z, r_z, quads, delta)
    return emb


def recover_theta(emb, z):
    """Weight angle of a quad from its half-angles (geometry only)."""
    k = emb._quad_index(z)
    if emb.r_z[k] <= 1e-12 * emb.delta:
        raise DegenerateQuad(f"quad {z} is degenerate")
    phi = emb.half_angles(z)
    t = np.sqrt(np.sin(phi[0]) * np.sin(phi[2]) / (np.sin(phi[1]) * np.sin(phi[3])))
    return float(np.arctan(t))


def assumption_report(emb):
    """Measured Unif / Qflat / Lip constants of an embedding.

    Returns a dict with the edge-length range over delta, the minimal quad
    angle, sup|Q|/delta after the optimal additive shift, and the empirical
    Lipschitz constant of Q above scale delta.
    """
    g = emb.graph
    loc = emb.local_X()
    lens = np.abs(loc) ** 2
    delta = emb.delta
    verts = sorted({int(v) for z in emb.quads for v in g.quads[z]})
    S = emb.S[verts]
    Q = emb.Q[verts]
    shift = -0.5 * (Q.max() + Q.min())
    angles = np.concatenate([2.0 * emb.half_angles(z) for z in emb.quads])

    # empirical Lipschitz constants at scales >= delta and >= 2*delta
    n = len(verts)
    kappa = 0.0
    kappa2 = 0.0
    step = max(1, 2_000_000 // max(n, 1))
    for i0 in range(0, n, step):
        dS = np.abs(S[i0 : i0 + step, None] - S[None, :])
        dQ = np.abs(Q[i0 : i0 + step, None] - Q[None, :])
        mask = dS >= delta
        if mask.any():
            kappa = max(kappa, float((dQ[mask] / dS[mask]).max()))
        mask2 = dS >= 2 * delta
        if mask2.any():
            kappa2 = max(kappa2, float((dQ[mask2] / dS[mask2]).max()))
    return {
        "delta": delta,
        "r0": float(lens.min() / delta),
        "R0": float(lens.max() / delta),
        "theta0": float(angles.min()),
        "min_half_angle": float(angles.min() / 2),
        "supQ_over_delta": float((np.abs(Q + shift)).max() / delta),
        "kappa_hat": kappa,
        "kappa_hat_2delta": kappa2,
        "n_vertices": n,
        "n_quads": int(len(emb.quads)),
    }


def propriety_check(emb, tol=1e-12):
    """Geometric propriety: quads tile without overlap.

    Checks positive orientation and simplicity of every quad, full angle
    2*pi around interior vertices, and pairwise non-overlap of quad edges
    via a spatial hash.  Returns (proper, messages).
    """
    g = emb.graph
    msgs = []
    areas = emb.quad_area()
    if (areas <= 0).any():
        msgs.append(f"non-positive quad area at {int(emb.quads[int(np.argmin(areas))])}")

    # angle sums at vertices interior to the quad set
    count = {}
    tot = {}
    for z in emb.quads:
        ha = emb.half_angles(z)
        for k, v in enumerate(g.quads[z]):
            v = int(v)
            tot[v] = tot.get(v, 0.0) + 2 * ha[k]
            count[v] = count.get(v, 0) + 1
    for v, c in count.items():
        if c == g.degree(v) and abs(tot[v] - 2 * np.pi) > 1e-8:
            msgs.append(f"angle sum {tot[v]:.6f} != 2pi at vertex {v}")

    # segment overlap via grid hash
    segs = []
    for z in emb.quads:
        pts = emb.S[g.quads[z]]
        for k in range(4):
            segs.append((pts[k], pts[(k + 1) % 4], int(z)))
    h = emb.delta
    grid = {}
    for idx, (a, b, z) in enumerate(segs):
        for t in (0.25, 0.75):
            p = a + t * (b - a)
            key = (int(np.floor(p.real / h)), int(np.floor(p.imag / h)))
            grid.setdefault(key, []).append(idx)
    def crosses(a1, b1, a2, b2):
        d1, d2 = b1 - a1, b2 - a2
        den = np.imag(np.conj(d1) * d2)
        if abs(den) < 1e-12 * abs(d1) * abs(d2):
            return False
        t = np.imag(np.conj(a2 - a1) * d2) / den
        s = np.imag(np.conj(a2 - a1) * d1) / den
        eps = 1e-9
        if not (eps < t < 1 - eps and eps < s < 1 - eps):
            return False
        # guard against near-collinear noise: both parametrizations must
        # land on the same point
        return abs((a1 + t * d1) - (a2 + s * d2)) < 1e-9 * (abs(d1) + abs(d2))
    checked = set()
    for key, items in grid.items():
        neigh = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                neigh.extend(grid.get((key[0] + dx, key[1] + dy), []))
        for i in items:
            for j in neigh:
                if j <= i or (i, j) in checked:
                    continue
                checked.add((i, j))
                a1, b1, z1 = segs[i]
                a2, b2, z2 = segs[j]
                if z1 != z2 and crosses(a1, b1, a2, b2):
                    msgs.append(f"quads {z1} and {z2} overlap")
    return (len(msgs) == 0), msgs

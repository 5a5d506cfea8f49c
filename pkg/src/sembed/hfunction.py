"""Primitives H_F of squared s-holomorphic functions, and their structure.

A real spinor X solving the propagation equation corresponds to an
s-holomorphic quad function F through ``X(c) = Re[conj(varsigma) * Xc * F(z)]``
where ``Xc`` is the embedding's Dirac spinor.  The primitive H lives on
Lambda union the quads, has increments ``X(c)^2`` across corners, satisfies a
maximum principle, and is s-subharmonic: ``Delta_S H_F >= 0`` at bulk
vertices.
"""

import numpy as np

from .operators import VARSIGMA, d_S, d_bar_S, d_omega, laplacian_S


class NotSHolomorphic(ValueError):
    pass


class InconsistentCycles(ValueError):
    pass


class HFunction:
    """Real function on Lambda(G) union quads.

    ``values[v]`` for Lambda ids, ``values[nL + z]`` for quads; NaN outside
    the domain of definition.
    """

    def __init__(self, graph, values, base_vertex=None):
        self.graph = graph
        self.values = values
        self.base_vertex = base_vertex

    def on_lambda(self):
        return self.values[: self.graph.nb + self.graph.nw]

    def on_quads(self):
        return self.values[self.graph.nb + self.graph.nw :]


def shol_residuals(emb, F):
    """s-holomorphicity residuals of a quad function across Lambda-edges.

    For each corner interior to the embedding's quad set, compares the
    projections of F on the corner line from the two adjacent quads.
    Returns (max_residual, worst_corner).
    """
    g = emb.graph
    qset = {int(z): None for z in emb.quads}
    worst, worst_c = 0.0, -1
    scale = max(float(np.nanmax(np.abs(F))), 1e-300)
    for c in range(g.n_corners):
        z1, z2 = (int(z) for z in g.corner_quads[c])
        if z1 < 0 or z2 < 0 or z1 not in qset or z2 not in qset:
            continue
        d = emb.S[g.cor_vb[c]] - emb.S[g.cor_vw[c]]
        eta_sq = 1j * np.conj(d) / abs(d)  # varsigma^2 * conj(unit(d))
        p1 = 0.5 * (F[z1] + eta_sq * np.conj(F[z1]))
        p2 = 0.5 * (F[z2] + eta_sq * np.conj(F[z2]))
        r = abs(p1 - p2) / scale
        if r > worst:
            worst, worst_c = r, c
    return worst, worst_c


def spinor_from_f(emb, F, tol=1e-8):
    """Corner spinor X(c) = Re[conj(varsigma) Xc(c) F(z)] of an s-holomorphic F.

    Values are returned in the gauge of the embedding's Dirac spinor; raises
    :class:`NotSHolomorphic` if the two adjacent quads disagree.
    """
    g = emb.graph
    loc = emb.local_X()
    vals = np.full(g.n_corners, np.nan)
    scale = max(float(np.nanmax(np.abs(F))) * emb.delta ** 0.5, 1e-300)
    for k, z in enumerate(emb.quads):
        fz = F[int(z)]
        for slot, c in enumerate(g.quad_corners[z]):
            x = np.real(np.conj(VARSIGMA) * loc[k, slot] * fz)
            # undo the local sheet to store in the cover gauge
            x_gauge = x * emb.X.cover.tau[z, slot]
            c = int(c)
            if np.isnan(vals[c]):
                vals[c] = x_gauge
            elif abs(vals[c] - x_gauge) > tol * scale:
                raise NotSHolomorphic(
                    f"projections disagree at corner {c} "
                    f"({abs(vals[c] - x_gauge):.2e})"
                )
    return vals


def f_from_spinor(emb, X_values, tol=1e-8):
    """s-holomorphic F on quads from a real propagation solution.

    ``X_values`` is a real spinor in the same cover gauge as the embedding's
    Dirac spinor.  Uses the two-projection inversion on the (c01, c10) pair
    and cross-checks on the other diagonal.
    """
    g = emb.graph
    loc = emb.local_X()
    tau = emb.X.cover.tau
    F = np.full(g.n_quads, np.nan + 0j, dtype=np.complex128)
    for k, z in enumerate(emb.quads):
        z = int(z)
        qc = g.quad_corners[z]
        xl = tau[z].astype(float) * X_values[qc]
        x01, x10 = loc[k, 1], loc[k, 2]
        den = np.imag(np.conj(x01) * x10)
        f = (
            -1j
            * VARSIGMA
            * (np.conj(x01) * xl[2] - np.conj(x10) * xl[1])
            / den
        )
        # cross-check on the other diagonal pair (c00, c11)
        x00, x11 = loc[k, 0], loc[k, 3]
        den2 = np.imag(np.conj(x00) * x11)
        f2 = (
            -1j
            * VARSIGMA
            * (np.conj(x00) * xl[3] - np.conj(x11) * xl[0])
            / den2
        )
        if abs(f - f2) > tol * (abs(f) + abs(f2) + 1e-300):
            raise NotSHolomorphic(
                f"corner pairs of quad {z} give different F ({abs(f-f2):.2e})"
            )
        F[z] = f
    return F


def integrate_HF(emb, F=None, X_values=None, base_vertex=None, base_value=0.0,
                 tol=1e-9, check_shol=True):
    """Primitive H on Lambda union quads from F (or directly from a spinor).

    Increments inside each quad come from products of corner values::

        H(v0b) - H(z) =  X00*X01*cos(theta)
        H(v1b) - H(z) = -X10*X11*cos(theta)
        H(v0w) - H(z) = -X00*X10*sin(theta)
        H(v1w) - H(z) = -X11*X01*sin(theta)

    together with ``H(vb) - H(vw) = X(c)^2``.  Path independence is verified;
    H(z) equals the (sin^2, cos^2)-weighted average of the vertex values.
    """
    g = emb.graph
    if X_values is None:
        if check_shol:
            res, c = shol_residuals(emb, F)
            if res > 1e-8:
                raise NotSHolomorphic(
                    f"F is not s-holomorphic (corner {c}, residual {res:.2e})"
                )
        X_values = spinor_from_f(emb, F)
    tau = emb.X.cover.tau
    nL = g.nb + g.nw
    H = np.full(nL + g.n_quads, np.nan)

    # collect increments as (node_a, node_b, H_a - H_b)
    th = emb.theta
    incs = []
    for z in emb.quads:
        z = int(z)
        qc = g.quad_corners[z]
        xl = tau[z].astype(float) * X_values[qc]
        v0b, v0w, v1b, v1w = (int(x) for x in g.quads[z])
        zz = nL + z
        c, s = np.cos(th[z]), np.sin(th[z])
        incs.append((v0b, zz, xl[0] * xl[1] * c))
        incs.append((v1b, zz, -xl[2] * xl[3] * c))
        incs.append((v0w, zz, -xl[0] * xl[2] * s))
        incs.append((v1w, zz, -xl[3] * xl[1] * s))
        incs.append((v0b, v0w, xl[0] ** 2))
        incs.append((v0b, v1w, xl[1] ** 2))
        incs.append((v1b, v0w, xl[2] ** 2))
        incs.append((v1b, v1w, xl[3] ** 2))

    adj = {}
    for a, b, d in incs:
        adj.setdefault(a, []).append((b, -d))
        adj.setdefault(b, []).append((a, d))
    if base_vertex is None:
        base_vertex = min(adj.keys())
    H[base_vertex] = base_value
    stack = [base_vertex]
    seen = {base_vertex}
    while stack:
        u = stack.pop()
        for v, d in adj[u]:
            if v not in seen:
                H[v] = H[u] + d
                seen.add(v)
                stack.append(v)
    scale = max(float(np.abs([d for _, _, d in incs]).max()), 1e-300)
    worst = max(abs(H[a] - H[b] - d) for a, b, d in incs)
    if worst > tol * max(scale, 1.0):
        raise InconsistentCycles(f"H increments do not close ({worst:.2e})")

    # weighted-average identity at centers
    for z in emb.quads:
        z = int(z)
        v0b, v0w, v1b, v1w = (int(x) for x in g.quads[z])
        c2, s2 = np.cos(th[z]) ** 2, np.sin(th[z]) ** 2
        avg = 0.5 * ((H[v0b] + H[v1b]) * s2 + (H[v0w] + H[v1w]) * c2)
        if abs(avg - H[nL + z]) > 10 * tol * max(scale, 1.0):
            raise InconsistentCycles(
                f"weighted-average identity fails at quad {z}"
            )
    return HFunction(g, H, base_vertex)


def dS_HF_residual(emb, F, H):
    """Max residual of d_S H_F = F^2/(4i) and d_bar_S H_F = -conj(F)^2/(4i)."""
    dbar = d_bar_S(emb)
    ds = d_S(emb, dbar)
    HL = np.where(np.isnan(H.on_lambda()), 0.0, H.on_lambda()).astype(complex)
    Fq = F[emb.quads]
    r1 = np.abs(ds.mat @ HL - Fq**2 / 4j)
    r2 = np.abs(dbar.mat @ HL + np.conj(Fq) ** 2 / 4j)
    return float(max(r1.max(), r2.max()))


def s_positivity(emb, H, lap=None):
    """Minimum of [Delta_S H](v) over bulk vertices (expected >= -tol)."""
    if lap is None:
        lap, _ = laplacian_S(emb)
    HL = np.where(np.isnan(H.on_lambda()), 0.0, H.on_lambda())
    vals = lap.mat @ HL
    ok = lap.valid_rows & ~np.isnan(H.on_lambda())
    return float(np.real(vals[ok]).min()) if ok.any() else 0.0


def lambda_diamond_adjacency(graph, nodes=None):
    """Neighbor lists for the Lambda-union-quads graph of Section 2.4."""
    g = graph
    nL = g.nb + g.nw
    adj = {}

    def link(a, b):
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)

    for z in range(g.n_quads):
        zz = nL + z
        vs = [int(v) for v in g.quads[z]]
        for v in vs:
            link(v, zz)
    for c in range(g.n_corners):
        link(int(g.cor_vb[c]), int(g.cor_vw[c]))
    return adj


def max_principle_check(H, strict_tol=0.0):
    """Interior local extrema of an H function (expected: none).

    A node is interior when it and all its neighbors carry values.  Returns
    the list of offending nodes.
    """
    adj = lambda_diamond_adjacency(H.graph)
    vals = H.values
    bad = []
    for u, nbrs in adj.items():
        if np.isnan(vals[u]):
            continue
        nb = [vals[v] for v in nbrs]
        if any(np.isnan(x) for x in nb):
            continue
        if vals[u] > max(nb) + strict_tol or vals[u] < min(nb) - strict_tol:
            bad.append(u)
    return bad


def comparison_check(H1, H2):
    """Interior extrema of H1 - H2 (comparison principle: none expected)."""
    diff = HFunction(H1.graph, H1.values - H2.values)
    return max_principle_check(diff)

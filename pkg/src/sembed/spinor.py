"""Dirac spinors: solutions of the three-term propagation equation.

Spinor values are stored over corners in the gauge of a
:class:`~sembed.cover.CornerSignLift`; the lift's ``tau`` table converts to
the consecutive-lift convention in which the propagation equation around a
quad with weight angle ``theta`` reads::

    X01 = X00*cos(theta) + X11*sin(theta)
    X10 = X00*sin(theta) - X11*cos(theta)

with slots (c00, c01, c10, c11) as in :class:`~sembed.lambda_graph.LambdaGraph`.
"""

import numpy as np
import scipy.sparse as sp


class DiracSpinor:
    """Complex corner values together with their sign structure."""

    def __init__(self, graph, cover, values):
        self.graph = graph
        self.cover = cover
        self.values = np.asarray(values, dtype=np.complex128)

    def local_tuples(self, quads=None):
        """(Q',4) values on the per-quad consecutive lifts."""
        g = self.graph
        quads = np.arange(g.n_quads) if quads is None else np.asarray(quads)
        tau = self.cover.tau[quads].astype(np.complex128)
        return tau * self.values[g.quad_corners[quads]]


def propagation_matrix(graph, cover, theta, quads=None):
    """Sparse propagation operator: two rows per selected quad.

    The kernel of the full operator consists of valid Dirac spinors for the
    given weights in the cover's gauge.
    """
    g = graph
    quads = np.arange(g.n_quads) if quads is None else np.asarray(quads)
    theta = np.asarray(theta, dtype=float)
    th = theta[quads] if len(theta) == g.n_quads else theta
    tau = cover.tau[quads]
    qc = g.quad_corners[quads]
    nq = len(quads)
    rows = np.repeat(np.arange(2 * nq), 3)
    cols = np.empty((nq, 6), dtype=np.int64)
    vals = np.empty((nq, 6), dtype=np.float64)
    # row 1: X01 - X00 cos - X11 sin ; row 2: X10 - X00 sin + X11 cos
    cols[:, 0], vals[:, 0] = qc[:, 1], tau[:, 1]
    cols[:, 1], vals[:, 1] = qc[:, 0], -tau[:, 0] * np.cos(th)
    cols[:, 2], vals[:, 2] = qc[:, 3], -tau[:, 3] * np.sin(th)
    cols[:, 3], vals[:, 3] = qc[:, 2], tau[:, 2]
    cols[:, 4], vals[:, 4] = qc[:, 0], -tau[:, 0] * np.sin(th)
    cols[:, 5], vals[:, 5] = qc[:, 3], tau[:, 3] * np.cos(th)
    cols = cols.reshape(nq, 2, 3).reshape(-1)
    vals = vals.reshape(nq, 2, 3).reshape(-1)
    return sp.csr_matrix((vals, (rows, cols)), shape=(2 * nq, g.n_corners))


def check_propagation(X, weights, quads=None):
    """Residual report of the propagation equation.

    Returns (max_residual, per_quad) where per_quad[k] is the larger of the
    two relation residuals of quad k, normalized by the largest corner value.
    """
    g = X.graph
    quads = np.arange(g.n_quads) if quads is None else np.asarray(quads)
    loc = X.local_tuples(quads)
    th = weights.theta[quads]
    r1 = loc[:, 1] - loc[:, 0] * np.cos(th) - loc[:, 3] * np.sin(th)
    r2 = loc[:, 2] - loc[:, 0] * np.sin(th) + loc[:, 3] * np.cos(th)
    scale = np.maximum(np.abs(loc).max(axis=1), 1e-300)
    per_quad = np.maximum(np.abs(r1), np.abs(r2)) / scale
    return float(per_quad.max()) if len(per_quad) else 0.0, per_quad


def local_tuples_from_positions(graph, theta, pos, pos_z, quads, rtol=1e-8):
    """Per-quad consecutive-lift spinor values from quad geometry.

    Uses ``X00 = sqrt(S(v0b) - S(v0w))`` with the branch of ``X11`` fixed by
    positivity of the inradius, then the propagation equation for the other
    diagonal; validates that the resulting squares match the edge vectors.
    """
    g = graph
    out = np.empty((len(quads), 4), dtype=np.complex128)
    th = np.asarray(theta)[quads]
    q = g.quads[quads]
    e00 = pos[q[:, 0]] - pos[q[:, 1]]
    e11 = pos[q[:, 2]] - pos[q[:, 3]]
    e01 = pos[q[:, 0]] - pos[q[:, 3]]
    e10 = pos[q[:, 2]] - pos[q[:, 1]]
    x00 = np.sqrt(e00)
    x11 = np.sqrt(e11)
    flip = np.imag(x11 * np.conj(x00)) * np.cos(th) * np.sin(th) < 0
    x11 = np.where(flip, -x11, x11)
    x01 = x00 * np.cos(th) + x11 * np.sin(th)
    x10 = x00 * np.sin(th) - x11 * np.cos(th)
    out[:, 0], out[:, 1], out[:, 2], out[:, 3] = x00, x01, x10, x11
    scale = np.abs(e00) + np.abs(e11)
    bad = (np.abs(x01**2 - e01) + np.abs(x10**2 - e10)) / scale
    if bad.size and bad.max() > rtol:
        k = int(np.argmax(bad))
        raise ValueError(
            f"positions and weights are not s-embedding data at quad "
            f"{int(quads[k])} (residual {bad[k]:.2e})"
        )
    return out


def assemble_from_local_tuples(graph, cover, local, quads=None, rtol=1e-9):
    """Global gauge values from per-quad consecutive-lift tuples.

    Each quad tuple is defined up to a global sign; a BFS over shared corners
    chooses signs so that all tuples agree, then values are expressed in the
    cover gauge.  Raises if the tuples are not globally consistent.
    """
    g = graph
    quads = np.arange(g.n_quads) if quads is None else np.asarray(quads)
    qset = {int(z): k for k, z in enumerate(quads)}
    values = np.full(g.n_corners, np.nan + 0j, dtype=np.complex128)
    tau = cover.tau
    sz = np.zeros(len(quads), dtype=np.int8)
    corner_owner = {}
    order = []
    seen = np.zeros(len(quads), dtype=bool)
    for start in range(len(quads)):
        if seen[start]:
            continue
        sz[start] = 1
        seen[start] = True
        stack = [start]
        while stack:
            k = stack.pop()
            order.append(k)
            z = int(quads[k])
            for slot, c in enumerate(g.quad_corners[z]):
                val = sz[k] * tau[z, slot] * local[k, slot]
                c = int(c)
                if np.isnan(values[c].real):
                    values[c] = val
                else:
                    if abs(values[c] - val) > rtol * (abs(val) + 1e-300):
                        if abs(values[c] + val) > rtol * (abs(val) + 1e-300):
                            raise ValueError(
                                f"inconsistent tuples at corner {c}"
                            )
                # push neighbors through shared corners
                for z2 in g.corner_quads[c]:
                    z2 = int(z2)
                    if z2 >= 0 and z2 in qset and not seen[qset[z2]]:
                        k2 = qset[z2]
                        # decide sign from this shared corner
                        slot2 = list(g.quad_corners[z2]).index(c)
                        v2 = tau[z2, slot2] * local[k2, slot2]
                        if abs(v2) < 1e-14 * (abs(values[c]) + 1e-300):
                            continue  # ill-conditioned, wait for another path
                        s = 1 if abs(values[c] - v2) < abs(values[c] + v2) else -1
                        sz[k2] = s
                        seen[k2] = True
                        stack.append(k2)
    if not seen.all():
        raise ValueError("quad set is not corner-connected (or zero tuples)")
    # final verification
    for k in order:
        z = int(quads[k])
        for slot, c in enumerate(g.quad_corners[z]):
            val = sz[k] * tau[z, slot] * local[k, slot]
            if abs(values[int(c)] - val) > rtol * (abs(val) + 1e-300):
                raise ValueError(f"tuple signs do not close at corner {int(c)}")
    return values, sz


def propagation_nullspace(graph, cover, theta, quads=None, rcond=1e-10):
    """Orthonormal basis of real solutions on a patch (dense SVD)."""
    P = propagation_matrix(graph, cover, theta, quads).toarray()
    _u, s, vt = np.linalg.svd(P)
    rank = int((s > rcond * s[0]).sum())
    return vt[rank:].T

"""Double covers of the medial graph and spinor sign bookkeeping.

A double cover is a sign cocycle on medial edges: transporting a value along
an edge multiplies it by the edge sign, and the product of signs around a
medial face is -1 exactly at the prescribed branch faces.  Medial faces are
the Lambda-vertices and the quads; each medial edge belongs to exactly one
quad and one Lambda-vertex, so edges are indexed ``4*z + side`` with sides::

    0: c00 -- c10   (at v0w)      1: c10 -- c11   (at v1b)
    2: c11 -- c01   (at v1w)      3: c01 -- c00   (at v0b)

Spinors are stored as plain value arrays over corners in a fixed gauge; the
per-quad local sheets ``tau`` translate between the gauge and the
consecutive-lift convention used by the propagation equation.
"""

import numpy as np

from .lambda_graph import LambdaGraph


class ParityViolation(ValueError):
    """No consistent sign lift exists for the requested branch set."""


_SIDE_SLOTS = ((0, 2), (2, 3), (3, 1), (1, 0))  # corner-slot pairs per side
_SIDE_VERTEX = (1, 2, 3, 0)  # quad column of the owning Lambda-vertex


class CornerSignLift:
    """Sign structure of a double cover of the medial graph.

    Attributes
    ----------
    graph : LambdaGraph
    branch : bool over medial faces (Lambda-vertex ids, then nb+nw+quad).
    edge_sign : (4Q,) int8, the cocycle.
    tau : (Q, 4) int8
        Local sheet signs for corner slots (c00, c01, c10, c11) such that
        c11 -- c01 -- c00 -- c10 are consecutive lifts.  In a global gauge
        ``y``, propagation around quad ``z`` with weight angle ``theta`` is::

            tau01*y01 = tau00*y00*cos(theta) + tau11*y11*sin(theta)
            tau10*y10 = tau00*y00*sin(theta) - tau11*y11*cos(theta)
    """

    def __init__(self, graph, branch, edge_sign):
        self.graph = graph
        self.branch = branch
        self.edge_sign = edge_sign
        self.tau = self._local_sheets()

    def edge_id(self, z, c1, c2):
        qc = self.graph.quad_corners[z]
        pair = {int(c1), int(c2)}
        for side, (s1, s2) in enumerate(_SIDE_SLOTS):
            if {int(qc[s1]), int(qc[s2])} == pair:
                return 4 * int(z) + side
        raise KeyError(f"corners {c1},{c2} are not a side of quad {z}")

    def sign(self, z, c1, c2):
        """Transport sign along the medial edge of quad z joining c1, c2."""
        return int(self.edge_sign[self.edge_id(z, c1, c2)])

    def transport(self, steps):
        """Product of signs along [(c1, c2, z), ...] steps."""
        s = 1
        for c1, c2, z in steps:
            s *= self.sign(z, c1, c2)
        return s

    def face_monodromy(self, face):
        """Sign picked up around a medial face."""
        g = self.graph
        n_lambda = g.nb + g.nw
        if face >= n_lambda:
            z = face - n_lambda
            return int(np.prod(self.edge_sign[4 * z : 4 * z + 4]))
        v = face
        rot = g.vertex_corners[v]
        qs = g.vertex_quads[v]
        s = 1
        for k in range(len(rot)):
            s *= self.sign(qs[k], rot[k], rot[(k + 1) % len(rot)])
        return s

    def _local_sheets(self):
        g = self.graph
        tau = np.ones((g.n_quads, 4), dtype=np.int8)
        es = self.edge_sign
        for z in range(g.n_quads):
            base = 4 * z
            # walk c11 -> c01 -> c00 -> c10 over sides 2, 3, then side of
            # (c00, c10) which is side 0
            t11 = 1
            t01 = t11 * int(es[base + 2])
            t00 = t01 * int(es[base + 3])
            t10 = t00 * int(es[base + 0])
            tau[z] = (t00, t01, t10, t11)
        return tau


def make_double_cover(graph, branch=None, varpi=None):
    """Build a sign lift with monodromy -1 exactly at the branch faces.

    Parameters
    ----------
    graph : LambdaGraph (sphere or disc topology)
    branch : bool array over medial faces, or None for the canonical cover
        that branches over every face.
    varpi : iterable of Lambda-vertex ids, optional
        Branch over every face except these (observable covers).

    Raises
    ------
    ParityViolation
        If the branch-set parity admits no consistent lift.
    """
    g = graph
    if g.genus != 0:
        raise ParityViolation("covers are constructed on sphere/disc graphs only")
    n_lambda = g.nb + g.nw
    n_faces = n_lambda + g.n_quads
    if branch is None:
        branch = np.ones(n_faces, dtype=bool)
    else:
        branch = np.asarray(branch, dtype=bool).copy()
    if varpi is not None:
        branch[:] = True
        for v in varpi:
            branch[int(v)] = False
    if int(branch.sum()) % 2 != 0:
        raise ParityViolation(
            f"{int(branch.sum())} branch faces (must be even on the sphere)"
        )

    # face incidence of each medial edge: its quad and its Lambda-vertex
    nE = 4 * g.n_quads
    other_face = np.empty(nE, dtype=np.int64)
    for z in range(g.n_quads):
        for side in range(4):
            other_face[4 * z + side] = int(g.quads[z, _SIDE_VERTEX[side]])

    # spanning tree of the face-adjacency graph, then fix one edge per face
    adj = [[] for _ in range(n_faces)]
    for e in range(nE):
        z_face = n_lambda + e // 4
        v_face = int(other_face[e])
        adj[z_face].append((v_face, e))
        adj[v_face].append((z_face, e))

    parent_edge = np.full(n_faces, -1, dtype=np.int64)
    order = []
    seen = np.zeros(n_faces, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        f = stack.pop()
        order.append(f)
        for f2, e in adj[f]:
            if not seen[f2]:
                seen[f2] = True
                parent_edge[f2] = e
                stack.append(f2)
    if not seen.all():
        raise ParityViolation("medial face graph is disconnected")

    bits = np.zeros(nE, dtype=np.int8)
    face_edges = [[] for _ in range(n_faces)]
    for e in range(nE):
        face_edges[n_lambda + e // 4].append(e)
        face_edges[int(other_face[e])].append(e)
    want = branch.astype(np.int8)
    for f in reversed(order[1:]):
        cur = 0
        for e in face_edges[f]:
            cur ^= bits[e]
        if cur != want[f]:
            bits[parent_edge[f]] ^= 1
    cur = 0
    for e in face_edges[order[0]]:
        cur ^= bits[e]
    if cur != want[order[0]]:
        raise ParityViolation("branch parity inconsistent at root face")

    edge_sign = np.where(bits == 0, 1, -1).astype(np.int8)
    return CornerSignLift(g, branch, edge_sign)

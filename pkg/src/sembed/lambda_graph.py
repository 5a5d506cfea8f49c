"""Combinatorial hierarchy of a planar weighted graph carrying an Ising model.

The primal graph ``G`` (vertices drawn as black below) and its dual ``G*``
(white) are assembled into the quad-graph ``Lambda`` whose vertices are
``G ∪ G*``, whose edges are the vertex/face incidences ("corners"), and whose
faces are quadrilaterals in bijection with the primal edges.  The medial graph
``Upsilon`` has the corners as vertices; its faces are the Lambda-vertices and
the quads, which is the index space used for double covers.

All structures are immutable after construction and use dense integer ids so
that operator assembly can do O(1) incidence lookups.
"""

import json

import numpy as np


class LoopEdge(ValueError):
    """A primal edge joins a vertex to itself."""


class DegreeOneVertex(ValueError):
    """A primal vertex has degree one."""


class NonPlanarInput(ValueError):
    """Face data is not a valid planar (or toric) map."""


def _faces_from_vertex_cycles(edges, face_cycles):
    """Convert vertex cycles to dart lists (simple graphs only).

    Each face is a cyclic list of vertex ids; consecutive vertices must be
    joined by a unique edge.  For multigraphs pass dart lists directly.
    """
    edge_index = {}
    for k, (u, w) in enumerate(edges):
        key = (min(u, w), max(u, w))
        if key in edge_index:
            raise NonPlanarInput(
                "vertex cycles are ambiguous for multigraphs; "
                "pass faces as (edge, head) dart lists"
            )
        edge_index[key] = k
    darts = []
    for cyc in face_cycles:
        face = []
        n = len(cyc)
        for i in range(n):
            u, w = cyc[i], cyc[(i + 1) % n]
            key = (min(u, w), max(u, w))
            if key not in edge_index:
                raise NonPlanarInput(f"face cycle uses missing edge ({u},{w})")
            face.append((edge_index[key], w))
        darts.append(face)
    return darts


class LambdaGraph:
    """Quad-graph Lambda(G) with corners, quads and rotation systems.

    Parameters
    ----------
    n_vertices : int
        Number of primal (black) vertices.
    edges : (E,2) array_like
        Primal edges as pairs of vertex ids.  Multiple edges are allowed,
        loops are not.
    faces : sequence
        One entry per face of the map.  Each entry is a list of darts
        ``(edge_id, head_vertex)`` tracing the face boundary so that the face
        lies to the left of every dart; for simple graphs a plain vertex
        cycle is also accepted.  Every edge must be traversed exactly once in
        each direction over all faces.
    outer_face : int, optional
        Index of the outer face (disc case).
    genus : int
        0 for sphere/disc topology, 1 for a torus.

    Notes
    -----
    Lambda-vertex ids: blacks are ``0..nb-1``, whites (faces) are
    ``nb..nb+nw-1``.  The quad of primal edge ``(u,w)`` is stored as
    ``(v0b, v0w, v1b, v1w) = (u, right_face(u->w), w, left_face(u->w))``,
    which is counterclockwise when faces are traced counterclockwise.
    Corner ids enumerate face-boundary positions, so a vertex incident to the
    same face twice yields two distinct corners.
    """

    def __init__(self, n_vertices, edges, faces, outer_face=None, genus=0):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges[:, 0] == edges[:, 1]).any():
            bad = int(np.nonzero(edges[:, 0] == edges[:, 1])[0][0])
            raise LoopEdge(f"edge {bad} is a loop at vertex {int(edges[bad, 0])}")
        deg = np.bincount(edges.ravel(), minlength=n_vertices)
        if (deg == 1).any():
            raise DegreeOneVertex(f"vertex {int(np.nonzero(deg == 1)[0][0])} has degree 1")
        if (deg == 0).any() and n_vertices > 1:
            raise NonPlanarInput("isolated vertex")

        if faces and faces[0] and not isinstance(faces[0][0], (tuple, list, np.ndarray)):
            faces = _faces_from_vertex_cycles(edges, faces)

        self.nb = int(n_vertices)
        self.nw = len(faces)
        self.edges = edges
        nE = len(edges)
        euler = self.nb - nE + self.nw
        if genus == 0 and euler != 2:
            raise NonPlanarInput(f"Euler characteristic {euler} != 2")
        if genus == 1 and euler != 0:
            raise NonPlanarInput(f"Euler characteristic {euler} != 0 on the torus")
        self.genus = genus
        self.outer_white = None if outer_face is None else self.nb + int(outer_face)

        # Corners: one per dart (the corner sits at the dart's head, in the
        # dart's face).  corner id = face offset + position.
        offs = np.zeros(self.nw + 1, dtype=np.int64)
        for f, cyc in enumerate(faces):
            offs[f + 1] = offs[f] + len(cyc)
        nC = int(offs[-1])
        if nC != 2 * nE:
            raise NonPlanarInput(f"faces trace {nC} darts, expected {2 * nE}")
        self.n_corners = nC
        self.corner_offsets = offs

        cor_vb = np.empty(nC, dtype=np.int64)
        cor_vw = np.empty(nC, dtype=np.int64)
        # dart -> corner at its head; dart key is (edge, head)
        dart_corner = {}
        dart_face = {}
        for f, cyc in enumerate(faces):
            for i, (e, head) in enumerate(cyc):
                e = int(e)
                head = int(head)
                u, w = int(edges[e, 0]), int(edges[e, 1])
                if head not in (u, w):
                    raise NonPlanarInput(f"dart ({e},{head}) not an endpoint of edge {e}")
                c = int(offs[f]) + i
                cor_vb[c] = head
                cor_vw[c] = self.nb + f
                if (e, head) in dart_corner:
                    raise NonPlanarInput(f"dart ({e},{head}) traced twice")
                dart_corner[(e, head)] = c
                dart_face[(e, head)] = f
        for e in range(nE):
            u, w = int(edges[e, 0]), int(edges[e, 1])
            if (e, u) not in dart_corner or (e, w) not in dart_corner:
                raise NonPlanarInput(f"edge {e} not traced in both directions")
        self.cor_vb = cor_vb
        self.cor_vw = cor_vw

        # Quads.  Edge (u,w): left face = face of dart (e, w), right face =
        # face of dart (e, u).  Counterclockwise vertex order (u, f_r, w, f_l).
        quads = np.empty((nE, 4), dtype=np.int64)
        quad_corners = np.empty((nE, 4), dtype=np.int64)  # c00, c01, c10, c11
        for e in range(nE):
            u, w = int(edges[e, 0]), int(edges[e, 1])
            f_l = dart_face[(e, w)]
            f_r = dart_face[(e, u)]
            quads[e] = (u, self.nb + f_r, w, self.nb + f_l)
            # c00=(u,f_r) at head of dart (e,u); c10=(w,f_r) just before it.
            # c11=(w,f_l) at head of dart (e,w); c01=(u,f_l) just before it.
            c00 = dart_corner[(e, u)]
            c11 = dart_corner[(e, w)]
            c10 = self._prev_in_face(offs, f_r, c00)
            c01 = self._prev_in_face(offs, f_l, c11)
            quad_corners[e] = (c00, c01, c10, c11)
        self.quads = quads
        self.quad_corners = quad_corners
        self.n_quads = nE

        # corner -> its (at most 2) quads, and rotation systems.
        cq = np.full((nC, 2), -1, dtype=np.int64)
        for z in range(nE):
            for c in quad_corners[z]:
                if cq[c, 0] < 0:
                    cq[c, 0] = z
                else:
                    cq[c, 1] = z
        self.corner_quads = cq

        self._build_rotations(faces, offs, dart_corner, dart_face)

        self._faces_darts = [list(map(tuple, cyc)) for cyc in faces]

    @staticmethod
    def _prev_in_face(offs, f, c):
        lo, hi = int(offs[f]), int(offs[f + 1])
        return lo + (c - lo - 1) % (hi - lo)

    def _build_rotations(self, faces, offs, dart_corner, dart_face):
        """Corner rotation around every Lambda-vertex.

        White rotation is the face cycle itself.  Black rotation is obtained
        by repeatedly crossing to the opposite face of the outgoing dart,
        which steps through the corners at a vertex in cyclic order.
        """
        nb, nw, nC = self.nb, self.nw, self.n_corners
        white_rot = [
            list(range(int(offs[f]), int(offs[f + 1]))) for f in range(nw)
        ]

        # next corner around the black vertex v from corner c=(f,i):
        # outgoing dart of face f at position after i is (e, b); cross edge e
        # to the face of dart (e, v): that face's corner at v.  The quad of e
        # sits between c and nxt[c] in the rotation.
        nxt = np.empty(nC, dtype=np.int64)
        between = np.empty(nC, dtype=np.int64)
        for f, cyc in enumerate(faces):
            n = len(cyc)
            for i in range(n):
                c = int(offs[f]) + i
                v = int(self.cor_vb[c])
                e_next, _head = cyc[(i + 1) % n]
                nxt[c] = dart_corner[(int(e_next), v)]
                between[c] = int(e_next)
        black_rot = []
        black_btw = []
        seen = np.zeros(nC, dtype=bool)
        corners_at = [[] for _ in range(nb)]
        for c in range(nC):
            corners_at[int(self.cor_vb[c])].append(c)
        for v in range(nb):
            cs = corners_at[v]
            if not cs:
                black_rot.append([])
                black_btw.append([])
                continue
            c0 = min(cs)
            rot = [c0]
            seen[c0] = True
            c = int(nxt[c0])
            while c != c0:
                rot.append(c)
                seen[c] = True
                c = int(nxt[c])
            if len(rot) != len(cs):
                raise NonPlanarInput(f"rotation at vertex {v} does not close")
            # the crossing construction walks clockwise; store ccw
            d = len(rot)
            rot_ccw = [rot[0]] + rot[:0:-1]
            btw_ccw = [int(between[rot[(d - 1 - j) % d]]) for j in range(d)]
            black_rot.append(rot_ccw)
            black_btw.append(btw_ccw)
        self.vertex_corners = black_rot + white_rot

        # quad between consecutive corners of the rotation
        self.vertex_quads = list(black_btw)
        for f in range(nw):
            rot = white_rot[f]
            lo = int(offs[f])
            cyc = faces[f]
            # between corner i and corner i+1 lies the quad of dart i+1
            self.vertex_quads.append(
                [int(cyc[(i + 1) % len(cyc)][0]) for i in range(len(cyc))]
            )

    # -- derived info ----------------------------------------------------

    def degree(self, v):
        return len(self.vertex_corners[v])

    def is_black(self, v):
        return v < self.nb

    def quad_of_edge(self, e):
        return int(e)

    def corners_at(self, v):
        return self.vertex_corners[v]

    def upsilon_edges(self):
        """All medial edges as (c1, c2, kind, owner) with kind 'b'/'w'.

        Each medial edge belongs to exactly one quad face and one
        Lambda-vertex face of the medial graph; ``owner`` is that vertex.
        """
        out = []
        for z in range(self.n_quads):
            c00, c01, c10, c11 = self.quad_corners[z]
            v0b, v0w, v1b, v1w = self.quads[z]
            out.append((int(c00), int(c10), "w", int(v0w), z))
            out.append((int(c10), int(c11), "b", int(v1b), z))
            out.append((int(c11), int(c01), "w", int(v1w), z))
            out.append((int(c01), int(c00), "b", int(v0b), z))
        return out

    # -- serialization ---------------------------------------------------

    def to_json(self):
        doc = {
            "n_vertices": self.nb,
            "edges": self.edges.tolist(),
            "faces": [[[int(e), int(h)] for (e, h) in cyc] for cyc in self._faces_darts],
            "outer_face": None
            if self.outer_white is None
            else int(self.outer_white - self.nb),
            "genus": self.genus,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, s):
        doc = json.loads(s)
        return cls(
            doc["n_vertices"],
            doc["edges"],
            [[(int(e), int(h)) for e, h in cyc] for cyc in doc["faces"]],
            outer_face=doc.get("outer_face"),
            genus=doc.get("genus", 0),
        )


def build_lambda(n_vertices, edges, faces, outer_face=None, genus=0):
    """Build the quad-graph hierarchy from a primal planar map.

    See :class:`LambdaGraph` for the input format and conventions.  Raises
    :class:`LoopEdge`, :class:`DegreeOneVertex` or :class:`NonPlanarInput`
    naming the offending element.
    """
    return LambdaGraph(n_vertices, edges, faces, outer_face=outer_face, genus=genus)

"""Reference lattices: square-grid patches and double-periodic tori.

The square patch is the standard isoradial test bed: quads are axis-aligned
delta-squares, primal (black) vertices sit on one sublattice of delta*Z^2 and
the critical weight is theta = pi/4 on every quad.  Torus builders produce
the combinatorial data used by the canonical periodic embedding.
"""

import numpy as np

from .cover import make_double_cover
from .embedding import build_embedding, propriety_check
from .lambda_graph import build_lambda
from .planar import trace_faces
from .spinor import (
    DiracSpinor,
    assemble_from_local_tuples,
    local_tuples_from_positions,
    propagation_nullspace,
)
from .weights import IsingWeights


class SquarePatch:
    """An M x N block of delta-square quads with its quad-graph.

    Lattice points (i,j), 0<=i<=M, 0<=j<=N; black iff i+j odd (so the four
    patch corners are white).  Boundary whites are absorbed into the outer
    face; all other Lambda-vertices carry positions delta*(i+1j*j).
    """

    def __init__(self, M, N, delta=1.0, origin=0.0):
        if M % 2 or N % 2:
            raise ValueError("M and N must be even so patch corners are white")
        self.M, self.N, self.delta = M, N, float(delta)

        black_id = {}
        pos_b = []
        for j in range(N + 1):
            for i in range(M + 1):
                if (i + j) % 2 == 1:
                    black_id[(i, j)] = len(pos_b)
                    pos_b.append(origin + delta * (i + 1j * j))
        self.black_id = black_id

        # one primal edge per cell = the diagonal joining the two black corners
        edges = []
        self.cell_of_edge = []
        for n in range(N):
            for m in range(M):
                if (m + n) % 2 == 1:
                    u, w = (m, n), (m + 1, n + 1)
                else:
                    u, w = (m + 1, n), (m, n + 1)
                edges.append((black_id[u], black_id[w]))
                self.cell_of_edge.append((m, n))

        faces, outer = trace_faces(len(pos_b), edges, np.array(pos_b))
        self.graph = build_lambda(len(pos_b), edges, faces, outer_face=outer)
        g = self.graph

        # positions on Lambda: blacks as laid out; interior whites from the
        # face trace (faces are the interior white lattice points)
        pos = np.full(g.nb + g.nw, np.nan + 0j, dtype=np.complex128)
        pos[: g.nb] = pos_b
        white_pt = {}
        for f, cyc in enumerate(g._faces_darts):
            if g.nb + f == g.outer_white:
                continue
            pts = [pos_b[h] for (_, h) in cyc]
            white_pt[f] = sum(pts) / len(pts)
            pos[g.nb + f] = white_pt[f]
        self.pos = pos
        self.theta = np.full(g.n_quads, np.pi / 4)

    def interior_quads(self):
        g = self.graph
        return np.nonzero((g.quads != g.outer_white).all(axis=1))[0]

    def isoradial(self):
        """The isoradial embedding: critical weights, quads = delta-squares.

        Returns (embedding, weights, spinor, cover).
        """
        g = self.graph
        iq = self.interior_quads()
        weights = IsingWeights(self.theta)
        cover = make_double_cover(g)
        loc = local_tuples_from_positions(g, self.theta, self.pos, None, iq)
        vals, _sz = assemble_from_local_tuples(g, cover, loc, iq)
        X = DiracSpinor(g, cover, vals)
        some = int(g.quads[iq[0], 0])
        emb = build_embedding(
            X, weights, base_vertex=some, base_value=self.pos[some], quads=iq
        )
        return emb, weights, X, cover


def perturbed_embedding(M, N, delta=1.0, seed=0, eps=0.12, theta_spread=0.0,
                        require_proper=True):
    """A proper non-isoradial s-embedding on the M x N square-patch graph.

    Perturbs the isoradial Dirac spinor inside the solution space of the
    propagation equation (so the result is an honest s-embedding), optionally
    after jittering the weight angles.  The perturbation is shrunk until the
    embedding passes the propriety check.
    """
    rng = np.random.default_rng(seed)
    patch = SquarePatch(M, N, delta)
    g = patch.graph
    iq = patch.interior_quads()
    theta = patch.theta.copy()
    if theta_spread:
        theta += rng.uniform(-theta_spread, theta_spread, size=len(theta))
    weights = IsingWeights(theta)
    cover = make_double_cover(g)

    nullb = propagation_nullspace(g, cover, theta, iq)
    loc = local_tuples_from_positions(g, patch.theta, patch.pos, None, iq)
    vals_iso, _ = assemble_from_local_tuples(g, cover, loc, iq)
    x0 = np.where(np.isnan(vals_iso), 0.0, vals_iso)
    # project the isoradial spinor onto the solution space for the new theta
    base = nullb @ (nullb.T @ np.real(x0)) + 1j * (nullb @ (nullb.T @ np.imag(x0)))
    pert = nullb @ rng.standard_normal(nullb.shape[1]) + 1j * (
        nullb @ rng.standard_normal(nullb.shape[1])
    )
    scale = np.abs(base).max()
    pert *= scale / max(np.abs(pert).max(), 1e-300)

    e = eps
    some = int(g.quads[iq[0], 0])
    for _ in range(12):
        X = DiracSpinor(g, cover, base + e * pert)
        try:
            emb = build_embedding(X, weights, base_vertex=some, quads=iq)
        except Exception:
            e *= 0.5
            continue
        ok, _msgs = propriety_check(emb)
        if ok or not require_proper:
            return emb, weights, X, cover
        e *= 0.5
    raise RuntimeError("could not find a proper perturbed embedding")


def square_torus(M, N):
    """Quad-graph of the M x N square-lattice torus (M, N even).

    Returns (graph, cells) where cells[k] = (m, n) is the unit cell of quad k.
    Blacks are lattice points with i+j odd, whites with i+j even, both on the
    M x N torus.
    """
    if M % 2 or N % 2:
        raise ValueError("torus dimensions must be even for a consistent coloring")

    def wrap(i, j):
        return (i % M, j % N)

    black_id, white_id = {}, {}
    for j in range(N):
        for i in range(M):
            if (i + j) % 2 == 1:
                black_id[(i, j)] = len(black_id)
            else:
                white_id[(i, j)] = len(white_id)

    edges, cells = [], []
    edge_of_cell = {}
    for n in range(N):
        for m in range(M):
            if (m + n) % 2 == 1:
                u, w = wrap(m, n), wrap(m + 1, n + 1)
            else:
                u, w = wrap(m + 1, n), wrap(m, n + 1)
            edge_of_cell[(m, n)] = len(edges)
            edges.append((black_id[u], black_id[w]))
            cells.append((m, n))

    # face around white (i,j): cells (i,j),(i-1,j),(i-1,j-1),(i,j-1) ccw,
    # heads N,W,S,E
    faces = []
    face_white = []
    for (i, j), _fid in sorted(white_id.items(), key=lambda kv: kv[1]):
        E = black_id[wrap(i + 1, j)]
        Nn = black_id[wrap(i, j + 1)]
        W = black_id[wrap(i - 1, j)]
        S = black_id[wrap(i, j - 1)]
        cyc = [
            (edge_of_cell[(i % M, j % N)], Nn),
            (edge_of_cell[((i - 1) % M, j % N)], W),
            (edge_of_cell[((i - 1) % M, (j - 1) % N)], S),
            (edge_of_cell[(i % M, (j - 1) % N)], E),
        ]
        faces.append(cyc)
        face_white.append((i, j))
    g = build_lambda(len(black_id), edges, faces, genus=1)
    return g, cells


def triangular_torus(M, N):
    """Quad-graph of the triangular-lattice torus with an M x N array of
    fundamental cells (one primal vertex, three edges, two faces each).

    Primal vertices sit at m*u1 + n*u2 with u1 = 1, u2 = exp(i*pi/3); the
    three edge classes point along u1, u2 and u2 - u1.  Returns
    (graph, cells, classes, pos_hint) with quad k in cell cells[k] and edge
    class classes[k] in {0,1,2}; pos_hint gives reference primal positions.
    """

    def vid(m, n):
        return (n % N) * M + (m % M)

    edges, cells, classes = [], [], []
    eid = {}
    for n in range(N):
        for m in range(M):
            for cls, (dm, dn) in enumerate([(1, 0), (0, 1), (-1, 1)]):
                eid[(m, n, cls)] = len(edges)
                edges.append((vid(m, n), vid(m + dm, n + dn)))
                cells.append((m, n))
                classes.append(cls)

    # two triangle faces per cell, both listed ccw: the up-triangle
    # (v, v+u1, v+u2) and the down-triangle (v+u1, v+u1+u2, v+u2)
    faces = []
    for n in range(N):
        for m in range(M):
            faces.append(
                [
                    (eid[(m, n, 0)], vid(m + 1, n)),
                    (eid[((m + 1) % M, n, 2)], vid(m, n + 1)),
                    (eid[(m, n, 1)], vid(m, n)),
                ]
            )
            faces.append(
                [
                    (eid[((m + 1) % M, n, 1)], vid(m + 1, n + 1)),
                    (eid[(m, (n + 1) % N, 0)], vid(m, n + 1)),
                    (eid[((m + 1) % M, n, 2)], vid(m + 1, n)),
                ]
            )
    g = build_lambda(M * N, edges, faces, genus=1)
    u1, u2 = 1.0 + 0j, np.exp(1j * np.pi / 3)
    pos_hint = np.array([(k % M) * u1 + (k // M) * u2 for k in range(M * N)])
    return g, cells, classes, pos_hint

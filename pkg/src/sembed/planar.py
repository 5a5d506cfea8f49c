"""Face tracing for straight-line planar graphs.

Given vertex positions and an edge list, recovers the rotation system and all
face cycles (as dart lists) so that interior faces are counterclockwise.  Used
by the lattice generators; combinatorial inputs can instead pass explicit
face cycles to :func:`sembed.lambda_graph.build_lambda`.
"""

import numpy as np

from .lambda_graph import NonPlanarInput


def trace_faces(n_vertices, edges, pos):
    """Trace all faces of a straight-line embedded planar graph.

    Parameters
    ----------
    n_vertices : int
    edges : (E,2) int array
    pos : (n,) complex array, vertex positions.

    Returns
    -------
    faces : list of dart lists ``[(edge, head), ...]``, each face to the left
        of its darts; interior faces counterclockwise.
    outer : index of the outer face (negative signed area).
    """
    edges = np.asarray(edges, dtype=np.int64)
    pos = np.asarray(pos, dtype=np.complex128)
    E = len(edges)
    # darts: 2e = (u->w), 2e+1 = (w->u)
    tail = np.empty(2 * E, dtype=np.int64)
    head = np.empty(2 * E, dtype=np.int64)
    tail[0::2], head[0::2] = edges[:, 0], edges[:, 1]
    tail[1::2], head[1::2] = edges[:, 1], edges[:, 0]
    ang = np.angle(pos[head] - pos[tail])

    # clockwise-next out-dart at each vertex
    cw_next = {}
    order = [[] for _ in range(n_vertices)]
    for d in range(2 * E):
        order[tail[d]].append(d)
    for v in range(n_vertices):
        ds = sorted(order[v], key=lambda d: ang[d])
        k = len(ds)
        for i, d in enumerate(ds):
            cw_next[d] = ds[(i - 1) % k]

    # face to the left of each dart: after d, continue with the clockwise
    # successor of the reversed dart at the head
    def rev(d):
        return d ^ 1

    visited = np.zeros(2 * E, dtype=bool)
    faces = []
    for d0 in range(2 * E):
        if visited[d0]:
            continue
        cyc = []
        d = d0
        while not visited[d]:
            visited[d] = True
            cyc.append((int(d // 2), int(head[d])))
            d = cw_next[rev(d)]
        if d != d0:
            raise NonPlanarInput("face tracing did not close")
        faces.append(cyc)

    # outer face: negative signed area of the traced polygon (uses heads)
    outer, best = None, np.inf
    for f, cyc in enumerate(faces):
        pts = pos[[h for (_, h) in cyc]]
        area = 0.5 * np.sum(np.imag(np.conj(pts) * np.roll(pts, -1)))
        if area < best:
            best, outer = area, f
    if best >= 0:
        raise NonPlanarInput("no outer face found (graph not properly embedded)")
    return faces, outer

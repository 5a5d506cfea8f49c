"""Brute-force ground truth for tiny Ising instances.

Everything here enumerates even (or defect-parity) subgraphs of the primal
graph directly, with no transfer-matrix or Pfaffian shortcuts: partition
sums, spin/disorder correlators with explicit defect paths, Kadanoff-Ceva
observables on a fixed sheet of the corner double cover, and exact FK
random-cluster distributions.  Capped at 22 edges.
"""

import numpy as np

MAX_EDGES = 22


class TooLarge(ValueError):
    pass


class BadDefectParity(ValueError):
    pass


def _masks(nE):
    if nE > MAX_EDGES:
        raise TooLarge(f"{nE} edges exceeds the {MAX_EDGES}-edge enumeration cap")
    return np.arange(1 << nE, dtype=np.uint32)


def _chunks(nE, chunk=1 << 20):
    total = 1 << nE
    for lo in range(0, total, chunk):
        yield np.arange(lo, min(lo + chunk, total), dtype=np.uint32)


def _vertex_masks(graph):
    vm = np.zeros(graph.nb, dtype=np.uint32)
    for e, (u, w) in enumerate(graph.edges):
        vm[u] ^= np.uint32(1 << e)
        vm[w] ^= np.uint32(1 << e)
    return vm


class EnumerationInstance:
    """A weighted primal graph prepared for exhaustive enumeration."""

    def __init__(self, graph, x):
        if graph.n_quads > MAX_EDGES:
            raise TooLarge(
                f"{graph.n_quads} edges exceeds the {MAX_EDGES}-edge cap"
            )
        self.graph = graph
        self.x = np.asarray(x, dtype=float)
        self.vertex_masks = _vertex_masks(graph)
        self.logx = np.log(self.x)

    def _weights(self, masks):
        bits = (masks[:, None] >> np.arange(self.graph.n_quads)[None, :]) & 1
        return np.exp(bits @ self.logx)

    def _parity_ok(self, masks, odd_vertices=()):
        odd = np.zeros(self.graph.nb, dtype=bool)
        for v in odd_vertices:
            odd[v] ^= True
        ok = np.ones(len(masks), dtype=bool)
        for v in range(self.graph.nb):
            par = np.bitwise_count(masks & self.vertex_masks[v]) & 1
            ok &= par == (1 if odd[v] else 0)
        return ok

    def partition_sum(self, odd_vertices=(), sign_mask=0):
        """x(E(G)) or its defect/signed variants.

        ``odd_vertices``: vertices required to have odd degree; duplicated
        entries cancel.  ``sign_mask``: bitmask of edges whose inclusion
        flips the sign (a gamma path for spin insertions).
        """
        counts = np.bincount(list(odd_vertices), minlength=self.graph.nb) % 2
        odd = [v for v in range(self.graph.nb) if counts[v]]
        total = 0.0
        for masks in _chunks(self.graph.n_quads):
            ok = self._parity_ok(masks, odd)
            if not ok.any():
                continue
            w = self._weights(masks[ok])
            if sign_mask:
                s = 1.0 - 2.0 * (
                    np.bitwise_count(masks[ok] & np.uint32(sign_mask)) & 1
                )
                total += float((w * s).sum())
            else:
                total += float(w.sum())
        return total


def partition_sum(graph, x):
    """Sum of x(C) over even subgraphs C of the primal graph."""
    return EnumerationInstance(graph, x).partition_sum()


def edge_set_mask(edges):
    m = 0
    for e in edges:
        m ^= 1 << int(e)
    return m


def correlator(graph, x, spins=(), disorders=(), gamma_white=(), gamma_black=()):
    """E[ prod mu_v* prod sigma_v ] with explicit defect paths.

    ``spins``: white Lambda-ids (faces, as ``nb + face``) or face indices;
    ``gamma_white``: primal-edge ids crossed by the dual defect path linking
    the spins pairwise; ``disorders``: black vertex ids; ``gamma_black``:
    primal-edge ids of the disorder path.  The sign convention carries the
    factor (-1)^(number of shared edges of the two paths).
    """
    inst = EnumerationInstance(graph, x)
    g = graph
    spins = [int(v) for v in spins]
    disorders = [int(v) for v in disorders]
    if len(spins) % 2 or len(disorders) % 2:
        raise BadDefectParity("need an even number of spins and of disorders")
    # validate gamma_white endpoints: odd dual-degree exactly at the spins
    wdeg = np.zeros(g.nw, dtype=int)
    for e in gamma_white:
        wdeg[int(g.quads[e, 1]) - g.nb] += 1
        wdeg[int(g.quads[e, 3]) - g.nb] += 1
    for f in range(g.nw):
        want = (g.nb + f) in spins or f in spins
        if wdeg[f] % 2 != (1 if want else 0):
            raise BadDefectParity(f"gamma_white has wrong parity at face {f}")
    bdeg = np.zeros(g.nb, dtype=int)
    for e in gamma_black:
        bdeg[int(g.edges[e, 0])] += 1
        bdeg[int(g.edges[e, 1])] += 1
    for v in range(g.nb):
        if bdeg[v] % 2 != (1 if v in disorders else 0):
            raise BadDefectParity(f"gamma_black has wrong parity at vertex {v}")

    sign_mask = edge_set_mask(gamma_white)
    num = inst.partition_sum(odd_vertices=disorders, sign_mask=sign_mask)
    den = inst.partition_sum()
    shared = len(set(int(e) for e in gamma_white) & set(int(e) for e in gamma_black))
    return (-1) ** shared * num / den


def _corner_neighbors(graph, c):
    """(c2, quad, shared-vertex) steps from corner c on the medial graph."""
    g = graph
    out = []
    for z in g.corner_quads[c]:
        z = int(z)
        if z < 0:
            continue
        qc = [int(x) for x in g.quad_corners[z]]
        slot = qc.index(int(c))
        # sides: (0,2)@v0w, (2,3)@v1b, (3,1)@v1w, (1,0)@v0b
        for s1, s2, vslot in ((0, 2, 1), (2, 3, 2), (3, 1, 3), (1, 0, 0)):
            if slot == s1:
                out.append((qc[s2], z, int(g.quads[z, vslot])))
            elif slot == s2:
                out.append((qc[s1], z, int(g.quads[z, vslot])))
    return out


def kc_observable(graph, x, vb_marked, vw_marked, corners=None, cover=None):
    """Kadanoff-Ceva observable X(c) = E[chi_c mu_{vb} sigma_{vw}] per corner.

    Values form a spinor on the double cover branching over all medial faces
    except the two marked vertices; the sheet is fixed by dragging the defect
    paths along a breadth-first tree from the corner joining the marks (where
    the observable equals +1).  If ``cover`` is given, values are re-gauged
    into it by transporting along the same tree, so that they satisfy the
    propagation operator assembled from that cover.
    """
    g = graph
    inst = EnumerationInstance(g, x)
    vb_marked = int(vb_marked)
    vw_marked = int(vw_marked)
    root = None
    for c in range(g.n_corners):
        if int(g.cor_vb[c]) == vb_marked and int(g.cor_vw[c]) == vw_marked:
            root = c
            break
    if root is None:
        raise ValueError("no corner joins the marked vertices")

    # drag defect paths along a BFS tree of the medial graph
    gw = {root: 0}  # gamma_white edge masks
    gb = {root: 0}
    sgn = {root: 1}  # gauge conversion sign relative to `cover`
    from collections import deque

    dq = deque([root])
    while dq:
        c = dq.popleft()
        for c2, z, v in _corner_neighbors(g, c):
            if c2 in gw:
                continue
            if v < g.nb:  # rotating around a black vertex: white mark moves
                gw[c2] = gw[c] ^ (1 << z)
                gb[c2] = gb[c]
            else:
                gw[c2] = gw[c]
                gb[c2] = gb[c] ^ (1 << z)
            sgn[c2] = sgn[c] * (cover.sign(z, c, c2) if cover is not None else 1)
            dq.append(c2)

    den = inst.partition_sum()
    todo = range(g.n_corners) if corners is None else corners
    vals = np.full(g.n_corners, np.nan)
    for c in todo:
        c = int(c)
        vb = int(g.cor_vb[c])
        num = inst.partition_sum(
            odd_vertices=(vb, vb_marked), sign_mask=gw[c]
        )
        shared = np.bitwise_count(np.uint64(gw[c] & gb[c]))
        vals[c] = sgn[c] * (-1) ** int(shared) * num / den
    return vals


def fk_distribution(n_vertices, edges, p, merges=()):
    """Exact FK (q=2) probabilities over all edge configurations.

    ``merges``: iterable of vertex groups identified before counting
    clusters (wired arcs).  Returns an array of probabilities indexed by the
    edge bitmask.
    """
    edges = [(int(u), int(w)) for u, w in edges]
    nE = len(edges)
    if nE > MAX_EDGES:
        raise TooLarge(f"{nE} edges")
    p = np.asarray(p, dtype=float)
    parent = list(range(n_vertices))

    def find(a, par):
        while par[a] != a:
            par[a] = par[par[a]]
            a = par[a]
        return a

    base = list(range(n_vertices))
    for group in merges:
        group = list(group)
        for v in group[1:]:
            base[find(v, base)] = find(group[0], base)

    weights = np.empty(1 << nE)
    for m in range(1 << nE):
        par = base.copy()
        for e in range(nE):
            if m >> e & 1:
                u, w = edges[e]
                ru, rw = find(u, par), find(w, par)
                if ru != rw:
                    par[ru] = rw
        k = len({find(v, par) for v in range(n_vertices)})
        w = 2.0**k
        for e in range(nE):
            w *= p[e] if (m >> e & 1) else (1.0 - p[e])
        weights[m] = w
    return weights / weights.sum()


def two_point_exact(graph, x, f1, f2):
    """E[sigma_{f1} sigma_{f2}] for faces via an automatically routed path."""
    g = graph
    # route a dual path from f1 to f2 by BFS over faces through quads
    from collections import deque

    f1, f2 = int(f1), int(f2)
    if f1 >= g.nb:
        f1 -= g.nb
    if f2 >= g.nb:
        f2 -= g.nb
    prev = {f1: (None, None)}
    dq = deque([f1])
    while dq:
        f = dq.popleft()
        if f == f2:
            break
        for z in range(g.n_quads):
            w0, w1 = int(g.quads[z, 1]) - g.nb, int(g.quads[z, 3]) - g.nb
            if w0 == f and w1 not in prev:
                prev[w1] = (f, z)
                dq.append(w1)
            elif w1 == f and w0 not in prev:
                prev[w0] = (f, z)
                dq.append(w0)
    if f2 not in prev:
        raise ValueError("faces are not connected in the dual graph")
    path = []
    f = f2
    while prev[f][0] is not None:
        f, z = prev[f]
        path.append(z)
    return correlator(
        graph, x, spins=(g.nb + f1, g.nb + f2), gamma_white=path
    )

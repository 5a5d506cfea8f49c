import numpy as np
import pytest

from sembed.cover import CornerSignLift, ParityViolation, make_double_cover
from sembed.lambda_graph import (
    DegreeOneVertex,
    LambdaGraph,
    LoopEdge,
    NonPlanarInput,
    build_lambda,
)
from sembed.lattices import SquarePatch, square_torus


def single_quad_face():
    # 4-cycle on the sphere: 4 vertices, 4 edges, inner + outer face
    edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
    faces = [[0, 1, 2, 3], [3, 2, 1, 0]]
    return build_lambda(4, edges, faces, outer_face=1)


def test_single_quadrilateral_counts():
    g = single_quad_face()
    assert g.nb == 4 and g.nw == 2
    assert g.n_quads == 4  # one per edge
    assert g.n_corners == 8  # 2 per edge


def test_grid_patch_counts():
    for m, n in [(4, 4), (6, 4), (8, 6)]:
        p = SquarePatch(m, n)
        g = p.graph
        assert g.n_quads == m * n  # one quad per primal edge = per cell
        assert g.n_corners == 2 * g.n_quads


def test_loop_edge_rejected():
    edges = [(0, 1), (1, 1), (1, 0)]
    with pytest.raises(LoopEdge):
        build_lambda(2, edges, [[0, 1], [1, 0]])


def test_degree_one_rejected():
    # path graph: vertex 2 has degree one
    edges = [(0, 1), (1, 2), (0, 1)]
    with pytest.raises(DegreeOneVertex):
        build_lambda(3, edges, [[0, 1, 2], [2, 1, 0]])


def test_bad_face_data_rejected():
    edges = [(0, 1), (1, 2), (2, 0)]
    with pytest.raises(NonPlanarInput):
        build_lambda(3, edges, [[0, 1, 2]])  # edges traced once only


def test_quad_corner_incidences():
    p = SquarePatch(6, 6)
    g = p.graph
    for z in range(g.n_quads):
        v0b, v0w, v1b, v1w = g.quads[z]
        c00, c01, c10, c11 = g.quad_corners[z]
        assert (g.cor_vb[c00], g.cor_vw[c00]) == (v0b, v0w)
        assert (g.cor_vb[c01], g.cor_vw[c01]) == (v0b, v1w)
        assert (g.cor_vb[c10], g.cor_vw[c10]) == (v1b, v0w)
        assert (g.cor_vb[c11], g.cor_vw[c11]) == (v1b, v1w)
    # the four corners reference the quad's four Lambda-edges bijectively
    for z in range(g.n_quads):
        pairs = {
            (int(g.cor_vb[c]), int(g.cor_vw[c])) for c in g.quad_corners[z]
        }
        assert len(pairs) == 4


def test_corner_quad_membership():
    p = SquarePatch(6, 4)
    g = p.graph
    counts = np.zeros(g.n_corners, int)
    for z in range(g.n_quads):
        for c in g.quad_corners[z]:
            counts[c] += 1
    # sphere-complete: every corner belongs to exactly two quads
    assert (counts == 2).all()


def test_json_roundtrip_isomorphic():
    p = SquarePatch(4, 6)
    g = p.graph
    g2 = LambdaGraph.from_json(g.to_json())
    assert (g2.quads == g.quads).all()
    assert (g2.quad_corners == g.quad_corners).all()
    assert g2.outer_white == g.outer_white
    for v in range(g.nb + g.nw):
        assert g2.vertex_corners[v] == g.vertex_corners[v]


class TestDoubleCover:
    def test_canonical_cover_branches_everywhere(self):
        g = SquarePatch(4, 4).graph
        lift = make_double_cover(g)
        for f in range(g.nb + g.nw + g.n_quads):
            assert lift.face_monodromy(f) == -1

    def test_trivial_cover(self):
        g = SquarePatch(4, 4).graph
        lift = make_double_cover(g, branch=np.zeros(g.nb + g.nw + g.n_quads, bool))
        for f in range(g.nb + g.nw + g.n_quads):
            assert lift.face_monodromy(f) == +1

    def test_parity_violation(self):
        g = SquarePatch(4, 4).graph
        b = np.zeros(g.nb + g.nw + g.n_quads, bool)
        b[g.nb] = True  # a single white vertex
        with pytest.raises(ParityViolation):
            make_double_cover(g, branch=b)

    def test_varpi_cover(self):
        g = SquarePatch(6, 6).graph
        varpi = [1, g.nb + 2]
        lift = make_double_cover(g, varpi=varpi)
        for f in range(g.nb + g.nw + g.n_quads):
            assert lift.face_monodromy(f) == (1 if f in varpi else -1)

    def test_transport_sign_counts_enclosed_branches(self):
        # around a single quad face on small patches, transport = -1;
        # around a 2x2 block of quads (enclosing 4 quads + 1 vertex of each
        # color... ) the product of face monodromies inside
        p = SquarePatch(4, 4)
        g = p.graph
        lift = make_double_cover(g)
        # composite cycle around two adjacent quads z1, z2 sharing corner c:
        # monodromy = product of the two face monodromies = +1
        iq = p.interior_quads()
        z1 = int(iq[0])
        shared = None
        for z2 in iq[1:]:
            common = set(g.quad_corners[z1]) & set(g.quad_corners[int(z2)])
            if common:
                shared = (int(z2), int(common.pop()))
                break
        z2, c = shared
        m1 = lift.face_monodromy(g.nb + g.nw + z1)
        m2 = lift.face_monodromy(g.nb + g.nw + z2)
        assert m1 == m2 == -1
        # walk around z1 then z2 through the shared corner: signs multiply
        def cycle_sign(z):
            c00, c01, c10, c11 = g.quad_corners[z]
            path = [(c00, c10, z), (c10, c11, z), (c11, c01, z), (c01, c00, z)]
            return lift.transport(path)
        assert cycle_sign(z1) * cycle_sign(z2) == +1


def test_torus_counts():
    g, cells = square_torus(6, 4)
    assert g.genus == 1
    assert g.n_quads == 24
    assert g.nb == 12 and g.nw == 12
    assert g.n_corners == 48

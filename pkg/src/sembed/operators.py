"""Discrete differential operators on s-embeddings.

``d_bar_S`` acts from Lambda-functions to quad-functions and is normalized so
that it annihilates 1, S, Q and maps conj(S) to 1.  ``d_omega`` acts from
quad-functions to Lambda-functions using increments of the exact 1-form
``d exp(i*alpha)`` built from the edge directions.  Their composition gives
the s-Laplacian ``Delta_S = -4 d_omega d_bar_S``, symmetric with positive
coefficients along quad diagonals.
"""

import numpy as np
import scipy.sparse as sp

VARSIGMA = np.exp(1j * np.pi / 4)


class DegenerateQuad(ValueError):
    pass


class OperatorMatrix:
    """Sparse operator with explicit row/column index spaces.

    ``mat`` is scipy CSR; ``row_space``/``col_space`` are 'quad' or 'lambda';
    ``valid_rows`` marks rows assembled from complete local data (bulk).
    """

    def __init__(self, mat, row_space, col_space, valid_rows, mu=None, r=None):
        self.mat = mat
        self.row_space = row_space
        self.col_space = col_space
        self.valid_rows = valid_rows
        self.mu = mu
        self.r = r

    def __matmul__(self, other):
        return self.mat @ other

    def to_triplets(self):
        coo = self.mat.tocoo()
        return np.stack([coo.row, coo.col, coo.data.real, coo.data.imag], axis=1)


class QuadCoefficients:
    """Per-quad data of the s-Laplacian and the averaged operators.

    ``a`` maps frozenset Lambda-vertex pairs along quad diagonals to the
    positive diagonal coefficients, ``b`` maps Lambda-edge pairs to the real
    transversal coefficients.  ``A``, ``B``, ``C`` are the quad coefficients
    of the Q-averaged operators; ``C`` depends on the additive gauge of Q,
    recorded in ``q_gauge``.
    """

    def __init__(self, a, b, A=None, B=None, C=None, q_gauge=None):
        self.a = a
        self.b = b
        self.A = A
        self.B = B
        self.C = C
        self.q_gauge = q_gauge


def _lambda_count(graph):
    return graph.nb + graph.nw


def d_bar_S(emb):
    """The operator [d_bar_S H](z), rows over emb.quads.

    Entries ``(mu_z/4) * (+-1)/(S(v) - S(z))`` with + at black vertices; the
    normalizer mu_z is fixed by [d_bar_S conj(S)](z) = 1.
    """
    g = emb.graph
    quads = emb.quads
    nL = _lambda_count(g)
    rows, cols, vals = [], [], []
    mu = np.empty(len(quads), dtype=np.complex128)
    for k, z in enumerate(quads):
        vs = g.quads[z]
        Sz = emb.S_z[z]
        d = emb.S[vs] - Sz
        if np.abs(d).min() < 1e-14 * emb.delta:
            raise DegenerateQuad(f"quad {int(z)} has a vertex at its center")
        signs = np.array([1.0, -1.0, 1.0, -1.0])
        raw = 0.25 * signs / d
        m = raw @ np.conj(emb.S[vs])
        if abs(m) < 1e-14:
            raise DegenerateQuad(f"normalizer undefined at quad {int(z)}")
        mu[k] = 1.0 / m
        rows.extend([k] * 4)
        cols.extend(int(v) for v in vs)
        vals.extend(mu[k] * raw)
    mat = sp.csr_matrix(
        (np.array(vals), (np.array(rows), np.array(cols))),
        shape=(len(quads), nL),
    )
    valid = np.ones(len(quads), dtype=bool)
    return OperatorMatrix(mat, "quad", "lambda", valid, mu=mu, r=emb.r_z[quads])


def d_S(emb, dbar=None):
    """[d_S H](z) = conj([d_bar_S conj(H)](z)): entrywise conjugate."""
    dbar = d_bar_S(emb) if dbar is None else dbar
    mat = dbar.mat.conj()
    return OperatorMatrix(mat, "quad", "lambda", dbar.valid_rows, mu=dbar.mu, r=dbar.r)


def exp_i_alpha(emb, corner):
    """Unit vector of the Lambda-edge at a corner, from white to black."""
    g = emb.graph
    d = emb.S[g.cor_vb[corner]] - emb.S[g.cor_vw[corner]]
    return d / np.abs(d)


def d_omega(emb):
    """The operators (d_bar_omega, d_omega) from quad- to Lambda-functions.

    Row v sums F(z_k) against increments of exp(i*alpha) between the two
    corners of z_k at v, in counterclockwise order (the quad to the right of
    the oriented medial edge).  Rows are valid where the full fan of quads
    around v carries geometry (the increments then telescope).
    """
    g = emb.graph
    nL = _lambda_count(g)
    nQ = g.n_quads
    qset = set(int(z) for z in emb.quads)
    rows, cols, vals = [], [], []
    valid = np.zeros(nL, dtype=bool)
    for v in range(nL):
        rot = g.vertex_corners[v]
        qs = g.vertex_quads[v]
        if len(rot) == 0:
            continue
        have = [int(z) in qset for z in qs]
        valid[v] = all(have)
        for k, z in enumerate(qs):
            if not have[k]:
                continue
            c1 = rot[k]
            c2 = rot[(k + 1) % len(rot)]
            dw = exp_i_alpha(emb, c2) - exp_i_alpha(emb, c1)
            rows.append(v)
            cols.append(int(z))
            vals.append(dw / 2j)
    mat = sp.csr_matrix(
        (np.array(vals), (np.array(rows), np.array(cols))), shape=(nL, nQ)
    )
    dbar_omega = OperatorMatrix(mat, "lambda", "quad", valid)
    d_omega_op = OperatorMatrix(mat.conj(), "lambda", "quad", valid)
    return dbar_omega, d_omega_op


def laplacian_S(emb, return_ops=False):
    """The s-Laplacian with its edge decomposition.

    Returns (OperatorMatrix, QuadCoefficients).  Rows are valid at bulk
    Lambda-vertices (full fan of geometric quads).  The matrix is assembled
    in the explicitly symmetric a/b form; ``-4 d_omega d_bar_S`` reproduces
    it entrywise on valid rows.
    """
    g = emb.graph
    nL = _lambda_count(g)
    quads = emb.quads
    dbar = d_bar_S(emb)
    qidx = {int(z): k for k, z in enumerate(quads)}

    a = {}
    b = {}
    # diagonal coefficients: a_vv' = -mu_z r_z / ((S(v')-S(z))(S(v)-S(z)))
    for k, z in enumerate(quads):
        v0b, v0w, v1b, v1w = (int(x) for x in g.quads[z])
        Sz = emb.S_z[z]
        mz, rz = dbar.mu[k], emb.r_z[z]
        # the product -4 d_omega d_bar_S has entry -mu*r/(d*d') at both
        # diagonal pairs; the white pair enters the row formula with -a
        aw = mz * rz / ((emb.S[v0w] - Sz) * (emb.S[v1w] - Sz))
        ab_ = -mz * rz / ((emb.S[v0b] - Sz) * (emb.S[v1b] - Sz))
        a[frozenset((v0b, v1b))] = ab_
        a[frozenset((v0w, v1w))] = aw
        # transversal contributions per corner edge, summed over both quads
        for vb, vw in ((v0b, v0w), (v0b, v1w), (v1b, v0w), (v1b, v1w)):
            key = frozenset((vb, vw))
            contrib = mz * rz / ((emb.S[vb] - Sz) * (emb.S[vw] - Sz))
            b.setdefault(key, []).append(contrib)

    # a corner coefficient is complete only when both its quads contributed
    full_b = {key: sum(vals) for key, vals in b.items() if len(vals) == 2}

    rows, cols, vals = [], [], []

    def add(i, j, w):
        rows.append(i)
        cols.append(j)
        vals.append(w)

    valid = np.zeros(nL, dtype=bool)
    qset = set(int(z) for z in quads)
    for v in range(nL):
        qs = g.vertex_quads[v]
        valid[v] = len(qs) > 0 and all(int(z) in qset for z in qs)
    # corner edges interior to the quad set: both adjacent quads present
    interior_corner = {}
    for c in range(g.n_corners):
        zs = [int(z) for z in g.corner_quads[c] if z >= 0]
        interior_corner[c] = len(zs) == 2 and all(z in qset for z in zs)

    for key, w in a.items():
        v1, v2 = tuple(key)
        sgn = 1.0 if min(v1, v2) < g.nb else -1.0  # -a on the white sublattice
        for i, j in ((v1, v2), (v2, v1)):
            if valid[i]:
                add(i, j, sgn * w)
                add(i, i, -sgn * w)
    for key, w in full_b.items():
        v1, v2 = tuple(key)
        for i, j in ((v1, v2), (v2, v1)):
            if valid[i]:
                add(i, j, w)
                add(i, i, -w)

    mat = sp.csr_matrix(
        (np.array(vals), (np.array(rows), np.array(cols))), shape=(nL, nL)
    )
    mat.sum_duplicates()
    coeffs = QuadCoefficients(a, full_b)
    return OperatorMatrix(mat, "lambda", "lambda", valid, r=emb.r_z[quads]), coeffs


def abc_coefficients(emb, q_gauge_vertex=None):
    """Quad coefficients A_z, B_z, C_z of the Q-averaged operators.

    ``A_z = [d_omega^T (Q S)](z)`` equals the area of the quad;
    ``B_z = [d_omega^T (Q^2)](z)``; ``C_z = [d_omega^T (Q conj(S))](z)``
    depends on the additive gauge of Q, fixed by ``Q(q_gauge_vertex) = 0``.
    """
    g = emb.graph
    Q = emb.Q.copy()
    if q_gauge_vertex is not None:
        Q = Q - Q[int(q_gauge_vertex)]
    _, dom = d_omega(emb)
    m = dom.mat  # (nL, nQ); transpose acts on Lambda-functions
    S = np.where(np.isnan(emb.S), 0.0, emb.S)
    Qv = np.where(np.isnan(Q), 0.0, Q)
    A = m.T @ (Qv * S)
    B = m.T @ (Qv * Qv).astype(np.complex128)
    C = m.T @ (Qv * np.conj(S))
    return A[emb.quads], B[emb.quads], C[emb.quads]


def operator_identity_report(emb, rng_seed=0):
    """Residuals of the kernel and transpose identities (Lemma-level checks).

    Returns a dict of max-abs residuals over valid rows:
    d_bar_S applied to 1, S, Q, conj(S); the transpose identity
    ``d_omega^T - 4 U^{-1} R d_bar_S``; symmetry and row sums of Delta_S;
    the diagonal coefficients against r^{-1} sin^2/cos^2; and A against the
    shoelace area.
    """
    g = emb.graph
    nL = _lambda_count(g)
    dbar = d_bar_S(emb)
    S = np.where(np.isnan(emb.S), 0.0, emb.S)
    Q = np.where(np.isnan(emb.Q), 0.0, emb.Q).astype(np.complex128)
    ones = np.ones(nL, dtype=np.complex128)
    rep = {}
    rep["dbar_1"] = float(np.abs(dbar @ ones).max())
    rep["dbar_S"] = float(np.abs(dbar @ S).max())
    rep["dbar_Q"] = float(np.abs(dbar @ Q).max())
    rep["dbar_Sbar_minus_1"] = float(np.abs(dbar @ np.conj(S) - 1.0).max())

    dbar_omega, dom = d_omega(emb)
    # transpose identity on valid vertex rows: entries of d_omega at (v,z)
    # equal 4 mu_z^{-1} r_z * entry of d_bar_S at (z,v)
    lhs = dom.mat
    scale = sp.diags(4.0 / dbar.mu * emb.r_z[emb.quads])
    rhs_quadrows = scale @ dbar.mat  # (nq, nL)
    rhs = sp.csr_matrix((g.nb + g.nw, g.n_quads), dtype=np.complex128)
    # scatter to full quad index space
    qfull = sp.csr_matrix(
        (np.ones(len(emb.quads)), (emb.quads, np.arange(len(emb.quads)))),
        shape=(g.n_quads, len(emb.quads)),
    )
    rhs = (qfull @ rhs_quadrows).T  # (nL, nQ)
    diff = (lhs - rhs).tocoo()
    mask = dom.valid_rows[diff.row]
    rep["transpose_identity"] = float(
        np.abs(diff.data[mask]).max() if mask.any() else 0.0
    )

    lap, coeffs = laplacian_S(emb)
    sym = (lap.mat - lap.mat.T).tocoo()
    both = lap.valid_rows[sym.row] & lap.valid_rows[sym.col]
    rep["laplacian_symmetry"] = float(
        np.abs(sym.data[both]).max() if both.any() else 0.0
    )
    rs = np.asarray(lap.mat @ np.ones(nL)).ravel()
    rep["laplacian_rowsum"] = float(np.abs(rs[lap.valid_rows]).max())
    rep["laplacian_S_moment"] = float(np.abs((lap.mat @ S)[lap.valid_rows]).max())
    rep["laplacian_Sbar_moment"] = float(
        np.abs((lap.mat @ np.conj(S))[lap.valid_rows]).max()
    )

    # product identity Delta_S = -4 d_omega d_bar_S on valid rows
    prod = -4.0 * (dom.mat[:, emb.quads] @ dbar.mat)
    dprod = (prod - lap.mat).tocoo()
    maskp = lap.valid_rows[dprod.row] & lap.valid_rows[dprod.col]
    rep["laplacian_vs_product"] = float(
        np.abs(dprod.data[maskp]).max() if maskp.any() else 0.0
    )

    # a-coefficients vs r^{-1} sin^2 / cos^2
    worst = 0.0
    for k, z in enumerate(emb.quads):
        v0b, v0w, v1b, v1w = (int(x) for x in g.quads[z])
        th = emb.theta[z]
        rz = emb.r_z[z]
        worst = max(
            worst,
            abs(coeffs.a[frozenset((v0b, v1b))] - np.sin(th) ** 2 / rz),
            abs(coeffs.a[frozenset((v0w, v1w))] - np.cos(th) ** 2 / rz),
        )
        worst = max(
            worst,
            max(abs(coeffs.b[frozenset((vb, vw))].imag) for vb, vw in
                ((v0b, v0w), (v0b, v1w), (v1b, v0w), (v1b, v1w))
                if frozenset((vb, vw)) in coeffs.b),
        )
    rep["a_coefficients"] = float(worst)

    A, B, C = abc_coefficients(emb)
    rep["A_vs_area"] = float(np.abs(A - emb.quad_area()).max())
    return rep


def taylor_check_dbar(emb, phi, dbar_phi, quads=None):
    """Per-quad |[d_bar_S phi](z) - dbar(phi)(S(z))| for a smooth test function.

    ``phi`` and ``dbar_phi`` are callables on complex arguments; the residual
    is O(delta * max |D^2 phi|) on Unif embeddings.
    """
    dbar = d_bar_S(emb)
    quads = emb.quads if quads is None else np.asarray(quads)
    S = np.where(np.isnan(emb.S), 0.0, emb.S)
    vals = dbar.mat @ phi(S)
    mask = np.isin(emb.quads, quads)
    return np.abs(vals[mask] - dbar_phi(emb.S_z[emb.quads[mask]]))


def averaged_q_operator_residual(emb, phi, d_phi, dbar_phi, q_gauge_vertex=None):
    """Residuals of [d_bar_omega^T (Q phi)](z) = A_z dbar(phi) + conj(C_z) d(phi).

    Returns per-quad absolute residuals (expected O(delta^3 max |D^2 phi|)
    under Unif and Qflat).
    """
    g = emb.graph
    Q = emb.Q.copy()
    if q_gauge_vertex is not None:
        Q = Q - Q[int(q_gauge_vertex)]
    dbw, _dom = d_omega(emb)
    S = np.where(np.isnan(emb.S), 0.0, emb.S)
    Qv = np.where(np.isnan(Q), 0.0, Q)
    lhs = (dbw.mat.T @ (Qv * phi(S)))[emb.quads]
    A, B, C = abc_coefficients(emb, q_gauge_vertex)
    Sz = emb.S_z[emb.quads]
    rhs = A * dbar_phi(Sz) + np.conj(C) * d_phi(Sz)
    return np.abs(lhs - rhs)


def square_mask_quads(emb, center, ell):
    """Quads whose center lies in the ell x ell square about ``center``."""
    Sz = emb.S_z[emb.quads]
    return (np.abs(np.real(Sz - center)) <= ell / 2) & (
        np.abs(np.imag(Sz - center)) <= ell / 2
    )


def bc_square_sums(emb, center, ell):
    """(|sum B_z|, |sum C_z|) over an ell x ell square (Q gauged to midrange)."""
    g = emb.graph
    verts = sorted({int(v) for z in emb.quads for v in g.quads[z]})
    shift = -0.5 * (np.nanmax(emb.Q[verts]) + np.nanmin(emb.Q[verts]))
    emb2_Q = emb.Q + shift
    saved = emb.Q
    try:
        emb.Q = emb2_Q
        A, B, C = abc_coefficients(emb)
    finally:
        emb.Q = saved
    m = square_mask_quads(emb, center, ell)
    return float(np.abs(B[m].sum())), float(np.abs(C[m].sum()))


def coarse_laplacian_error(emb, phi, lap_phi, center, ell, lap=None):
    """| ell^-2 sum_{S(v) in P} Q(v) [Delta_S phi](v) - lap_phi | on a square.

    Q is gauged to midrange zero; only bulk rows of the s-Laplacian enter, so
    the square must stay away from the embedding boundary.
    """
    g = emb.graph
    if lap is None:
        lap, _ = laplacian_S(emb)
    verts = sorted({int(v) for z in emb.quads for v in g.quads[z]})
    shift = -0.5 * (np.nanmax(emb.Q[verts]) + np.nanmin(emb.Q[verts]))
    S = np.where(np.isnan(emb.S), 0.0, emb.S)
    Q = np.where(np.isnan(emb.Q), 0.0, emb.Q + shift)
    vals = lap.mat @ phi(S)
    inP = (
        (np.abs(np.real(S - center)) <= ell / 2)
        & (np.abs(np.imag(S - center)) <= ell / 2)
        & lap.valid_rows
    )
    total = (Q[inP] * vals[inP]).sum()
    return abs(total / ell**2 - lap_phi)


def coarse_laplacian_error_averaged(emb, phi, lap_phi, center, ell, n_shift=8):
    """Coarse-Laplacian error averaged over one lattice period of placements.

    Sharp window edges alias against the vertex lattice when ell is only a
    few multiples of delta; averaging the square's position over one period
    removes the inclusion-count quantization and exposes the boundary-term
    error decay.
    """
    lap, _ = laplacian_S(emb)
    step = 2 * emb.delta / n_shift
    errs = [
        coarse_laplacian_error(
            emb, phi, lap_phi, center + step * (dx + 1j * dy), ell, lap=lap
        )
        for dx in range(n_shift)
        for dy in range(n_shift)
    ]
    return float(np.mean(errs))

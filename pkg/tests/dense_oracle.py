"""Hand-assembled dense nodal oracle for a 2 x 2 array under read bias.

Written independently of the production solver: the eight unknowns are
enumerated explicitly and every conductance stamp is spelled out.  Node
order: W11, W12, W21, W22, B11, B12, B21, B22.
"""

import numpy as np

W11, W12, W21, W22, B11, B12, B21, B22 = range(8)


def assemble_read_2x2(r_w, r_b, cell_r, sel, r_sf, r_su, v_r):
    """(G, b) for a 2x2 read: selected wordline at v_r, everything else 0.

    ``cell_r`` is a (2, 2) array of cell resistances including nothing for
    the selector; the selected cell adds r_sf, all others r_su (an infinite
    r_su omits the branch).  ``sel`` is 1-based (i, j).
    """
    G = np.zeros((8, 8))
    b = np.zeros(8)
    g_w, g_b = 1.0 / r_w, 1.0 / r_b

    def stamp(a, c, g):
        G[a, a] += g; G[c, c] += g; G[a, c] -= g; G[c, a] -= g

    def tie(a, g, v):
        G[a, a] += g; b[a] += g * v

    drive = {1: v_r if sel[0] == 1 else 0.0, 2: v_r if sel[0] == 2 else 0.0}
    tie(W11, g_w, drive[1]); stamp(W11, W12, g_w)
    tie(W21, g_w, drive[2]); stamp(W21, W22, g_w)
    tie(B11, g_b, 0.0); stamp(B11, B21, g_b)
    tie(B12, g_b, 0.0); stamp(B12, B22, g_b)

    wb = {(1, 1): (W11, B11), (1, 2): (W12, B12),
          (2, 1): (W21, B21), (2, 2): (W22, B22)}
    for (i, j), (wn, bn) in wb.items():
        branch = cell_r[i - 1, j - 1] + (r_sf if (i, j) == sel else r_su)
        if np.isfinite(branch):
            stamp(wn, bn, 1.0 / branch)
    return G, b


def sensed_current_read_2x2(r_w, r_b, cell_r, sel, r_sf, r_su, v_r):
    G, b = assemble_read_2x2(r_w, r_b, cell_r, sel, r_sf, r_su, v_r)
    x = np.linalg.solve(G, b)
    bsense = {1: B11, 2: B12}[sel[1]]
    return x[bsense] / r_b


def sensed_currents_read_2x2_batch(r_w, r_b, cell_r_batch, sel, r_sf, r_su, v_r):
    """Vectorized oracle over a batch of (k, 2, 2) resistance grids."""
    k = cell_r_batch.shape[0]
    G = np.zeros((k, 8, 8))
    b = np.zeros((k, 8))
    for idx in range(k):
        G[idx], b[idx] = assemble_read_2x2(r_w, r_b, cell_r_batch[idx], sel,
                                           r_sf, r_su, v_r)
    x = np.linalg.solve(G, b[..., None])[..., 0]
    bsense = {1: B11, 2: B12}[sel[1]]
    return x[:, bsense] / r_b

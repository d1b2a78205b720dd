"""Pure-numpy implementations of the per-pixel and per-frequency kernels.

Same signatures and semantics as the compiled ``_kernels`` module; used when
the extension is not built or when ``L0ELASTICA_PURE_PYTHON`` is set.
"""

import numpy as np

# |theta*y + gamma1*w| below this abandons the unit-normal branch at a pixel
DEGENERATE_NORM = 1e-12


def threshold_l0(p, thresh_sq):
    keep = p[0] ** 2 + p[1] ** 2 > thresh_sq
    return np.where(keep, p, 0.0)


def curvature_shrink(p, div_lam, weight):
    mag = np.sqrt(p[0] ** 2 + p[1] ** 2)
    shrink = weight * div_lam**2
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(mag > 0.0, np.maximum(0.0, 1.0 - shrink / mag), 0.0)
    return factor * p


def project_s(p, lam, gamma1, eps, max_iter):
    y1, y2 = p[0], p[1]
    w1, w2 = lam[0], lam[1]

    # branch 1: p = 0, lam clipped into the unit disc
    lam_norm = np.sqrt(w1**2 + w2**2)
    scale = 1.0 / np.maximum(1.0, lam_norm)
    l1_hat, l2_hat = w1 * scale, w2 * scale
    g_hat = (y1**2 + y2**2) + gamma1 * ((l1_hat - w1) ** 2 + (l2_hat - w2) ** 2)

    # branch 2: fixed point on theta = |q|, all pixels advanced together
    theta = np.sqrt(y1**2 + y2**2)
    active = np.ones(theta.shape, dtype=bool)
    degenerate = np.zeros(theta.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        z1 = theta * y1 + gamma1 * w1
        z2 = theta * y2 + gamma1 * w2
        nz = np.sqrt(z1**2 + z2**2)
        bad = active & (nz < DEGENERATE_NORM)
        degenerate |= bad
        active &= ~bad
        with np.errstate(divide="ignore", invalid="ignore"):
            new = np.maximum(0.0, (y1 * z1 + y2 * z2) / nz)
        done = active & (np.abs(new - theta) < eps)
        theta = np.where(active, new, theta)
        active &= ~done

    z1 = theta * y1 + gamma1 * w1
    z2 = theta * y2 + gamma1 * w2
    nz = np.sqrt(z1**2 + z2**2)
    degenerate |= nz < DEGENERATE_NORM
    with np.errstate(divide="ignore", invalid="ignore"):
        l1_t = z1 / nz
        l2_t = z2 / nz
    p1_t = theta * l1_t
    p2_t = theta * l2_t
    g_t = (p1_t - y1) ** 2 + (p2_t - y2) ** 2 + gamma1 * ((l1_t - w1) ** 2 + (l2_t - w2) ** 2)

    take_hat = degenerate | (g_hat <= g_t)
    p_out = np.stack([np.where(take_hat, 0.0, p1_t), np.where(take_hat, 0.0, p2_t)])
    lam_out = np.stack([np.where(take_hat, l1_hat, l1_t), np.where(take_hat, l2_hat, l2_t)])
    return p_out, lam_out


def apply_blocks(inv, rhs):
    """out[a, i, j] = sum_b inv[a, b, i, j] * rhs[b, i, j]."""
    return np.einsum("abij,bij->aij", inv, rhs)

"""Brute-force references for tests.

Nothing here touches the FFT path or the ``grid`` stencils: the difference
operators are assembled as explicit sparse-free matrices from 1-D circulant
shifts, the linear systems are solved by pivoted elimination
(``numpy.linalg.solve``), and the projection is checked by sampling the
feasible set.  Everything is sized for toy grids.

Flattening convention: block b, pixel (i, j) of an (M, N) grid sits at row
``b*M*N + i*N + j``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

LAMBDA_MAX_SIDE = 16
STEP_FOUR_MAX_SIDE = 12
ENERGY_MAX_SIDE = 16
# relative residual a dense solve must reach before it is trusted
SOLVE_RESIDUAL_TOL = 1e-12


class OracleFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class DenseOperator:
    """A kMN x kMN matrix acting on k stacked fields of an (M, N) grid."""

    matrix: np.ndarray
    shape: tuple[int, int]
    blocks: int

    def __post_init__(self):
        m, n = self.shape
        size = self.blocks * m * n
        if self.matrix.shape != (size, size):
            raise ValueError(f"matrix is {self.matrix.shape}, expected {(size, size)}")

    def index_map(self) -> np.ndarray:
        """rows[b, i, j] is the matrix row of pixel (i, j) in block b."""
        m, n = self.shape
        return np.arange(self.blocks * m * n).reshape(self.blocks, m, n)

    def to_vector(self, fields) -> np.ndarray:
        return np.concatenate([np.asarray(f, dtype=float).ravel() for f in fields])

    def from_vector(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x).reshape((self.blocks,) + tuple(self.shape))

    def solve(self, fields) -> np.ndarray:
        b = self.to_vector(fields)
        try:
            x = np.linalg.solve(self.matrix, b)
        except np.linalg.LinAlgError as exc:
            raise OracleFailure("dense operator is singular") from exc
        resid = np.linalg.norm(self.matrix @ x - b)
        scale = np.linalg.norm(self.matrix) * np.linalg.norm(x) + np.linalg.norm(b)
        if scale > 0 and resid > SOLVE_RESIDUAL_TOL * scale:
            raise OracleFailure(f"dense solve residual {resid / scale:.2e} too large")
        return self.from_vector(x)


def shift_matrix(n: int, k: int = 1) -> np.ndarray:
    """Periodic shift: (S x)[i] = x[(i + k) mod n]."""
    return np.roll(np.eye(n), k, axis=1)


def difference_matrices(shape: tuple[int, int], h: float = 1.0) -> dict[str, np.ndarray]:
    """Forward/backward differences along both axes on the flattened grid."""
    m, n = shape
    im, in_ = np.eye(m), np.eye(n)
    fwd_m = (shift_matrix(m, 1) - im) / h
    bwd_m = (im - shift_matrix(m, -1)) / h
    fwd_n = (shift_matrix(n, 1) - in_) / h
    bwd_n = (in_ - shift_matrix(n, -1)) / h
    return {
        "d1f": np.kron(fwd_m, in_),
        "d1b": np.kron(bwd_m, in_),
        "d2f": np.kron(im, fwd_n),
        "d2b": np.kron(im, bwd_n),
    }


def _check_side(shape, limit: int, what: str) -> None:
    if max(shape) > limit:
        raise ValueError(f"{what} oracle is capped at {limit}x{limit} grids, got {shape}")


def dense_lambda_operator(shape, gamma1: float, c: float, h: float = 1.0) -> DenseOperator:
    """gamma1*I - c*grad+ div- on 2-vector fields."""
    _check_side(shape, LAMBDA_MAX_SIDE, "lambda")
    d = difference_matrices(shape, h)
    grad = np.vstack([d["d1f"], d["d2f"]])
    div = np.hstack([d["d1b"], d["d2b"]])
    mat = gamma1 * np.eye(grad.shape[0]) - c * grad @ div
    return DenseOperator(mat, tuple(shape), 2)


def dense_lambda_solve(b: np.ndarray, gamma1: float, c: float, h: float = 1.0) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    op = dense_lambda_operator(b.shape[1:], gamma1, c, h)
    return op.solve(b)


def dense_step_four_operator(
    shape, tau, gamma2, gamma3, alpha_w, alpha_n, kappa=1e-9, h=1.0, smooth=True
) -> DenseOperator:
    """Coupled operator on (v, r, s1, s2), or on (v, s1, s2) without the smooth part.

    Row blocks:
        v : (tau - Lap) v + tau r + tau div-(s)
        r : tau v + (gamma2 + tau + 2 tau alpha_w Lap^2) r + tau div-(s)
        s : -tau grad+(v + r) + (gamma3 + 2 tau alpha_n) s - tau grad+ div-(s)
    plus kappa on the diagonal.
    """
    _check_side(shape, STEP_FOUR_MAX_SIDE, "step-four")
    d = difference_matrices(shape, h)
    size = shape[0] * shape[1]
    eye = np.eye(size)
    lap = d["d1b"] @ d["d1f"] + d["d2b"] @ d["d2f"]
    g = gamma3 + 2.0 * tau * alpha_n
    blocks = [
        [tau * eye - lap, tau * eye, tau * d["d1b"], tau * d["d2b"]],
        [tau * eye, (gamma2 + tau) * eye + 2.0 * tau * alpha_w * lap @ lap, tau * d["d1b"], tau * d["d2b"]],
        [-tau * d["d1f"], -tau * d["d1f"], g * eye - tau * d["d1f"] @ d["d1b"], -tau * d["d1f"] @ d["d2b"]],
        [-tau * d["d2f"], -tau * d["d2f"], -tau * d["d2f"] @ d["d1b"], g * eye - tau * d["d2f"] @ d["d2b"]],
    ]
    keep = (0, 1, 2, 3) if smooth else (0, 2, 3)
    mat = np.block([[blocks[i][j] for j in keep] for i in keep])
    mat += kappa * np.eye(mat.shape[0])
    return DenseOperator(mat, tuple(shape), len(keep))


def dense_step_four_solve(b1, b2, b3, b4, tau, gamma2, gamma3, alpha_w, alpha_n,
                          kappa=1e-9, h=1.0, smooth=True):
    """Return (v, r, s1, s2); r is zero and b2 unused when ``smooth`` is False."""
    b1 = np.asarray(b1, dtype=float)
    op = dense_step_four_operator(b1.shape, tau, gamma2, gamma3, alpha_w, alpha_n, kappa, h, smooth)
    if smooth:
        v, r, s1, s2 = op.solve((b1, b2, b3, b4))
    else:
        v, s1, s2 = op.solve((b1, b3, b4))
        r = np.zeros_like(v)
    return v, r, s1, s2


def projection_objective(q, mu, p, lam, gamma1):
    """|q - p|^2 + gamma1 |mu - lam|^2 for (..., 2) arrays."""
    q, mu = np.asarray(q), np.asarray(mu)
    return ((q - p) ** 2).sum(axis=-1) + gamma1 * ((mu - lam) ** 2).sum(axis=-1)


def brute_force_project_s(p, lam, gamma1: float = 1.0, samples: int = 10_000, rng=None) -> float:
    """Smallest sampled objective over the constraint set at one pixel.

    Half the samples sit on the q = 0 piece (mu uniform in the unit disc),
    half on the q = theta*mu piece with mu uniform on the circle and theta
    the exact minimizer max(p.mu, 0) for that mu.  A few structured points
    (mu = 0, lam clipped into the disc, the directions of p and lam) are
    added so feasible and trivial inputs are hit exactly.
    """
    if samples < 2:
        raise ValueError("samples must be at least 2")
    rng = np.random.default_rng(rng)
    p1, p2 = (float(x) for x in p)
    l1, l2 = (float(x) for x in lam)
    half = samples // 2

    def cost(q1, q2, m1, m2):
        return (q1 - p1) ** 2 + (q2 - p2) ** 2 + gamma1 * ((m1 - l1) ** 2 + (m2 - l2) ** 2)

    # q = 0 piece
    rad = np.sqrt(rng.random(half))
    phi = 2.0 * np.pi * rng.random(half)
    lam_scale = 1.0 / max(1.0, math.hypot(l1, l2))
    m1 = np.concatenate([rad * np.cos(phi), [0.0, l1 * lam_scale]])
    m2 = np.concatenate([rad * np.sin(phi), [0.0, l2 * lam_scale]])
    best = float(cost(0.0, 0.0, m1, m2).min())

    # q = theta * mu piece
    psi = 2.0 * np.pi * rng.random(samples - half)
    c1, c2 = [np.cos(psi)], [np.sin(psi)]
    for a1, a2 in ((p1, p2), (l1, l2)):
        norm = math.hypot(a1, a2)
        if norm > 0:
            c1.append([a1 / norm])
            c2.append([a2 / norm])
    c1, c2 = np.concatenate(c1), np.concatenate(c2)
    theta = np.maximum(c1 * p1 + c2 * p2, 0.0)
    return min(best, float(cost(theta * c1, theta * c2, c1, c2).min()))


def _fwd(a, axis, h):
    return (np.roll(a, -1, axis=axis) - a) / h


def _bwd(a, axis, h):
    return (a - np.roll(a, 1, axis=axis)) / h


def energy_hessian(w: np.ndarray, h: float = 1.0) -> float:
    """1/2 sum(wxx^2 + 2 wxy^2 + wyy^2), mixed term forward-forward."""
    wxx = _fwd(_bwd(w, 0, h), 0, h)
    wyy = _fwd(_bwd(w, 1, h), 1, h)
    wxy = _fwd(_fwd(w, 0, h), 1, h)
    return 0.5 * float(np.sum(wxx**2 + 2.0 * wxy**2 + wyy**2))


def energy_laplacian(w: np.ndarray, h: float = 1.0) -> float:
    """1/2 sum((Lap w)^2)."""
    lap = _fwd(_bwd(w, 0, h), 0, h) + _fwd(_bwd(w, 1, h), 1, h)
    return 0.5 * float(np.sum(lap**2))


def fd_gradient(energy, w: np.ndarray, step: float = 1e-4, **kwargs) -> np.ndarray:
    """Central finite-difference gradient of a scalar energy of an image."""
    w = np.array(w, dtype=float)
    grad = np.empty_like(w)
    for idx in np.ndindex(w.shape):
        orig = w[idx]
        w[idx] = orig + step
        up = energy(w, **kwargs)
        w[idx] = orig - step
        down = energy(w, **kwargs)
        w[idx] = orig
        grad[idx] = (up - down) / (2.0 * step)
    return grad


def energy_gradient_check(w: np.ndarray, step: float = 1e-4, h: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference gradients of the Hessian and Laplacian energies."""
    w = np.asarray(w, dtype=float)
    _check_side(w.shape, ENERGY_MAX_SIDE, "energy")
    return fd_gradient(energy_hessian, w, step, h=h), fd_gradient(energy_laplacian, w, step, h=h)


def biharmonic_symbol(shape: tuple[int, int], h: float = 1.0) -> np.ndarray:
    """Symbol of Lap^2 on the full (M, N) frequency grid, computed directly."""
    m, n = shape
    cz = np.cos(2.0 * np.pi * np.arange(m) / m)[:, None]
    ce = np.cos(2.0 * np.pi * np.arange(n) / n)[None, :]
    lap = (2.0 * (cz - 1.0) + 2.0 * (ce - 1.0)) / h**2
    return lap**2


def leibniz_det(mat: np.ndarray) -> complex:
    """Determinant of one small square matrix by the permutation expansion."""
    mat = np.asarray(mat)
    k = mat.shape[0]
    total = 0.0
    for perm in itertools.permutations(range(k)):
        inversions = sum(1 for a in range(k) for b in range(a + 1, k) if perm[a] > perm[b])
        term = -1.0 if inversions % 2 else 1.0
        for row, col in enumerate(perm):
            term = term * mat[row, col]
        total = total + term
    return total

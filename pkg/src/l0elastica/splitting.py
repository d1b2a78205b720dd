"""The fractional steps of one splitting iteration.

State variables and what they stand for:

    p    gradient surrogate of the structure part (2, M, N)
    lam  unit-normal surrogate of the level lines (2, M, N)
    r    smooth part (M, N)
    s    potential of the oscillatory part, n = div-(s) (2, M, N)
    v    structure part (M, N)

Each step returns new arrays and leaves the variables it does not advance
untouched (the same objects are carried over).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import grid, kernels, spectral
from .spectral import LambdaSymbols, StepFourSymbols, lambda_increment, solve_step_four


@dataclass(frozen=True)
class SplitState:
    p: np.ndarray
    lam: np.ndarray
    r: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.v.shape

    def replace(self, **changes) -> "SplitState":
        return replace(self, **changes)


@dataclass(frozen=True)
class ProjectionConfig:
    epsilon: float = 1e-6
    max_fixed_point_iters: int = 50
    gamma1: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_fixed_point_iters < 1:
            raise ValueError("max_fixed_point_iters must be at least 1")
        if self.gamma1 <= 0:
            raise ValueError("gamma1 must be positive")


def _field(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=float)


def threshold_l0(p: np.ndarray, tau: float, alpha0: float) -> np.ndarray:
    """Zero every pixel vector with |p|^2 <= tau*alpha0/2, keep the rest."""
    if tau <= 0 or alpha0 <= 0:
        raise ValueError("tau and alpha0 must be positive")
    return kernels.impl.threshold_l0(_field(p), 0.5 * tau * alpha0)


def curvature_shrink(p: np.ndarray, lam: np.ndarray, tau: float, alpha_curv: float, h: float = 1.0) -> np.ndarray:
    """Shrink |p| by tau*alpha_curv*(div- lam)^2, clamping at zero."""
    if tau <= 0 or alpha_curv <= 0:
        raise ValueError("tau and alpha_curv must be positive")
    div_lam = np.ascontiguousarray(grid.div_backward(lam, h))
    return kernels.impl.curvature_shrink(_field(p), div_lam, tau * alpha_curv)


def lambda_rhs(p, lam, tau, alpha_curv, gamma1, c, h=1.0) -> np.ndarray:
    div_lam = grid.div_backward(lam, h)
    mag = grid.magnitude(p)
    return (
        gamma1 * lam
        - c * grid.grad_forward(div_lam, h)
        + 2.0 * tau * alpha_curv * grid.grad_forward(mag * div_lam, h)
    )


def lambda_update(p, lam, tau, alpha_curv, sym: LambdaSymbols) -> np.ndarray:
    """Frozen-coefficient update of the normal field.

    Solves (gamma1 - c grad+ div-) lam_new =
    gamma1 lam - c grad+ div- lam + 2 tau alpha_curv grad+(|p| div- lam).

    The operator applied to lam cancels against the left side, so only the
    source term is solved for: lam_new = lam + 2 tau alpha_curv A^-1 grad+(m).
    """
    m = grid.magnitude(p) * grid.div_backward(lam, sym.h)
    return lam + 2.0 * tau * alpha_curv * lambda_increment(m, sym)


def project_s(p: np.ndarray, lam: np.ndarray, cfg: ProjectionConfig) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise projection onto {(q, mu): q.mu = |q|, |mu| <= 1}.

    Compares the q = 0 candidate against the unit-normal candidate from the
    theta fixed point and keeps the one with the smaller
    |q - p|^2 + gamma1 |mu - lam|^2 (ties go to q = 0).
    """
    return kernels.impl.project_s(_field(p), _field(lam), cfg.gamma1, cfg.epsilon, cfg.max_fixed_point_iters)


def projection_cost(q, mu, p, lam, gamma1) -> np.ndarray:
    return ((q - p) ** 2).sum(axis=0) + gamma1 * ((mu - lam) ** 2).sum(axis=0)


def step_four_rhs(state: SplitState, f: np.ndarray, tau: float, gamma2: float, gamma3: float, h: float = 1.0):
    b1 = -grid.div_backward(state.p, h) + tau * f
    b2 = gamma2 * state.r + tau * f
    b3 = gamma3 * state.s[0] - tau * grid.diff(f, 1, "forward", h)
    b4 = gamma3 * state.s[1] - tau * grid.diff(f, 2, "forward", h)
    return b1, b2, b3, b4


def step_four(state: SplitState, f: np.ndarray, sym: StepFourSymbols) -> SplitState:
    """Coupled implicit solve for (v, r, s); then p = grad+ v, lam carried over."""
    b = step_four_rhs(state, f, sym.tau, sym.gamma2, sym.gamma3, sym.h)
    v, r, s1, s2 = solve_step_four(*b, sym)
    return state.replace(v=v, r=r, s=np.stack([s1, s2]), p=grid.grad_forward(v, sym.h))


class StepFourSolver:
    """``step_four`` for a fixed image, reusing spectra between iterations.

    The transform of f is computed once and the spectra of (r, s) from the
    previous solve are kept, so an iteration needs one forward transform
    (of div- p) and one batched inverse.  States not produced by this solver
    fall back to transforming r and s directly.
    """

    def __init__(self, f: np.ndarray, sym: StepFourSymbols):
        f = np.asarray(f, dtype=float)
        if f.shape != tuple(sym.shape):
            raise ValueError(f"image shape {f.shape} does not match symbols {sym.shape}")
        self.sym = sym
        f_hat = spectral.dft2(f)
        g = spectral.grad_symbols(sym.shape, sym.h)
        fixed = (sym.tau * f_hat, sym.tau * f_hat, -sym.tau * g[0] * f_hat, -sym.tau * g[1] * f_hat)
        self._fixed = np.stack([fixed[u] for u in sym.unknowns])
        weights = (0.0, sym.gamma2, sym.gamma3, sym.gamma3)
        self._weights = np.array([weights[u] for u in sym.unknowns])[:, None, None]
        self._last: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None  # (r, s, spectra)

    def _previous_spectra(self, state: SplitState) -> np.ndarray:
        if self._last is not None and state.r is self._last[0] and state.s is self._last[1]:
            return self._last[2]
        fields = (state.v, state.r, state.s[0], state.s[1])
        return spectral.dft2(np.stack([fields[u] for u in self.sym.unknowns]))

    def step(self, state: SplitState) -> SplitState:
        sym = self.sym
        rhs = self._fixed + self._weights * self._previous_spectra(state)
        rhs[0] -= spectral.dft2(grid.div_backward(state.p, sym.h))
        sol_hat = spectral.solve_step_four_spectral(rhs, sym)
        sol = spectral.idft2_real(sol_hat, sym.shape)
        v = sol[0]
        if sym.has_smooth:
            r, s = sol[1], sol[2:4]
        else:
            r, s = np.zeros_like(v), sol[1:3]
        new = state.replace(v=v, r=r, s=s, p=grid.grad_forward(v, sym.h))
        self._last = (r, s, sol_hat)
        return new

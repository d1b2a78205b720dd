"""Decomposition driver: initialization, iteration loop, variants, presets."""

from __future__ import annotations

import enum
import logging
import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import grid, spectral
from .splitting import (
    ProjectionConfig,
    SplitState,
    StepFourSolver,
    curvature_shrink,
    lambda_update,
    project_s,
    threshold_l0,
)

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    """A non-finite value appeared during the iteration."""

    def __init__(self, iteration: int, what: str = "state"):
        super().__init__(f"non-finite {what} at iteration {iteration}")
        self.iteration = iteration


class ModelVariant(str, enum.Enum):
    PROPOSED = "proposed"
    MODEL_I = "model1"  # L0 gradient + H^-1 only
    MODEL_II = "model2"  # no curvature term
    MODEL_III = "model3"  # no smooth part


@dataclass(frozen=True)
class StepSchedule:
    curvature: bool  # fractional steps 2 and 3
    smooth: bool  # smooth unknown kept in the coupled solve


def apply_variant(variant: ModelVariant | str) -> StepSchedule:
    variant = ModelVariant(variant)
    return {
        ModelVariant.PROPOSED: StepSchedule(curvature=True, smooth=True),
        ModelVariant.MODEL_I: StepSchedule(curvature=False, smooth=False),
        ModelVariant.MODEL_II: StepSchedule(curvature=False, smooth=True),
        ModelVariant.MODEL_III: StepSchedule(curvature=True, smooth=False),
    }[variant]


LAMBDA_INITS = ("normal", "zero")


@dataclass
class DecompParams:
    alpha0: float = 2e-3
    alpha_curv: float = 0.1
    alpha_w: float = 50.0
    alpha_n: float = 10.0
    tau: float = 0.1
    gamma1: float = 1.0
    gamma2: float = 0.01
    gamma3: float = 20.0
    c: float = 1e-9
    kappa: float = 1e-9
    rho: float = 1e-6
    iter_max: int = 1000
    pad_width: int = 30
    variant: ModelVariant = ModelVariant.PROPOSED
    h: float = 1.0
    fp_epsilon: float = 1e-6
    fp_max_iters: int = 50
    energy_every: int = 0  # 0 disables the energy trace
    # "normal": lam starts as the unit normal of the initial gradient;
    # "zero": lam starts at 0, which keeps the projection on its q = 0 branch
    # whenever |p|^2 < gamma1 everywhere (see README)
    lambda_init: str = "normal"
    # constants move freely between v and w without changing the energy;
    # True hands the mean of w to v on output
    zero_mean_w: bool = True

    def __post_init__(self):
        self.variant = ModelVariant(self.variant)
        self.validate()

    def validate(self) -> None:
        positive = ("alpha0", "alpha_curv", "alpha_w", "alpha_n", "tau",
                    "gamma1", "gamma2", "gamma3", "rho", "h", "fp_epsilon")
        for name in positive:
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be positive and finite, got {val!r}")
        for name in ("c", "kappa"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.iter_max < 0:
            raise ValueError("iter_max must be non-negative")
        if self.pad_width < 0:
            raise ValueError("pad_width must be non-negative")
        if self.fp_max_iters < 1:
            raise ValueError("fp_max_iters must be at least 1")
        if self.energy_every < 0:
            raise ValueError("energy_every must be non-negative")
        if self.lambda_init not in LAMBDA_INITS:
            raise ValueError(f"lambda_init must be one of {LAMBDA_INITS}, got {self.lambda_init!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variant"] = self.variant.value
        return d


@dataclass
class DecompositionResult:
    v: np.ndarray
    w: np.ndarray
    n: np.ndarray
    u: np.ndarray
    iterations: int
    residual_history: list[tuple[float, float]]
    elapsed: float
    converged: bool
    energy_trace: list[tuple[int, float]] = field(default_factory=list)
    loop_elapsed: float = 0.0  # iteration loop only, without setup and cropping

    @property
    def residual_final(self) -> float:
        if not self.residual_history:
            return math.nan
        return max(self.residual_history[-1])


# intensity scale thresholds (in 1/255 units) for the alpha_n preset
_LOW_NOISE, _MID_NOISE, _HIGH_NOISE = 20.0, 60.0, 100.0


def preset_alpha_n(sigma: float) -> float:
    """alpha_n for a noise level given in 1/255 units (sigma=20 means 20/255)."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma < _LOW_NOISE:
        return 10.0
    if sigma < _MID_NOISE:
        return 1e-2
    if sigma >= _HIGH_NOISE:
        warnings.warn(f"noise level {sigma} is outside the calibrated range [0, 100)", stacklevel=2)
    return 1e-4


def init_state(f: np.ndarray, h: float = 1.0, smooth: bool = True, lambda_init: str = "normal") -> SplitState:
    """Starting point: v0 a faint smoothed copy of f around 0.5, r0 = f - v0."""
    if lambda_init not in LAMBDA_INITS:
        raise ValueError(f"lambda_init must be one of {LAMBDA_INITS}")
    f = np.asarray(f, dtype=float)
    v0 = 0.001 * grid.gaussian_smooth(f, 1.0) + 0.999 * 0.5
    p0 = grid.grad_forward(v0, h)
    if lambda_init == "normal":
        mag = grid.magnitude(p0)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam0 = np.where(mag > 0, p0 / mag, 0.0)
    else:
        lam0 = np.zeros_like(p0)
    return SplitState(
        p=p0,
        lam=lam0,
        r=f - v0 if smooth else np.zeros_like(f),
        s=np.zeros_like(p0),
        v=v0,
    )


def energy_eval(v, w, n, f, params: DecompParams, s: np.ndarray | None = None) -> float:
    """Discrete model energy of a decomposition.

    The H^-1 term uses ``s`` when given (n = div- s); otherwise the
    minimum-norm potential grad+(Laplacian^-1 n) of the zero-mean part of n.
    """
    h = params.h
    area = h * h
    q = grid.grad_forward(v, h)
    qn = grid.magnitude(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = np.where(qn > 0, q / qn, 0.0)
    l0 = float(np.count_nonzero(qn > 0)) * area
    curv = float(np.sum(grid.div_backward(mu, h) ** 2 * qn)) * area
    smooth = float(np.sum(grid.laplacian(w, h) ** 2)) * area
    if s is None:
        s = _min_norm_potential(n, h)
    osc = float(np.sum(s**2)) * area
    fid = 0.5 * float(np.sum((f - v - w - n) ** 2)) * area
    return params.alpha0 * l0 + params.alpha_curv * curv + params.alpha_w * smooth + params.alpha_n * osc + fid


def _min_norm_potential(n: np.ndarray, h: float) -> np.ndarray:
    e1, e2 = spectral.shift_symbols(n.shape)
    lap = (2.0 * (e1.real - 1.0) + 2.0 * (e2.real - 1.0)) / h**2
    spec = spectral.dft2(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_hat = np.where(lap != 0, spec / lap, 0.0)
    phi = spectral.idft2_real(phi_hat, n.shape)
    return grid.grad_forward(phi, h)


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    return float(np.linalg.norm(new - old) / (np.linalg.norm(old) + 1e-12))


def decompose(f: np.ndarray, params: DecompParams | None = None) -> DecompositionResult:
    """Split ``f`` (values in [0, 1]) into structure, smooth and oscillatory parts."""
    params = params or DecompParams()
    params.validate()
    f = np.asarray(f, dtype=float)
    if f.ndim != 2 or min(f.shape) < 2:
        raise ValueError(f"expected a 2-D image of size at least 2x2, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("input image contains non-finite values")

    start = time.perf_counter()
    schedule = apply_variant(params.variant)
    h, tau = params.h, params.tau
    fp = grid.pad_symmetric(f, params.pad_width)
    shape = fp.shape

    sym4 = spectral.build_step_four_symbols(
        shape, tau, params.gamma2, params.gamma3, params.alpha_w, params.alpha_n,
        kappa=params.kappa, h=h, smooth=schedule.smooth,
    )
    sym_lam = spectral.build_lambda_symbols(params.gamma1, params.c, h, shape) if schedule.curvature else None
    proj = ProjectionConfig(params.fp_epsilon, params.fp_max_iters, params.gamma1)

    solver = StepFourSolver(fp, sym4)
    state = init_state(fp, h, smooth=schedule.smooth, lambda_init=params.lambda_init)
    history: list[tuple[float, float]] = []
    energies: list[tuple[int, float]] = []
    converged = False
    k = 0
    loop_start = time.perf_counter()
    for k in range(1, params.iter_max + 1):
        p = threshold_l0(state.p, tau, params.alpha0)
        lam = state.lam
        if schedule.curvature:
            p = curvature_shrink(p, lam, tau, params.alpha_curv, h)
            lam = lambda_update(p, lam, tau, params.alpha_curv, sym_lam)
            p, lam = project_s(p, lam, proj)
        new = solver.step(state.replace(p=p, lam=lam))

        if not (np.all(np.isfinite(new.v)) and np.all(np.isfinite(new.r)) and np.all(np.isfinite(new.s))):
            raise DivergenceError(k)
        change = (_rel_change(new.r, state.r), _rel_change(new.v, state.v))
        history.append(change)
        state = new
        if params.energy_every and k % params.energy_every == 0:
            n_k = grid.div_backward(state.s, h)
            energies.append((k, energy_eval(state.v, state.r, n_k, fp, params, s=state.s)))
        if max(change) < params.rho:
            converged = True
            break
    loop_elapsed = time.perf_counter() - loop_start
    iterations = k if params.iter_max > 0 else 0

    n_full = grid.div_backward(state.s, h)
    v = grid.crop_pad(state.v, params.pad_width)
    w = grid.crop_pad(state.r, params.pad_width)
    n = grid.crop_pad(n_full, params.pad_width)
    if params.zero_mean_w:
        offset = float(w.mean())
        v, w = v + offset, w - offset
    elapsed = time.perf_counter() - start
    log.info("decompose: %d iterations, converged=%s, %.2fs", iterations, converged, elapsed)
    return DecompositionResult(
        v=v, w=w, n=n, u=v + w, iterations=iterations, residual_history=history,
        elapsed=elapsed, converged=converged, energy_trace=energies, loop_elapsed=loop_elapsed,
    )

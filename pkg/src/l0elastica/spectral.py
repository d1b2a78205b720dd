"""FFT diagonalization of the two periodic linear systems of the scheme.

Both systems are block-circulant, so one 2-D DFT turns them into an
independent small matrix per frequency: 2x2 for the normal-field update and
4x4 (3x3 when the smooth unknown is dropped) for the coupled
structure / smooth / potential update.  The matrices never change during a
run, so their inverses are built once (cofactor expansion, i.e. Cramer's
rule) and only a per-frequency mat-vec is done every iteration.

DFT convention: unnormalized forward transform, 1/(MN) on the inverse
(``scipy.fft`` defaults).  With it, a periodic shift f(i+1) becomes
multiplication by exp(+2*pi*1j*i/M).

All operators are real, so every spectrum is Hermitian and only the
half-spectrum of ``rfft2`` is stored: symbol arrays have shape
(M, N // 2 + 1) for an (M, N) grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from . import kernels


def half_shape(shape: tuple[int, int]) -> tuple[int, int]:
    return (shape[0], shape[1] // 2 + 1)


def dft2(img: np.ndarray) -> np.ndarray:
    """Half-spectrum DFT over the last two axes."""
    return sfft.rfft2(img, axes=(-2, -1))


def idft2_real(spec: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of ``dft2`` back onto an (M, N) grid."""
    return sfft.irfft2(spec, s=tuple(shape), axes=(-2, -1))


def shift_symbols(shape: tuple[int, int], half: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """exp(1j*zeta_i) as a column and exp(1j*eta_j) as a row.

    With ``half`` the row only covers the columns kept by ``dft2``.
    """
    m, n = shape
    cols = n // 2 + 1 if half else n
    zeta = 2.0 * np.pi * np.arange(m) / m
    eta = 2.0 * np.pi * np.arange(cols) / n
    return np.exp(1j * zeta)[:, None], np.exp(1j * eta)[None, :]


def grad_symbols(shape: tuple[int, int], h: float = 1.0, half: bool = True) -> np.ndarray:
    """Symbols of the forward differences, stacked as (2, M, N')."""
    e1, e2 = shift_symbols(shape, half)
    return np.stack(np.broadcast_arrays((e1 - 1.0) / h, (e2 - 1.0) / h))


def _det(mat: np.ndarray) -> np.ndarray:
    """Determinant of a stack of k x k matrices laid out as (k, k, M, N)."""
    k = mat.shape[0]
    if k == 1:
        return mat[0, 0]
    if k == 2:
        return mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    total = np.zeros(mat.shape[2:], dtype=mat.dtype)
    rows = list(range(1, k))
    for col in range(k):
        cols = [c for c in range(k) if c != col]
        minor = mat[np.ix_(rows, cols)]
        sign = -1.0 if col % 2 else 1.0
        total = total + sign * mat[0, col] * _det(minor)
    return total


def cramer_inverse(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-frequency inverse by cofactors; returns (inverse, determinant)."""
    k = mat.shape[0]
    det = _det(mat)
    inv = np.empty_like(mat)
    for i in range(k):
        for j in range(k):
            rows = [r for r in range(k) if r != i]
            cols = [c for c in range(k) if c != j]
            cof = _det(mat[np.ix_(rows, cols)]) if k > 1 else np.ones_like(det)
            inv[j, i] = (-1.0) ** (i + j) * cof / det
    return inv, det


def _check_det(det: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(det)) or float(np.abs(det).min()) <= 0.0:
        raise ValueError(f"{what} symbol matrix is singular at some frequency")


@dataclass(frozen=True)
class LambdaSymbols:
    """Symbols of (gamma1 - c grad+ div-) acting on a 2-vector field."""

    a: np.ndarray  # (2, 2, M, N') complex, half-spectrum
    det: np.ndarray
    inv: np.ndarray
    gamma1: float
    c: float
    h: float
    shape: tuple[int, int]  # real grid
    # inv applied to the grad+ symbol: maps F(m) to the lam increment
    # caused by a source grad+(m)
    inv_grad: np.ndarray


def build_lambda_symbols(gamma1: float, c: float, h: float, shape: tuple[int, int]) -> LambdaSymbols:
    if gamma1 <= 0:
        raise ValueError("gamma1 must be positive")
    if c < 0:
        raise ValueError("frozen coefficient c must be non-negative")
    shape = tuple(shape)
    a = lambda_matrix(shape, gamma1, c, h)
    inv, det = cramer_inverse(a)
    _check_det(det, "lambda")
    g = grad_symbols(shape, h)
    inv_grad = np.ascontiguousarray(np.einsum("abij,bij->aij", inv, g))
    return LambdaSymbols(a=a, det=det, inv=np.ascontiguousarray(inv), gamma1=gamma1, c=c, h=h,
                         shape=shape, inv_grad=inv_grad)


def lambda_matrix(shape, gamma1, c, h, half: bool = True) -> np.ndarray:
    e1, e2 = shift_symbols(shape, half)
    spec_shape = (e1.shape[0], e2.shape[1])
    a = np.empty((2, 2) + spec_shape, dtype=complex)
    a[0, 0] = np.broadcast_to(gamma1 - 2.0 * c * (e1.real - 1.0) / h**2, spec_shape)
    a[1, 1] = np.broadcast_to(gamma1 - 2.0 * c * (e2.real - 1.0) / h**2, spec_shape)
    a[0, 1] = c * (e1 - 1.0) * (np.conj(e2) - 1.0) / h**2
    a[1, 0] = c * (e2 - 1.0) * (np.conj(e1) - 1.0) / h**2
    return a


def solve_lambda_system(b: np.ndarray, sym: LambdaSymbols) -> np.ndarray:
    """Solve (gamma1 - c grad+ div-) lam = b for a (2, M, N) right-hand side."""
    rhs = np.ascontiguousarray(dft2(b))
    return idft2_real(kernels.impl.apply_blocks(sym.inv, rhs), sym.shape)


def lambda_increment(m: np.ndarray, sym: LambdaSymbols) -> np.ndarray:
    """Solution of (gamma1 - c grad+ div-) x = grad+(m) for a scalar field m."""
    return idft2_real(sym.inv_grad * dft2(m), sym.shape)


# unknown ordering of the coupled system: v, r, s1, s2
FULL_UNKNOWNS = (0, 1, 2, 3)
NO_SMOOTH_UNKNOWNS = (0, 2, 3)


@dataclass(frozen=True)
class StepFourSymbols:
    """Per-frequency matrix D of the coupled (v, r, s1, s2) system plus kappa*I.

    ``unknowns`` lists which of the four unknowns are kept; dropping index 1
    removes the smooth part and leaves the 3x3 block of rows/cols (0, 2, 3).
    """

    d: np.ndarray  # (k, k, M, N') complex, half-spectrum
    det: np.ndarray
    inv: np.ndarray
    unknowns: tuple[int, ...]
    tau: float
    gamma2: float
    gamma3: float
    alpha_w: float
    alpha_n: float
    kappa: float
    h: float
    shape: tuple[int, int]  # real grid

    @property
    def has_smooth(self) -> bool:
        return 1 in self.unknowns


def step_four_matrix(shape, tau, gamma2, gamma3, alpha_w, alpha_n, h, half: bool = True) -> np.ndarray:
    """The full 4x4 symbol D without the kappa shift."""
    e1, e2 = shift_symbols(shape, half)
    spec_shape = (e1.shape[0], e2.shape[1])
    cz = np.broadcast_to(e1.real, spec_shape)
    ce = np.broadcast_to(e2.real, spec_shape)
    e1 = np.broadcast_to(e1, spec_shape)
    e2 = np.broadcast_to(e2, spec_shape)
    d = np.zeros((4, 4) + spec_shape, dtype=complex)
    d[0, 0] = tau - 2.0 * (cz - 1.0) / h**2 - 2.0 * (ce - 1.0) / h**2
    d[0, 1] = tau
    d[0, 2] = tau * (1.0 - np.conj(e1)) / h
    d[0, 3] = tau * (1.0 - np.conj(e2)) / h
    d[1, 0] = tau
    d[1, 1] = gamma2 + tau + 2.0 * tau * alpha_w * 4.0 / h**4 * ((cz - 1.0) + (ce - 1.0)) ** 2
    d[1, 2] = d[0, 2]
    d[1, 3] = d[0, 3]
    d[2, 0] = -tau * (e1 - 1.0) / h
    d[2, 1] = d[2, 0]
    d[2, 2] = gamma3 + 2.0 * tau * alpha_n - 2.0 * tau * (cz - 1.0) / h**2
    d[2, 3] = tau * (e1 - 1.0) * (np.conj(e2) - 1.0) / h**2
    d[3, 0] = -tau * (e2 - 1.0) / h
    d[3, 1] = d[3, 0]
    d[3, 2] = tau * (e2 - 1.0) * (np.conj(e1) - 1.0) / h**2
    d[3, 3] = gamma3 + 2.0 * tau * alpha_n - 2.0 * tau * (ce - 1.0) / h**2
    return d


def build_step_four_symbols(
    shape: tuple[int, int],
    tau: float,
    gamma2: float,
    gamma3: float,
    alpha_w: float,
    alpha_n: float,
    kappa: float = 1e-9,
    h: float = 1.0,
    smooth: bool = True,
) -> StepFourSymbols:
    for name, val in (("tau", tau), ("gamma3", gamma3), ("alpha_n", alpha_n)):
        if val <= 0:
            raise ValueError(f"{name} must be positive")
    if smooth:
        for name, val in (("gamma2", gamma2), ("alpha_w", alpha_w)):
            if val <= 0:
                raise ValueError(f"{name} must be positive")
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    full = step_four_matrix(shape, tau, gamma2, gamma3, alpha_w, alpha_n, h)
    unknowns = FULL_UNKNOWNS if smooth else NO_SMOOTH_UNKNOWNS
    d = np.ascontiguousarray(full[np.ix_(unknowns, unknowns)])
    for i in range(len(unknowns)):
        d[i, i] += kappa
    inv, det = cramer_inverse(d)
    _check_det(det, "step-four")
    return StepFourSymbols(
        d=d, det=det, inv=np.ascontiguousarray(inv), unknowns=unknowns, tau=tau,
        gamma2=gamma2, gamma3=gamma3, alpha_w=alpha_w, alpha_n=alpha_n, kappa=kappa, h=h,
        shape=tuple(shape),
    )


def solve_step_four_spectral(rhs: np.ndarray, sym: StepFourSymbols) -> np.ndarray:
    """Per-frequency solve on stacked half-spectra (k, M, N') of the kept unknowns."""
    return kernels.impl.apply_blocks(sym.inv, np.ascontiguousarray(rhs))


def solve_step_four(b1, b2, b3, b4, sym: StepFourSymbols):
    """Return (v, r, s1, s2); with no smooth unknown ``b2`` is ignored and r = 0."""
    rhs_all = (b1, b2, b3, b4)
    rhs = np.stack([rhs_all[u] for u in sym.unknowns])
    sol = idft2_real(solve_step_four_spectral(dft2(rhs), sym), sym.shape)
    if sym.has_smooth:
        return sol[0], sol[1], sol[2], sol[3]
    return sol[0], np.zeros_like(sol[0]), sol[1], sol[2]

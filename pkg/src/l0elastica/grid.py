"""Periodic finite differences, padding, smoothing and image metrics.

Images are 2-D float arrays of shape ``(M, N)``; axis 1 of the stencils is the
row index (numpy axis 0) and axis 2 the column index (numpy axis 1).  Vector
fields are arrays of shape ``(2, M, N)``.  All stencils wrap periodically.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage


def diff(img: np.ndarray, axis: int, direction: str = "forward", h: float = 1.0) -> np.ndarray:
    """One-sided periodic difference along stencil axis 1 or 2.

    forward:  (f(i+1) - f(i)) / h, the last entry wraps to (f(1) - f(M)) / h
    backward: (f(i) - f(i-1)) / h, the first entry wraps to (f(1) - f(M)) / h
    """
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis!r}")
    ax = axis - 1
    if direction == "forward":
        return (np.roll(img, -1, axis=ax) - img) / h
    if direction == "backward":
        return (img - np.roll(img, 1, axis=ax)) / h
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


def grad_forward(img: np.ndarray, h: float = 1.0) -> np.ndarray:
    return np.stack([diff(img, 1, "forward", h), diff(img, 2, "forward", h)])


def div_backward(vf: np.ndarray, h: float = 1.0) -> np.ndarray:
    return diff(vf[0], 1, "backward", h) + diff(vf[1], 2, "backward", h)


def laplacian(img: np.ndarray, h: float = 1.0) -> np.ndarray:
    """Five-point Laplacian, written as div_backward(grad_forward(img))."""
    return div_backward(grad_forward(img, h), h)


def magnitude(vf: np.ndarray) -> np.ndarray:
    return np.sqrt(vf[0] ** 2 + vf[1] ** 2)


def pad_symmetric(img: np.ndarray, width: int) -> np.ndarray:
    """Mirror-pad both axes, repeating the border pixel: (a,b,c) -> (a,a,b,c,c)."""
    if width < 0:
        raise ValueError("pad width must be non-negative")
    if width == 0:
        return np.array(img, dtype=float, copy=True)
    m, n = img.shape
    if width > m or width > n:
        # np.pad would silently start reflecting the reflection
        raise ValueError(f"pad width {width} exceeds image size {img.shape}")
    return np.pad(np.asarray(img, dtype=float), width, mode="symmetric")


def crop_pad(img: np.ndarray, width: int) -> np.ndarray:
    if width < 0:
        raise ValueError("pad width must be non-negative")
    m, n = img.shape[-2:]
    if m <= 2 * width or n <= 2 * width:
        raise ValueError(f"cannot crop {width} pixels from each side of a {m}x{n} image")
    if width == 0:
        return img.copy()
    return img[..., width:-width, width:-width].copy()


def gaussian_kernel1d(sigma: float, truncate: float = 4.0) -> np.ndarray:
    radius = int(math.ceil(truncate * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(img: np.ndarray, sigma_kernel: float = 1.0) -> np.ndarray:
    """Periodic convolution with a normalized Gaussian truncated at 4 sigma."""
    if sigma_kernel <= 0:
        raise ValueError("sigma_kernel must be positive")
    k = gaussian_kernel1d(sigma_kernel)
    out = ndimage.correlate1d(np.asarray(img, dtype=float), k, axis=0, mode="wrap")
    return ndimage.correlate1d(out, k, axis=1, mode="wrap")


def add_gaussian_noise(img: np.ndarray, sigma: float, seed: int = 0) -> np.ndarray:
    """Additive white Gaussian noise from a PCG64 generator seeded with ``seed``."""
    if sigma < 0:
        raise ValueError("noise sigma must be non-negative")
    img = np.asarray(img, dtype=float)
    if sigma == 0:
        return img.copy()
    rng = np.random.default_rng(seed)
    return img + sigma * rng.standard_normal(img.shape)


def psnr(ref: np.ndarray, est: np.ndarray) -> float:
    """PSNR in dB for intensities on [0, 1]: 10 log10(1 / MSE).

    Identical images give ``math.inf``.
    """
    ref = np.asarray(ref, dtype=float)
    est = np.asarray(est, dtype=float)
    if ref.shape != est.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {est.shape}")
    mse = float(np.mean((est - ref) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def stddev(img: np.ndarray) -> float:
    """Population standard deviation."""
    return float(np.std(img))


def linear_scale01(img: np.ndarray) -> np.ndarray:
    """Affine map onto [0, 1]; a constant image maps to 0.5 everywhere."""
    img = np.asarray(img, dtype=float)
    lo, hi = float(img.min()), float(img.max())
    if hi <= lo:
        return np.full_like(img, 0.5)
    return (img - lo) / (hi - lo)

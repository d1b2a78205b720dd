"""Structure + smooth + oscillation decomposition of grayscale images.

The structure part is regularized by an L0 gradient penalty plus squared
curvature of its level lines, the smooth part by the squared Laplacian, and
the oscillatory part by the H^-1 seminorm.  The minimization runs an operator
splitting scheme whose linear substeps are diagonalized by the FFT.
"""

from .driver import (
    DecompParams,
    DecompositionResult,
    DivergenceError,
    ModelVariant,
    apply_variant,
    decompose,
    energy_eval,
    init_state,
    preset_alpha_n,
)
from .grid import psnr, stddev

__all__ = [
    "DecompParams",
    "DecompositionResult",
    "DivergenceError",
    "ModelVariant",
    "apply_variant",
    "decompose",
    "energy_eval",
    "init_state",
    "preset_alpha_n",
    "psnr",
    "stddev",
]

__version__ = "0.1.0"

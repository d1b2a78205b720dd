"""Procedural test scenes: convex combinations of piecewise-constant masks
and smooth shading fields, all with values in [0, 1]."""

from __future__ import annotations

import numpy as np

MIN_SIZE = 64


def _coords(size: int) -> tuple[np.ndarray, np.ndarray]:
    # pixel centers on [-1, 1]
    t = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    return np.meshgrid(t, t, indexing="ij")


def cross_mask(size: int, arm_half_width: float = 0.16, arm_half_length: float = 0.62) -> np.ndarray:
    y, x = _coords(size)
    horiz = (np.abs(y) <= arm_half_width) & (np.abs(x) <= arm_half_length)
    vert = (np.abs(x) <= arm_half_width) & (np.abs(y) <= arm_half_length)
    return (horiz | vert).astype(float)


def radial_light(size: int, width: float = 0.45) -> np.ndarray:
    y, x = _coords(size)
    return np.exp(-(x**2 + y**2) / (2.0 * width**2))


def cross_light(size: int) -> np.ndarray:
    """White cross on a dark background lit by a soft light at the center."""
    return 0.1 + 0.5 * cross_mask(size) + 0.3 * radial_light(size)


def ellipse_wave(size: int) -> np.ndarray:
    """Ellipse silhouettes under a circular wave of light."""
    y, x = _coords(size)
    mask = np.zeros((size, size))
    for cx, cy, a, b in ((-0.45, -0.35, 0.3, 0.18), (0.4, 0.3, 0.22, 0.38), (-0.3, 0.5, 0.2, 0.15)):
        mask = np.maximum(mask, (((x - cx) / a) ** 2 + ((y - cy) / b) ** 2 <= 1.0).astype(float))
    rad = np.sqrt(x**2 + y**2)
    wave = 0.5 + 0.5 * np.cos(2.0 * np.pi * rad / 0.9)
    return 0.1 + 0.55 * mask + 0.3 * wave


def globe(size: int) -> np.ndarray:
    """A disc with a directional shade lit from the top left."""
    y, x = _coords(size)
    disc = ((x**2 + y**2) <= 0.6**2).astype(float)
    shade = 0.5 + 0.5 * np.clip(1.0 - np.sqrt((x + 0.45) ** 2 + (y + 0.45) ** 2) / 1.6, 0.0, 1.0)
    return 0.1 + 0.45 * disc + 0.4 * disc * shade + 0.05 * shade


def square_ring(size: int) -> np.ndarray:
    """A squared ring over a smooth diagonal shading."""
    y, x = _coords(size)
    outer = (np.abs(x) <= 0.6) & (np.abs(y) <= 0.6)
    inner = (np.abs(x) <= 0.3) & (np.abs(y) <= 0.3)
    ring = (outer & ~inner).astype(float)
    shade = 0.5 + 0.5 * np.sin(0.5 * np.pi * (x + y) / 2.0)
    return 0.1 + 0.5 * ring + 0.3 * shade


SCENES = {
    "cross-light": cross_light,
    "ellipse-wave": ellipse_wave,
    "globe": globe,
    "square-ring": square_ring,
}


def make_scene(name: str, size: int) -> np.ndarray:
    if name not in SCENES:
        raise ValueError(f"unknown scene {name!r}; choose from {sorted(SCENES)}")
    if size < MIN_SIZE:
        raise ValueError(f"scene size must be at least {MIN_SIZE}")
    return SCENES[name](size)

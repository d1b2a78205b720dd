"""Grayscale image I/O (PNG 8/16-bit, binary PGM) on float arrays in [0, 1]."""

from __future__ import annotations

import os

import numpy as np
from PIL import Image, UnidentifiedImageError

_EIGHT_BIT_MODES = ("L",)
_SIXTEEN_BIT_MODES = ("I;16", "I;16B", "I;16L", "I")


class ImageFormatError(ValueError):
    """The file is missing, unreadable or not a grayscale image."""


def read_image(path: str | os.PathLike) -> np.ndarray:
    """Load a grayscale PNG/PGM as float64 in [0, 1].

    8-bit files are divided by 255, 16-bit ones by 65535.
    """
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            data = np.array(im)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        raise ImageFormatError(f"cannot open {path}: {exc}") from exc
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError(f"{path} is not a readable image: {exc}") from exc
    if mode in _EIGHT_BIT_MODES:
        scale = 255.0
    elif mode in _SIXTEEN_BIT_MODES:
        scale = 65535.0
    else:
        raise ImageFormatError(f"{path}: expected a grayscale image, got mode {mode}")
    if data.ndim != 2:
        raise ImageFormatError(f"{path}: expected a 2-D image, got shape {data.shape}")
    return data.astype(float) / scale


def quantize(img: np.ndarray, bits: int = 16) -> np.ndarray:
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    top = 255 if bits == 8 else 65535
    dtype = np.uint8 if bits == 8 else np.uint16
    return np.round(np.clip(img, 0.0, 1.0) * top).astype(dtype)


def write_png(path: str | os.PathLike, img: np.ndarray, bits: int = 16) -> None:
    """Write ``img`` clamped to [0, 1] as a grayscale PNG."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    Image.fromarray(quantize(img, bits)).save(path, format="PNG")

"""Binary PGM (P5) export for weight filters, perturbations, and sample
grids. Grayscale only, 8-bit, deterministic bytes."""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .numerics import sign


def write_pgm(path, image: np.ndarray):
    """image: (H, W) uint8."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ShapeError(f"PGM image must be 2-D, got shape {image.shape}")
    if image.dtype != np.uint8:
        raise ShapeError(f"PGM image must be uint8, got {image.dtype}")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def to_gray(values: np.ndarray) -> np.ndarray:
    """Affine rescale from the array's own min/max to 0..255; a constant
    array maps to mid-gray."""
    values = np.asarray(values, dtype=np.float64)
    lo = values.min()
    hi = values.max()
    if hi == lo:
        return np.full(values.shape, 128, dtype=np.uint8)
    scaled = (values - lo) * (255.0 / (hi - lo))
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def sign_image(values: np.ndarray) -> np.ndarray:
    """Map sign to gray levels: -1 -> 0, 0 -> 128, +1 -> 255."""
    s = sign(np.asarray(values, dtype=np.float64))
    return np.where(s < 0, 0, np.where(s > 0, 255, 128)).astype(np.uint8)


def tile_grid(images, cols: int, pad: int = 1, pad_value: int = 0) -> np.ndarray:
    """Tile equally shaped (H, W) uint8 images into a grid, row-major, with
    `pad` pixels of padding between tiles and around the border."""
    images = [np.asarray(im) for im in images]
    if not images:
        raise ShapeError("nothing to tile")
    h, w = images[0].shape
    for im in images:
        if im.shape != (h, w) or im.dtype != np.uint8:
            raise ShapeError("all tiles must be equal-shape uint8 images")
    rows = (len(images) + cols - 1) // cols
    grid = np.full(
        (rows * h + pad * (rows + 1), cols * w + pad * (cols + 1)),
        pad_value,
        dtype=np.uint8,
    )
    for i, im in enumerate(images):
        r, c = divmod(i, cols)
        top = pad + r * (h + pad)
        left = pad + c * (w + pad)
        grid[top : top + h, left : left + w] = im
    return grid

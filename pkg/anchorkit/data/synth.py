"""
Procedural texture dataset.

Each image is a colour gradient plus a few gaussian blobs and one sinusoid
grating, clipped to [0, 1]. Image ``i`` only depends on (seed, split, i).
"""
import numpy as np

from ..autodiff import Rng
from .batch import ImageBatch

MAX_BLOBS = 4


def synth_image(size: int, rng: Rng) -> np.ndarray:
    coords = (np.arange(size, dtype=np.float64) + 0.5) / size - 0.5
    yy, xx = np.meshgrid(coords, coords, indexing="ij")

    base = rng.uniform(0.3, 0.7, (3, 1, 1))
    slope = rng.uniform(-0.4, 0.4, (3, 2, 1, 1))
    img = base + slope[:, 0] * yy + slope[:, 1] * xx

    for _ in range(int(rng.integers(1, MAX_BLOBS + 1))):
        cy, cx = rng.uniform(-0.5, 0.5, 2)
        width = rng.uniform(0.05, 0.25)
        amp = rng.uniform(-0.35, 0.35, (3, 1, 1))
        img = img + amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * width ** 2))

    theta, phase = rng.uniform(0.0, np.pi), rng.uniform(0.0, 2.0 * np.pi)
    freq = rng.uniform(1.0, 6.0)
    amp = rng.uniform(0.0, 0.15, (3, 1, 1))
    img = img + amp * np.sin(2.0 * np.pi * freq * (np.cos(theta) * xx + np.sin(theta) * yy) + phase)
    return np.clip(img, 0.0, 1.0)


def synth_dataset(n: int, size: int, seed: int, split: str = "train") -> ImageBatch:
    """``n`` procedural ``size`` x ``size`` RGB images."""
    if n < 1:
        raise ValueError(f"synth_dataset needs n >= 1, got {n}")
    root = Rng(seed).child(split)
    pixels = np.stack([synth_image(size, root.child(i)) for i in range(n)])
    return ImageBatch(pixels, tuple(f"synth:{seed}:{split}:{i}" for i in range(n)))

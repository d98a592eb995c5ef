"""Grid and seeded-random patch extraction."""
from typing import List, Optional, Tuple

from ..autodiff import Rng
from ..errors import GeometryError
from .batch import ImageBatch

DEFAULT_MULTIPLE = 4


def grid_origins(h: int, w: int, size: int, stride: int) -> List[Tuple[int, int]]:
    return [(y, x) for y in range(0, h - size + 1, stride) for x in range(0, w - size + 1, stride)]


def extract_patches(img: ImageBatch, size: int, stride: Optional[int] = None, seed: Optional[int] = None,
                    count: int = 1, multiple: int = DEFAULT_MULTIPLE) -> ImageBatch:
    """Square ``size`` patches from every image of ``img``.

    Without ``seed`` the patches tile a grid with step ``stride`` (default
    ``size``); with ``seed`` each image yields ``count`` uniformly placed crops.
    """
    _, h, w = img.image_shape
    if size < 1 or size > min(h, w):
        raise GeometryError(f"patch size {size} does not fit {h}x{w} images")
    if size % multiple:
        raise GeometryError(f"patch size {size} must be a multiple of the encoder stride {multiple}")
    stride = stride or size
    if stride < 1:
        raise GeometryError(f"patch stride must be >= 1, got {stride}")

    pixels, labels = [], []
    for i, (image, label) in enumerate(zip(img.pixels, img.labels)):
        if seed is None:
            origins = grid_origins(h, w, size, stride)
        else:
            rng = Rng(seed).child(i)
            ys = rng.integers(0, h - size + 1, count)
            xs = rng.integers(0, w - size + 1, count)
            origins = list(zip(ys.tolist(), xs.tolist()))
        for y, x in origins:
            pixels.append(image[:, y:y + size, x:x + size])
            labels.append(f"{label}@{y},{x}")
    return ImageBatch(pixels, tuple(labels))

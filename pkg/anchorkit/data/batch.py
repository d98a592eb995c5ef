"""Immutable image batches."""
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from ..autodiff import Tensor
from ..errors import GeometryError, ShapeError


@dataclass(frozen=True)
class ImageBatch:
    """Pixels [N, 3, H, W] in [0, 1] plus one provenance label per image."""
    pixels: np.ndarray
    labels: Tuple[str, ...]

    def __post_init__(self):
        pixels = np.array(self.pixels, dtype=np.float64, order="C", copy=True)
        if pixels.ndim != 4 or pixels.shape[1] != 3:
            raise ShapeError(f"ImageBatch needs [N, 3, H, W] pixels, got {pixels.shape}")
        if not np.all(np.isfinite(pixels)) or pixels.min(initial=0.0) < 0.0 or pixels.max(initial=0.0) > 1.0:
            raise ValueError("ImageBatch pixels must be finite and within [0, 1]")
        labels = tuple(str(label) for label in self.labels)
        if len(labels) != pixels.shape[0]:
            raise ValueError(f"{pixels.shape[0]} images but {len(labels)} labels")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return tuple(self.pixels.shape[1:])

    def tensor(self) -> Tensor:
        return Tensor(self.pixels)

    def take(self, indices: Sequence[int]) -> "ImageBatch":
        idx = np.asarray(indices, dtype=np.int64)
        return ImageBatch(self.pixels[idx], tuple(self.labels[i] for i in idx))

    def head(self, n: int) -> "ImageBatch":
        return self.take(range(min(n, len(self))))

    def require_multiple(self, stride: int) -> "ImageBatch":
        h, w = self.pixels.shape[2:]
        if h % stride or w % stride:
            raise GeometryError(f"images are {h}x{w}; height and width must be multiples of {stride}")
        return self

    @staticmethod
    def concat(batches: Iterable["ImageBatch"]) -> "ImageBatch":
        batches = list(batches)
        if not batches:
            raise ValueError("cannot concatenate zero batches")
        shapes = {b.image_shape for b in batches}
        if len(shapes) != 1:
            raise ShapeError(f"cannot concatenate batches of image shapes {sorted(shapes)}")
        labels = tuple(label for b in batches for label in b.labels)
        return ImageBatch(np.concatenate([b.pixels for b in batches]), labels)

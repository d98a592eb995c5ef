"""
Declarative network description.

A network is an ordered tuple of ``LayerSpec``s. Builders produce them,
``forward.run_layers`` interprets them, and the checkpoint header stores the
builder arguments so the same tuple can be rebuilt on load.
"""
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from ..config import DecoderKind
from ..errors import GeometryError


class LayerKind(str, Enum):
    CONV = "conv"
    TCONV = "tconv"
    GDN = "gdn"
    IGDN = "igdn"
    PRELU = "prelu"
    ATTENTION = "attention"
    FUSE = "fuse"
    SIGMOID = "sigmoid"
    AVG_POOL = "avg_pool"
    RESIDUAL = "residual"


# what a layer becomes when a network is mirrored
MIRRORED_KIND = {
    LayerKind.CONV: LayerKind.TCONV,
    LayerKind.TCONV: LayerKind.CONV,
    LayerKind.GDN: LayerKind.IGDN,
    LayerKind.IGDN: LayerKind.GDN,
}


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    name: str
    block: str
    channels: int = 0
    out_channels: int = 0
    kernel: int = 0
    stride: int = 1
    pad: int = 0
    output_padding: int = 0
    # residual blocks only
    branch: Tuple["LayerSpec", ...] = ()
    skip: Optional["LayerSpec"] = None
    post_sigmoid: bool = False

    def output_shape(self, shape: Tuple[int, int, int]) -> Tuple[int, int, int]:
        """(C, H, W) after this layer."""
        c, h, w = shape
        if self.kind == LayerKind.CONV:
            return (self.out_channels,
                    (h + 2 * self.pad - self.kernel) // self.stride + 1,
                    (w + 2 * self.pad - self.kernel) // self.stride + 1)
        if self.kind == LayerKind.TCONV:
            grow = lambda n: (n - 1) * self.stride - 2 * self.pad + self.kernel + self.output_padding
            return (self.out_channels, grow(h), grow(w))
        if self.kind == LayerKind.AVG_POOL:
            if h % self.kernel or w % self.kernel:
                raise GeometryError(f"{self.name}: pool {self.kernel} does not divide {h}x{w}")
            return (c, h // self.kernel, w // self.kernel)
        if self.kind == LayerKind.RESIDUAL:
            main = infer_shape(self.branch, shape)
            side = self.skip.output_shape(shape) if self.skip is not None else shape
            if main != side:
                raise GeometryError(f"{self.name}: branch {main} and skip {side} disagree")
            return main
        return shape


def infer_shape(layers, shape: Tuple[int, int, int]) -> Tuple[int, int, int]:
    for spec in layers:
        shape = spec.output_shape(shape)
        if min(shape) < 1:
            raise GeometryError(f"{spec.name} collapses the feature map to {shape}")
    return shape


def block_kinds(layers) -> List[Tuple[str, List[LayerKind]]]:
    """Layer kinds grouped by block, in network order."""
    grouped: List[Tuple[str, List[LayerKind]]] = []
    for spec in layers:
        if not grouped or grouped[-1][0] != spec.block:
            grouped.append((spec.block, []))
        grouped[-1][1].append(spec.kind)
    return grouped


@dataclass(frozen=True)
class DecoderVariant:
    """Decoder family plus the layer-count knob used for intra-group diversity."""
    kind: DecoderKind
    depth_scale: int = 1

    def __post_init__(self):
        if self.depth_scale < 1:
            raise ValueError(f"depth_scale must be >= 1, got {self.depth_scale}")
        object.__setattr__(self, "kind", DecoderKind(self.kind))

    @property
    def label(self) -> str:
        return self.kind.value if self.depth_scale == 1 else f"{self.kind.value}x{self.depth_scale}"

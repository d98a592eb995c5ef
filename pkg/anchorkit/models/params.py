"""Parameter container shared by encoders and decoders."""
import hashlib
from dataclasses import dataclass, replace
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from ..autodiff import Tensor
from ..errors import CheckpointError
from .spec import DecoderVariant, LayerSpec

ENCODER = "encoder"
DECODER = "decoder"


@dataclass
class ModelParams:
    """Ordered layer-path -> Tensor map plus the architecture it belongs to.

    ``variant`` is None for the encoder. A frozen model carries the checksum
    taken when it was frozen; optimizers refuse to touch it.
    """
    role: str
    tensors: Dict[str, Tensor]
    layers: Tuple[LayerSpec, ...]
    image_shape: Tuple[int, int, int]
    latent_shape: Tuple[int, int, int]
    rate: float
    widths: Tuple[int, int]
    seed: int
    variant: Optional[DecoderVariant] = None
    frozen: bool = False
    frozen_checksum: Optional[str] = None

    @property
    def name(self) -> str:
        return ENCODER if self.variant is None else self.variant.label

    @property
    def image_size(self) -> int:
        return int(np.prod(self.image_shape))

    @property
    def latent_size(self) -> int:
        return int(np.prod(self.latent_shape))

    @property
    def param_count(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def parameters(self) -> List[Tensor]:
        return list(self.tensors.values())

    def layer_params(self, prefix: str) -> Dict[str, Tensor]:
        """Tensors under ``prefix.`` keyed by the remaining suffix."""
        head = prefix + "."
        return {k[len(head):]: t for k, t in self.tensors.items() if k.startswith(head)}

    def checksum(self) -> str:
        """SHA-256 over names, shapes and little-endian float64 bytes."""
        h = hashlib.sha256()
        for name, t in self.tensors.items():
            h.update(name.encode("utf-8"))
            h.update(repr(t.shape).encode("ascii"))
            h.update(t.data.astype("<f8").tobytes())
        return h.hexdigest()

    def state(self) -> Dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.tensors.items()}

    def load_state(self, state: Mapping[str, np.ndarray]) -> None:
        if list(state) != list(self.tensors):
            missing = sorted(set(self.tensors) - set(state))
            extra = sorted(set(state) - set(self.tensors))
            raise CheckpointError(f"{self.name}: tensor names differ (missing {missing}, unexpected {extra})")
        for k, t in self.tensors.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != t.shape:
                raise CheckpointError(f"{self.name}.{k}: stored shape {arr.shape} != expected {t.shape}")
            t.data = arr.copy()

    def copy(self) -> "ModelParams":
        tensors = {k: Tensor(t.data.copy(), requires_grad=t.requires_grad, name=t.name)
                   for k, t in self.tensors.items()}
        return replace(self, tensors=tensors)

    def frozen_copy(self) -> "ModelParams":
        tensors = {k: Tensor(t.data.copy(), requires_grad=False, name=t.name)
                   for k, t in self.tensors.items()}
        out = replace(self, tensors=tensors, frozen=True)
        out.frozen_checksum = out.checksum()
        return out

    def verify_frozen(self) -> bool:
        return self.frozen and self.frozen_checksum == self.checksum()

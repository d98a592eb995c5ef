"""
Tensor, tape and reverse-mode backward pass.

Graphs are define-by-run: every primitive applied while a ``Tape`` is active
and at least one operand requires a gradient is appended to that tape. The
tape order is a topological order of the graph, so ``backward`` simply walks
it in reverse.
"""
import logging
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import TapeError

logger = logging.getLogger(__name__)

VJP = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar("anchorkit_active_tape", default=None)


class Tensor:
    """Dense float64 array with an optional gradient.

    ``data`` is a C-contiguous numpy array, i.e. flat row-major storage plus
    shape metadata.
    """

    __slots__ = ("data", "requires_grad", "grad", "name")
    __array_priority__ = 100.0

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64, order="C")
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        if self.size != 1:
            raise TapeError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # operator sugar; the primitives live in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from . import ops
        return ops.div(other, self)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)


def as_tensor(value) -> Tensor:
    """Wrap constants; tensors pass through untouched."""
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass
class Node:
    """One recorded primitive application."""
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    vjp: VJP


class Tape:
    """Ordered record of primitive applications for one forward pass."""

    def __init__(self):
        self.nodes: List[Node] = []
        self._produced: Dict[int, int] = {}
        self._tokens: list = []

    def __enter__(self) -> "Tape":
        self._tokens.append(_ACTIVE_TAPE.set(self))
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _ACTIVE_TAPE.reset(self._tokens.pop())

    def record(self, node: Node) -> None:
        self._produced[id(node.output)] = len(self.nodes)
        self.nodes.append(node)

    def produced(self, tensor: Tensor) -> bool:
        idx = self._produced.get(id(tensor))
        return idx is not None and self.nodes[idx].output is tensor

    def clear(self) -> None:
        """Drop every node and the intermediates they keep alive."""
        self.nodes.clear()
        self._produced.clear()

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[Node]:
        return iter(self.nodes)


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


class paused:
    """Context manager that stops recording on the active tape."""

    def __enter__(self):
        self._token = _ACTIVE_TAPE.set(None)
        return self

    def __exit__(self, exc_type, exc, tb):
        _ACTIVE_TAPE.reset(self._token)


def apply_op(op: str, data: np.ndarray, inputs: Sequence[Tensor], vjp: VJP) -> Tensor:
    """Create the output of a primitive and record it when differentiable.

    ``vjp`` maps the upstream gradient of the output to one gradient (or None)
    per input, each shaped like that input.
    """
    requires = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=requires)
    tape = _ACTIVE_TAPE.get()
    if requires and tape is not None:
        tape.record(Node(op=op, inputs=tuple(inputs), output=out, vjp=vjp))
    return out


class GradientMap(dict):
    """Gradients keyed by the leaf tensor they belong to (identity hashed)."""

    def of(self, tensor: Tensor) -> np.ndarray:
        grad = self.get(tensor)
        return np.zeros_like(tensor.data) if grad is None else grad


def backward(loss: Tensor, tape: Tape) -> GradientMap:
    """Reverse sweep over ``tape`` seeded with d(loss)/d(loss) = 1.

    Returns gradients for every leaf tensor with ``requires_grad`` that took
    part in the recorded graph; intermediate gradients are discarded. Each
    leaf's ``grad`` field is overwritten with its gradient.
    """
    if loss.size != 1:
        raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not tape.produced(loss):
        raise TapeError("loss is detached: it was not produced by an op recorded on this tape")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: Dict[int, Tensor] = {}
    for node in reversed(tape.nodes):
        for t in node.inputs:
            if t.requires_grad and not tape.produced(t):
                leaves.setdefault(id(t), t)
        upstream = grads.pop(id(node.output), None)
        if upstream is None:
            continue
        for t, g in zip(node.inputs, node.vjp(upstream)):
            if g is None or not t.requires_grad:
                continue
            if g.shape != t.data.shape:
                raise TapeError(f"op {node.op!r} returned gradient of shape {g.shape} for input {t.shape}")
            key = id(t)
            grads[key] = grads[key] + g if key in grads else g

    result = GradientMap()
    for key, leaf in leaves.items():
        g = grads.get(key)
        g = np.zeros_like(leaf.data) if g is None else np.array(g, dtype=np.float64)
        leaf.grad = g
        result[leaf] = g
    logger.debug(f"backward over {len(tape)} nodes -> {len(result)} leaf gradients")
    return result

"""Adam with bias correction over ``ModelParams``."""
from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from ..autodiff import GradientMap
from ..errors import FrozenModelError, ShapeError
from ..models import ModelParams


@dataclass
class AdamState:
    """First/second moments per parameter name plus the step counter."""
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ModelParams, beta1: float = 0.9, beta2: float = 0.999,
                   eps: float = 1e-8) -> "AdamState":
        zeros = {k: np.zeros_like(t.data) for k, t in params.tensors.items()}
        return cls(m=zeros, v={k: z.copy() for k, z in zeros.items()}, beta1=beta1, beta2=beta2, eps=eps)


def named_grads(params: ModelParams, grads: GradientMap) -> Dict[str, np.ndarray]:
    """Gradient per parameter name; parameters the loss never reached get zeros."""
    return {k: grads.of(t) for k, t in params.tensors.items()}


def adam_step(params: ModelParams, grads: Mapping[str, np.ndarray], state: AdamState, lr: float) -> ModelParams:
    """One Adam update of ``params`` in place; missing gradients count as zero."""
    if params.frozen:
        raise FrozenModelError(f"{params.name} is frozen; refusing an optimizer step")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for name, t in params.tensors.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(t.data)
        elif g.shape != t.shape:
            raise ShapeError(f"gradient for {params.name}.{name} has shape {g.shape}, parameter {t.shape}")
        m = b1 * state.m.setdefault(name, np.zeros_like(t.data)) + (1.0 - b1) * g
        v = b2 * state.v.setdefault(name, np.zeros_like(t.data)) + (1.0 - b2) * g * g
        state.m[name], state.v[name] = m, v
        update = lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        # rebind instead of mutating: tensors may alias arrays held elsewhere
        t.data = t.data - update
    return params

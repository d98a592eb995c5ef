"""Central finite-difference gradient checks."""
from typing import Callable

import numpy as np

from .tensor import Tape, Tensor, backward


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-5, floor: float = 1e-6) -> float:
    """Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, floor).

    ``floor`` keeps coordinates whose true gradient is ~0 from turning
    finite-difference roundoff into a large relative error.
    """
    base = np.array(x.data, dtype=np.float64)
    probe = Tensor(base.copy(), requires_grad=True)
    with Tape() as tape:
        loss = f(probe)
        analytic = backward(loss, tape).of(probe).reshape(-1)
    tape.clear()

    numeric = np.zeros(base.size)
    flat = base.reshape(-1)
    for i in range(flat.size):
        shifted = flat.copy()
        shifted[i] = flat[i] + eps
        up = f(Tensor(shifted.reshape(base.shape))).item()
        shifted[i] = flat[i] - eps
        down = f(Tensor(shifted.reshape(base.shape))).item()
        numeric[i] = (up - down) / (2.0 * eps)

    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))

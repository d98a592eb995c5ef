"""Parameter initializers (fan-in scaled uniform, GDN and PReLU constants)."""
from typing import Dict

import numpy as np

from ..autodiff import Rng
from .gdn import POSITIVE_FLOOR, inverse_positive

PRELU_SLOPE_INIT = 0.25
GDN_BETA_INIT = 1.0
GDN_GAMMA_DIAG_INIT = 0.1
GDN_GAMMA_OFF_DIAG_INIT = 1e-6


def he_uniform(shape, fan_in: float, rng: Rng) -> np.ndarray:
    bound = np.sqrt(6.0 / max(fan_in, 1.0))
    return rng.uniform(-bound, bound, tuple(shape))


def conv_params(in_c: int, out_c: int, k: int, rng: Rng) -> Dict[str, np.ndarray]:
    return {
        "kernel": he_uniform((out_c, in_c, k, k), in_c * k * k, rng),
        "bias": np.zeros(out_c),
    }


def tconv_params(in_c: int, out_c: int, k: int, stride: int, rng: Rng) -> Dict[str, np.ndarray]:
    # each output pixel sees roughly in_c * k^2 / stride^2 taps
    return {
        "kernel": he_uniform((in_c, out_c, k, k), in_c * k * k / (stride * stride), rng),
        "bias": np.zeros(out_c),
    }


def dense_params(in_f: int, out_f: int, rng: Rng) -> Dict[str, np.ndarray]:
    return {
        "weight": he_uniform((out_f, in_f), in_f, rng),
        "bias": np.zeros(out_f),
    }


def gdn_params(c: int) -> Dict[str, np.ndarray]:
    gamma = np.full((c, c), GDN_GAMMA_OFF_DIAG_INIT)
    np.fill_diagonal(gamma, GDN_GAMMA_DIAG_INIT)
    return {
        "beta": inverse_positive(np.full(c, GDN_BETA_INIT), POSITIVE_FLOOR),
        "gamma": inverse_positive(gamma, 0.0),
    }


def prelu_params(c: int) -> Dict[str, np.ndarray]:
    return {"slope": np.full(c, PRELU_SLOPE_INIT)}


def attention_params(c: int, rng: Rng, reduction: int = 2) -> Dict[str, np.ndarray]:
    hidden = max(c // reduction, 1)
    fc1 = dense_params(c + 1, hidden, rng.child("fc1"))
    fc2 = dense_params(hidden, c, rng.child("fc2"))
    return {
        "fc1.weight": fc1["weight"],
        "fc1.bias": fc1["bias"],
        "slope": np.full(hidden, PRELU_SLOPE_INIT),
        "fc2.weight": fc2["weight"],
        "fc2.bias": fc2["bias"],
    }


def fuse_params(c: int, rng: Rng) -> Dict[str, np.ndarray]:
    return dense_params(c + 1, c, rng)

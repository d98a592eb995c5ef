"""
Generalized divisive normalization.

    y_i = x_i / sqrt(beta_i + sum_j gamma_ij * x_j^2)

applied per spatial position; the inverse form multiplies instead of
dividing. Learnable parameters are stored unconstrained and mapped through
``positive`` at use time so optimizer steps cannot break beta > 0, gamma >= 0.
"""
import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..errors import ShapeError
from .basic import LayerParams

POSITIVE_FLOOR = 1e-6


def positive(raw: Tensor, floor: float = POSITIVE_FLOOR) -> Tensor:
    """softplus(raw) + floor."""
    return ad.add(ad.softplus(raw), floor)


def inverse_positive(value: np.ndarray, floor: float = POSITIVE_FLOOR) -> np.ndarray:
    """Raw parameter whose ``positive`` image is ``value`` (value > floor)."""
    v = np.asarray(value, dtype=np.float64) - floor
    return v + np.log(-np.expm1(-v))


def _norm_pool(x: Tensor, beta: Tensor, gamma: Tensor) -> Tensor:
    c = x.shape[1]
    if beta.shape != (c,) or gamma.shape != (c, c):
        raise ShapeError(f"gdn: beta {beta.shape} / gamma {gamma.shape} do not match {c} channels")
    # sum_j gamma_ij x_j^2 is a 1x1 convolution of x^2 with kernel gamma
    mixed = ad.conv2d(ad.square(x), ad.reshape(gamma, (c, c, 1, 1)), beta)
    return ad.sqrt(mixed)


def gdn(x: Tensor, beta: Tensor, gamma: Tensor) -> Tensor:
    """Divisive normalization with effective (already positive) beta, gamma."""
    return ad.div(x, _norm_pool(x, beta, gamma))


def igdn(x: Tensor, beta: Tensor, gamma: Tensor) -> Tensor:
    """Multiplicative mirror of ``gdn``."""
    return ad.mul(x, _norm_pool(x, beta, gamma))


def gdn_layer(x: Tensor, p: LayerParams, inverse: bool = False) -> Tensor:
    """GDN/IGDN with raw learnable ``beta``/``gamma`` parameters."""
    beta = positive(p["beta"])
    gamma = ad.softplus(p["gamma"])
    return igdn(x, beta, gamma) if inverse else gdn(x, beta, gamma)

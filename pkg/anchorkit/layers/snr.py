"""
SNR-conditioned channel scaling.

Both blocks squeeze features to per-channel means, append the normalized SNR
(dB / 20) and turn the result into one multiplicative factor per channel.
"""
import math

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..config import SNR_NORMALIZER_DB
from ..errors import ShapeError
from .basic import LayerParams, dense


def _squeeze_with_snr(features: Tensor, snr_db: float) -> Tensor:
    if features.ndim != 4:
        raise ShapeError(f"expected [N, C, H, W] features, got {features.shape}")
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    pooled = ad.reduce_mean(features, axis=(2, 3))
    snr = np.full((features.shape[0], 1), snr_db / SNR_NORMALIZER_DB)
    return ad.concat([pooled, snr], axis=1)


def _scale_channels(features: Tensor, factors: Tensor) -> Tensor:
    n, c = factors.shape
    return ad.mul(features, ad.reshape(factors, (n, c, 1, 1)))


def snr_fuse_dense(features: Tensor, snr_db: float, p: LayerParams) -> Tensor:
    """Scale channels by 2 * sigmoid(dense([pooled || snr])), factors in (0, 2)."""
    stats = _squeeze_with_snr(features, snr_db)
    factors = ad.mul(ad.sigmoid(dense(stats, p)), 2.0)
    return _scale_channels(features, factors)


def channel_attention(features: Tensor, snr_db: float, p: LayerParams) -> Tensor:
    """Squeeze-excitation with SNR: dense -> PReLU -> dense -> sigmoid gates in (0, 1).

    ``p`` holds ``fc1.weight``, ``fc1.bias``, ``slope``, ``fc2.weight``, ``fc2.bias``.
    """
    stats = _squeeze_with_snr(features, snr_db)
    hidden = dense(stats, {"weight": p["fc1.weight"], "bias": p["fc1.bias"]})
    hidden = ad.prelu(hidden, p["slope"], axis=1)
    gates = ad.sigmoid(dense(hidden, {"weight": p["fc2.weight"], "bias": p["fc2.bias"]}))
    return _scale_channels(features, gates)

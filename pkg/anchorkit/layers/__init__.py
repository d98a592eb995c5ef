"""
Layer vocabulary for the encoder and decoder families.
"""
from .basic import LayerParams, avg_pool, conv2d, dense, prelu, sigmoid, tconv2d
from .gdn import gdn, gdn_layer, igdn, inverse_positive, positive
from .snr import channel_attention, snr_fuse_dense

__all__ = [
    "LayerParams",
    "avg_pool",
    "channel_attention",
    "conv2d",
    "dense",
    "gdn",
    "gdn_layer",
    "igdn",
    "inverse_positive",
    "positive",
    "prelu",
    "sigmoid",
    "snr_fuse_dense",
    "tconv2d",
]

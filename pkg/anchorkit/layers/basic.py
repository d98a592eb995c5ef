"""
Convolution, dense, activation and pooling layers.

A layer is a plain function of its input and a ``LayerParams`` mapping of
short names (``kernel``, ``bias``, ``weight``, ``slope``) to tensors.
"""
from typing import Mapping

from .. import autodiff as ad
from ..autodiff import Tensor

LayerParams = Mapping[str, Tensor]


def conv2d(x: Tensor, p: LayerParams, stride: int = 1, pad: int = 0) -> Tensor:
    """kernel [out_c, in_c, kh, kw]; H' = floor((H + 2 pad - kh) / stride) + 1."""
    return ad.conv2d(x, p["kernel"], p["bias"], stride=stride, pad=pad)


def tconv2d(x: Tensor, p: LayerParams, stride: int = 1, pad: int = 0, output_padding: int = 0) -> Tensor:
    """kernel [in_c, out_c, kh, kw]; H' = (H - 1) stride - 2 pad + kh (+ output_padding)."""
    return ad.conv_transpose2d(x, p["kernel"], p["bias"], stride=stride, pad=pad,
                               output_padding=output_padding)


def dense(x: Tensor, p: LayerParams) -> Tensor:
    """x [N, in] -> [N, out] with weight [out, in]."""
    return ad.add(ad.matmul(x, ad.transpose(p["weight"], (1, 0))), p["bias"])


def prelu(x: Tensor, slope: Tensor) -> Tensor:
    return ad.prelu(x, slope, axis=1)


def sigmoid(x: Tensor) -> Tensor:
    return ad.sigmoid(x)


def avg_pool(x: Tensor, k: int) -> Tensor:
    return ad.avg_pool2d(x, k)

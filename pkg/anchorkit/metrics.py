"""
Image quality metrics: PSNR, SSIM and MS-SSIM.

Images are arrays (or Tensors) shaped [H, W], [C, H, W] or [N, C, H, W] with
pixels in [0, max_val]. SSIM-family metrics are computed per channel and
averaged over channels (and images).
"""
import logging
import math
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .autodiff import Tensor
from .config import MsSsimConfig
from .errors import ShapeError

logger = logging.getLogger(__name__)

PSNR_CAP_DB = 200.0


def _array(x) -> np.ndarray:
    return np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)


def psnr(reference, reconstruction, max_val: float = 1.0) -> float:
    """10 log10(max_val^2 / mse); identical images give the 200 dB cap."""
    from .training.loss import mse_loss

    if max_val <= 0:
        raise ValueError(f"max_val must be > 0, got {max_val}")
    mse = mse_loss(Tensor(_array(reference)), Tensor(_array(reconstruction))).item()
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(max_val ** 2 / mse), PSNR_CAP_DB)


def psnr_per_image(reference, reconstruction, max_val: float = 1.0) -> np.ndarray:
    """PSNR of each image in a [N, ...] batch."""
    a, b = _array(reference), _array(reconstruction)
    if a.shape != b.shape:
        raise ShapeError(f"psnr: shapes {a.shape} and {b.shape} differ")
    return np.array([psnr(x, y, max_val) for x, y in zip(a, b)])


@lru_cache(maxsize=8)
def _gaussian(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _filter(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Separable 'valid' gaussian filter over the last two axes."""
    k = g.size
    rows = sliding_window_view(x, k, axis=-1) @ g
    return sliding_window_view(rows, k, axis=-2) @ g


def _as_planes(x: np.ndarray) -> np.ndarray:
    """Stack every 2-d plane along a leading axis."""
    if x.ndim < 2:
        raise ShapeError(f"images need at least 2 dimensions, got shape {x.shape}")
    return x.reshape((-1,) + x.shape[-2:])


def _ssim_terms(x: np.ndarray, y: np.ndarray, cfg: MsSsimConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Per-plane (mean SSIM, mean contrast-structure) for [P, H, W] stacks."""
    if min(x.shape[-2:]) < cfg.window_size:
        raise ShapeError(f"image {x.shape[-2]}x{x.shape[-1]} is smaller than the {cfg.window_size}-pixel window")
    g = _gaussian(cfg.window_size, cfg.sigma)
    mu_x, mu_y = _filter(x, g), _filter(y, g)
    var_x = _filter(x * x, g) - mu_x ** 2
    var_y = _filter(y * y, g) - mu_y ** 2
    cov = _filter(x * y, g) - mu_x * mu_y
    c1, c2 = cfg.c1, cfg.c2
    cs_map = (2.0 * cov + c2) / (var_x + var_y + c2)
    lum_map = (2.0 * mu_x * mu_y + c1) / (mu_x ** 2 + mu_y ** 2 + c1)
    return (lum_map * cs_map).mean(axis=(-2, -1)), cs_map.mean(axis=(-2, -1))


def _pair(reference, reconstruction) -> Tuple[np.ndarray, np.ndarray]:
    a, b = _array(reference), _array(reconstruction)
    if a.shape != b.shape:
        raise ShapeError(f"shapes {a.shape} and {b.shape} differ")
    return a, b


def ssim(reference, reconstruction, cfg: Optional[MsSsimConfig] = None) -> float:
    """Mean windowed SSIM, averaged over channels; in [-1, 1]."""
    cfg = cfg or MsSsimConfig()
    a, b = _pair(reference, reconstruction)
    s, _ = _ssim_terms(_as_planes(a), _as_planes(b), cfg)
    return float(s.mean())


def usable_scales(height: int, width: int, cfg: MsSsimConfig) -> int:
    """Largest scale count <= cfg.scales with min(H, W) >= window * 2^(scales-1)."""
    side = min(height, width)
    if side < cfg.window_size:
        raise ShapeError(f"image {height}x{width} is smaller than the {cfg.window_size}-pixel window")
    scales = cfg.scales
    while scales > 1 and side < cfg.window_size * 2 ** (scales - 1):
        scales -= 1
    return scales


def _downsample(x: np.ndarray) -> np.ndarray:
    h, w = x.shape[-2] // 2 * 2, x.shape[-1] // 2 * 2
    x = x[..., :h, :w]
    return 0.25 * (x[..., 0::2, 0::2] + x[..., 1::2, 0::2] + x[..., 0::2, 1::2] + x[..., 1::2, 1::2])


def ms_ssim_planes(reference, reconstruction, cfg: Optional[MsSsimConfig] = None) -> np.ndarray:
    """MS-SSIM of every 2-d plane; returns shape [P]."""
    cfg = cfg or MsSsimConfig()
    a, b = _pair(reference, reconstruction)
    x, y = _as_planes(a), _as_planes(b)
    scales = usable_scales(x.shape[-2], x.shape[-1], cfg)
    weights = np.asarray(cfg.weights[:scales], dtype=np.float64)
    weights = weights / weights.sum()
    if scales < cfg.scales:
        logger.debug(f"ms_ssim: {x.shape[-2]}x{x.shape[-1]} images support {scales} of {cfg.scales} scales")

    value = np.ones(x.shape[0])
    for j in range(scales):
        s, cs = _ssim_terms(x, y, cfg)
        if j == scales - 1:
            value *= np.maximum(s, 0.0) ** weights[j]
        else:
            # negative contrast-structure has no real fractional power
            value *= np.maximum(cs, 0.0) ** weights[j]
            x, y = _downsample(x), _downsample(y)
    return value


def ms_ssim(reference, reconstruction, cfg: Optional[MsSsimConfig] = None) -> float:
    """Multi-scale SSIM in [0, 1], averaged over channels and images."""
    return float(ms_ssim_planes(reference, reconstruction, cfg).mean())


def ms_ssim_per_image(reference, reconstruction, cfg: Optional[MsSsimConfig] = None) -> np.ndarray:
    """MS-SSIM of each image of a [N, C, H, W] batch (channel mean)."""
    a, b = _pair(reference, reconstruction)
    if a.ndim != 4:
        raise ShapeError(f"expected [N, C, H, W], got {a.shape}")
    return ms_ssim_planes(a, b, cfg).reshape(a.shape[0], a.shape[1]).mean(axis=1)

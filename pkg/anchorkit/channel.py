"""
Analog wireless channel Y = XH + N.

Latents are handled per block: a tensor [N, ...] carries N transmitted blocks
(one per image), a 1-d tensor is a single block. AWGN is real-valued; for
Rayleigh fading consecutive real pairs form complex symbols and every block
gets one complex gain h = (a + ib) / sqrt(2).
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import autodiff as ad
from .autodiff import Rng, Tensor
from .config import ChannelConfig, ChannelKind
from .errors import ChannelError, DeepFadeError

logger = logging.getLogger(__name__)

SNR_CAP_DB = 200.0
DEEP_FADE_THRESHOLD = 1e-6
MAX_FADE_RESAMPLES = 16


@dataclass(frozen=True)
class FadingDraw:
    """Complex gain per block; arrays of shape (n_blocks,)."""
    h_re: np.ndarray
    h_im: np.ndarray

    @classmethod
    def constant(cls, re: float, im: float = 0.0, blocks: int = 1) -> "FadingDraw":
        return cls(np.full(blocks, float(re)), np.full(blocks, float(im)))

    @property
    def magnitude_sq(self) -> np.ndarray:
        return self.h_re ** 2 + self.h_im ** 2

    def __len__(self) -> int:
        return int(self.h_re.shape[0])


def _as_blocks(x: Tensor) -> Tuple[Tensor, Tuple[int, ...]]:
    if x.ndim == 0 or x.size == 0:
        raise ChannelError(f"latent must be non-empty and at least 1-d, got shape {x.shape}")
    n = 1 if x.ndim == 1 else x.shape[0]
    return ad.reshape(x, (n, x.size // n)), x.shape


def power_normalize(x: Tensor) -> Tensor:
    """Scale each block to mean power 1: x * sqrt(k / sum(x^2))."""
    blocks, shape = _as_blocks(x)
    k = blocks.shape[1]
    energy = ad.reduce_sum(ad.square(blocks), axis=1, keepdims=True)
    if np.any(energy.data == 0.0):
        dead = np.flatnonzero(energy.data[:, 0] == 0.0).tolist()
        raise ChannelError(f"cannot power-normalize all-zero latent block(s) {dead}")
    scale = ad.mul(ad.power(energy, -0.5), math.sqrt(k))
    return ad.reshape(ad.mul(blocks, scale), shape)


def snr_to_sigma(snr_db: float) -> float:
    """Per-component noise std under unit signal power: 10^(-snr/20)."""
    return 10.0 ** (-snr_db / 20.0)


def _sigma(cfg: ChannelConfig) -> float:
    return 0.0 if cfg.noiseless else snr_to_sigma(cfg.snr_db)


def awgn_transmit(x: Tensor, cfg: ChannelConfig, rng: Rng) -> Tensor:
    """y = x + n, n ~ N(0, sigma^2); dy/dx is the identity."""
    noise = rng.normal(x.shape, std=_sigma(cfg))
    return ad.add(x, noise)


def _rotate_pairs(x: Tensor, re: np.ndarray, im: np.ndarray) -> Tensor:
    """Complex multiply of interleaved (re, im) pairs by a per-block gain.

    x is [N, k]; re/im are [N]. Linear in x, so the VJP multiplies by the
    conjugate gain.
    """
    n, k = x.shape
    pairs = x.data.reshape(n, k // 2, 2)
    a = re.reshape(n, 1)
    b = im.reshape(n, 1)
    out = np.empty_like(pairs)
    out[..., 0] = a * pairs[..., 0] - b * pairs[..., 1]
    out[..., 1] = a * pairs[..., 1] + b * pairs[..., 0]

    def vjp(g):
        gp = g.reshape(n, k // 2, 2)
        gx = np.empty_like(gp)
        gx[..., 0] = a * gp[..., 0] + b * gp[..., 1]
        gx[..., 1] = a * gp[..., 1] - b * gp[..., 0]
        return (gx.reshape(n, k),)

    return ad.apply_op("rotate_pairs", out.reshape(n, k), (x,), vjp)


def draw_fading(blocks: int, rng: Rng) -> FadingDraw:
    h = rng.normal((blocks, 2), std=1.0 / math.sqrt(2.0))
    return FadingDraw(h[:, 0].copy(), h[:, 1].copy())


def rayleigh_transmit(x: Tensor, cfg: ChannelConfig, rng: Rng,
                      fading: Optional[FadingDraw] = None) -> Tuple[Tensor, FadingDraw]:
    """y = h x + n over complex symbols; returns real-interleaved y and h.

    ``fading`` forces the gain (one entry per block) instead of drawing it.
    """
    blocks, shape = _as_blocks(x)
    n, k = blocks.shape
    if k % 2:
        raise ChannelError(f"Rayleigh transmission pairs reals into complex symbols; latent length {k} is odd")
    h = fading if fading is not None else draw_fading(n, rng.child("fading"))
    if len(h) != n:
        raise ChannelError(f"fading draw has {len(h)} gains for {n} blocks")
    faded = _rotate_pairs(blocks, h.h_re, h.h_im)
    noise = rng.child("noise").normal(faded.shape, std=_sigma(cfg))
    return ad.reshape(ad.add(faded, noise), shape), h


def equalize(y: Tensor, h: FadingDraw) -> Tensor:
    """Perfect-CSI complex division y / h per symbol."""
    mag = h.magnitude_sq
    weak = np.flatnonzero(np.sqrt(mag) < DEEP_FADE_THRESHOLD)
    if weak.size:
        raise DeepFadeError(f"deep fade on block(s) {weak.tolist()}: |h| < {DEEP_FADE_THRESHOLD}",
                            blocks=weak.tolist())
    blocks, shape = _as_blocks(y)
    return ad.reshape(_rotate_pairs(blocks, h.h_re / mag, -h.h_im / mag), shape)


def transmit(x: Tensor, cfg: ChannelConfig, rng: Rng) -> Tensor:
    """Full link used by training and evaluation: normalize, send, equalize.

    A deep fade resamples the channel from the next substream, so the result
    stays a deterministic function of the seed.
    """
    z = power_normalize(x)
    if cfg.kind == ChannelKind.AWGN:
        return awgn_transmit(z, cfg, rng)
    for attempt in range(MAX_FADE_RESAMPLES):
        stream = rng if attempt == 0 else rng.child("resample", attempt)
        y, h = rayleigh_transmit(z, cfg, stream)
        if not cfg.equalize:
            return y
        try:
            return equalize(y, h)
        except DeepFadeError as e:
            from . import telemetry
            telemetry.deep_fade_resamples.inc()
            logger.warning(f"{e}; resampling channel (attempt {attempt + 1})")
    raise DeepFadeError(f"deep fade persisted over {MAX_FADE_RESAMPLES} resamples")


def measure_empirical_snr(x, y) -> float:
    """10 log10(sum x^2 / sum (y - x)^2), capped at 200 dB."""
    xd = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64).reshape(-1)
    yd = np.asarray(y.data if isinstance(y, Tensor) else y, dtype=np.float64).reshape(-1)
    if xd.shape != yd.shape:
        raise ChannelError(f"measure_empirical_snr: lengths {xd.size} and {yd.size} differ")
    noise = float(np.sum((yd - xd) ** 2))
    signal = float(np.sum(xd ** 2))
    if noise == 0.0:
        return SNR_CAP_DB
    if signal == 0.0:
        return -SNR_CAP_DB
    return min(10.0 * math.log10(signal / noise), SNR_CAP_DB)

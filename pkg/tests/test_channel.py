"""
Unit and statistical tests for the AWGN / Rayleigh channel.
"""
from unittest.mock import patch

import numpy as np
import pytest

from anchorkit import autodiff as ad
from anchorkit import telemetry
from anchorkit.autodiff import Rng, Tape, Tensor, backward, grad_check
from anchorkit.channel import (
    FadingDraw,
    awgn_transmit,
    draw_fading,
    equalize,
    measure_empirical_snr,
    power_normalize,
    rayleigh_transmit,
    snr_to_sigma,
    transmit,
)
from anchorkit.config import ChannelConfig, ChannelKind
from anchorkit.errors import ChannelError, DeepFadeError

SNRS = [1.0, 4.0, 7.0, 10.0, 13.0]


def test_power_normalize_gives_unit_power_per_block():
    x = Tensor(np.random.default_rng(0).normal(size=(3, 2, 4, 4)) * 5.0)
    z = power_normalize(x).data.reshape(3, -1)
    np.testing.assert_allclose(np.mean(z ** 2, axis=1), 1.0, rtol=1e-12)


def test_power_normalize_rejects_all_zero_block():
    x = np.ones((2, 8))
    x[1] = 0.0
    with pytest.raises(ChannelError, match=r"\[1\]"):
        power_normalize(Tensor(x))


def test_snr_to_sigma():
    assert snr_to_sigma(20.0) == pytest.approx(0.1)
    assert snr_to_sigma(0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("snr", SNRS)
def test_awgn_noise_variance(snr):
    """Empirical noise variance within 2% of 10^(-snr/10) over 10^6 samples."""
    cfg = ChannelConfig(snr_db=snr)
    y = awgn_transmit(Tensor(np.zeros(10 ** 6)), cfg, Rng(42).child("awgn", snr))
    expected = 10.0 ** (-snr / 10.0)
    assert abs(np.var(y.data) - expected) / expected < 0.02


@pytest.mark.parametrize("snr", SNRS)
def test_awgn_measured_snr(snr):
    x = power_normalize(Tensor(np.random.default_rng(1).normal(size=10 ** 6)))
    y = awgn_transmit(x, ChannelConfig(snr_db=snr), Rng(3))
    assert measure_empirical_snr(x, y) == pytest.approx(snr, abs=0.1)


def test_measured_snr_caps():
    x = np.ones(4)
    assert measure_empirical_snr(x, x) == 200.0
    assert measure_empirical_snr(np.zeros(4), np.ones(4)) == -200.0


def test_rayleigh_gain_has_unit_power():
    h = draw_fading(10 ** 6, Rng(9))
    assert abs(np.mean(h.magnitude_sq) - 1.0) < 0.02


def test_noiseless_rayleigh_equalized_round_trip():
    x = Tensor(np.random.default_rng(2).normal(size=(4, 16)))
    cfg = ChannelConfig(kind=ChannelKind.RAYLEIGH, noiseless=True)
    y, h = rayleigh_transmit(x, cfg, Rng(5))
    assert len(h) == 4
    assert np.max(np.abs(equalize(y, h).data - x.data)) < 1e-12


def test_rayleigh_rejects_odd_length():
    with pytest.raises(ChannelError):
        rayleigh_transmit(Tensor(np.ones((2, 5))), ChannelConfig(kind=ChannelKind.RAYLEIGH), Rng(0))


def test_equalize_flags_deep_fade():
    y = Tensor(np.ones((2, 4)))
    fading = FadingDraw(np.array([1.0, 0.0]), np.array([0.0, 1e-9]))
    with pytest.raises(DeepFadeError) as err:
        equalize(y, fading)
    assert err.value.blocks == [1]


def test_transmit_resamples_after_deep_fade():
    """A zero gain is replaced by the next draw and counted."""
    x = Tensor(np.random.default_rng(4).normal(size=(2, 8)))
    cfg = ChannelConfig(kind=ChannelKind.RAYLEIGH, noiseless=True)
    before = telemetry.deep_fade_resamples._value.get()
    draws = [FadingDraw.constant(0.0, blocks=2), FadingDraw.constant(0.6, 0.8, blocks=2)]
    with patch("anchorkit.channel.draw_fading", side_effect=draws) as fake:
        y = transmit(x, cfg, Rng(1))
    assert fake.call_count == 2
    assert telemetry.deep_fade_resamples._value.get() == before + 1
    np.testing.assert_allclose(y.data, power_normalize(x).data, atol=1e-12)


def test_transmit_is_keyed_by_stream():
    x = Tensor(np.random.default_rng(6).normal(size=(2, 8)))
    for kind in ChannelKind:
        cfg = ChannelConfig(kind=kind, snr_db=4.0)
        a = transmit(x, cfg, Rng(1).child("batch", 0))
        b = transmit(x, cfg, Rng(1).child("batch", 0))
        c = transmit(x, cfg, Rng(1).child("batch", 1))
        np.testing.assert_array_equal(a.data, b.data)
        assert not np.allclose(a.data, c.data)


def test_awgn_gradient_is_identity():
    x = Tensor(np.random.default_rng(7).normal(size=(2, 6)), requires_grad=True)
    w = np.random.default_rng(8).normal(size=(2, 6))
    with Tape() as tape:
        loss = ad.reduce_sum(ad.mul(awgn_transmit(x, ChannelConfig(snr_db=1.0), Rng(0)), w))
    np.testing.assert_allclose(backward(loss, tape).of(x), w)


@pytest.mark.parametrize("kind", list(ChannelKind))
def test_noiseless_link_grad_check(kind):
    """normalize -> channel -> (equalize) is differentiable end to end."""
    x = Tensor(np.random.default_rng(9).normal(size=(2, 8)))
    w = np.random.default_rng(10).normal(size=(2, 8))
    cfg = ChannelConfig(kind=kind, noiseless=True, equalize=False)

    def f(t):
        return ad.reduce_sum(ad.mul(transmit(t, cfg, Rng(2)), w))

    assert grad_check(f, x) < 1e-4

"""
Checkpoint container tests: round trip, structure rebuild and corruption handling.
"""
import numpy as np
import pytest

from anchorkit import telemetry
from anchorkit.config import DecoderKind
from anchorkit.errors import CheckpointError
from anchorkit.models import (
    build_encoder,
    build_roster_decoder,
    dumps_checkpoint,
    load_checkpoint,
    load_checkpoint_with_meta,
    loads_checkpoint,
    save_checkpoint,
)
from anchorkit.models.checkpoint import MAGIC


@pytest.mark.parametrize("kind", ["encoder", "symmetric", "attention", "conv", "resnet", "vgg"])
def test_round_trip_rebuilds_structure(kind, tiny_encoder, tmp_path):
    model = tiny_encoder if kind == "encoder" else build_roster_decoder(DecoderKind(kind), tiny_encoder)
    path = tmp_path / f"{kind}.ckpt"
    checksum = save_checkpoint(model, path, {"schedule": "two_stage"})
    loaded, meta = load_checkpoint_with_meta(path)
    assert checksum == model.checksum() == loaded.checksum()
    assert loaded.layers == model.layers
    assert loaded.name == model.name
    assert meta == {"schedule": "two_stage"}


def test_depth_scaled_decoder_round_trip(tiny_encoder):
    dec = build_roster_decoder(DecoderKind.CONV, tiny_encoder, depth_scale=3)
    loaded, _ = loads_checkpoint(dumps_checkpoint(dec))
    assert loaded.variant == dec.variant
    assert loaded.checksum() == dec.checksum()


def test_frozen_flag_survives(tiny_encoder, tmp_path):
    anchor = tiny_encoder.frozen_copy()
    save_checkpoint(anchor, tmp_path / "anchor.ckpt")
    loaded = load_checkpoint(tmp_path / "anchor.ckpt")
    assert loaded.frozen and loaded.verify_frozen()
    assert loaded.frozen_checksum == anchor.frozen_checksum


def test_bytes_are_deterministic(tiny_encoder):
    again = build_encoder(tiny_encoder.image_shape, tiny_encoder.rate, tiny_encoder.widths, tiny_encoder.seed)
    assert dumps_checkpoint(tiny_encoder) == dumps_checkpoint(again)
    assert dumps_checkpoint(tiny_encoder).startswith(MAGIC)


def test_truncation_reports_offset(tiny_encoder):
    blob = dumps_checkpoint(tiny_encoder)
    with pytest.raises(CheckpointError, match="offset"):
        loads_checkpoint(blob[:-5])
    with pytest.raises(CheckpointError, match="offset 4"):
        loads_checkpoint(blob[:4])
    with pytest.raises(CheckpointError, match="trailing"):
        loads_checkpoint(blob + b"\x00")


def test_corruption_is_detected(tiny_encoder):
    blob = bytearray(dumps_checkpoint(tiny_encoder))
    blob[-1] ^= 0xFF
    with pytest.raises(CheckpointError, match="checksum"):
        loads_checkpoint(bytes(blob))
    with pytest.raises(CheckpointError, match="magic"):
        loads_checkpoint(b"NOTACKPT" + bytes(blob[8:]))


def test_missing_file_is_an_os_error(tmp_path):
    with pytest.raises(OSError):
        load_checkpoint(tmp_path / "absent.ckpt")


def test_save_counts_checkpoints(tiny_encoder, tmp_path):
    before = telemetry.checkpoints_written._value.get()
    save_checkpoint(tiny_encoder, tmp_path / "a.ckpt")
    assert telemetry.checkpoints_written._value.get() == before + 1
    assert np.array_equal(load_checkpoint(tmp_path / "a.ckpt")["out.conv.bias"].data,
                          tiny_encoder["out.conv.bias"].data)

"""
Training schedules.

Every schedule is a sequence of epochs run by ``_run_epoch``. Random streams
are keyed by schedule position, not by call order:

    end-to-end / stage 1 / iterative   Rng(seed).child("epoch", global_epoch)
    stage 2                            Rng(seed).child("stage2", decoder, "epoch", e)
    simultaneous                       Rng(seed).child("simultaneous", "epoch", e)

so iterative training with one decoder replays end-to-end training exactly,
and stage-2 results do not depend on decoder order or worker count.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .. import autodiff as ad
from .. import telemetry
from ..autodiff import Rng, Tape, Tensor
from ..channel import transmit
from ..config import ChannelConfig, TrainConfig
from ..data import ImageBatch
from ..errors import AnchorNotFrozenError, FrozenModelError, NumericDivergenceError, NumericError
from ..models import ModelParams, decode, encode
from .loss import mse_loss
from .optim import AdamState, adam_step, named_grads

logger = logging.getLogger(__name__)

StepFn = Callable[[Tensor, float, Rng], Tensor]


@dataclass
class LossRecord:
    stage: str
    decoder: str
    epoch: int
    loss: float


@dataclass
class Snapshot:
    """Encoder and the decoder it was just trained with, after one iterative epoch."""
    index: int
    cycle: int
    decoder: str
    encoder: ModelParams
    decoder_params: ModelParams

    @property
    def encoder_checksum(self) -> str:
        return self.encoder.checksum()


@dataclass
class TrainResult:
    encoder: ModelParams
    decoders: Dict[str, ModelParams]
    losses: List[LossRecord] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    symmetric: Optional[ModelParams] = None


def _adam(params: ModelParams, cfg: TrainConfig) -> AdamState:
    return AdamState.for_params(params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)


def pair_loss(enc: ModelParams, dec: ModelParams, x: Tensor, snr_db: float,
              channel: ChannelConfig, rng: Rng) -> Tensor:
    """encode -> power-normalize -> channel -> decode -> MSE against ``x``."""
    y = transmit(encode(enc, x, snr_db), channel, rng)
    return mse_loss(x, decode(dec, y, snr_db))


def simultaneous_loss(enc: ModelParams, decoders: Sequence[ModelParams], x: Tensor, snr_db: float,
                      channel: ChannelConfig, rng: Rng) -> Tuple[Tensor, List[Tensor]]:
    """One shared encode, an independent channel draw per decoder; total = sum of MSEs."""
    z = encode(enc, x, snr_db)
    parts = []
    for dec in decoders:
        y = transmit(z, channel, rng.child(dec.name))
        parts.append(mse_loss(x, decode(dec, y, snr_db)))
    total = parts[0]
    for part in parts[1:]:
        total = ad.add(total, part)
    return total, parts


def _abort(stage: str, label: str, epoch: int, batch: int, snr_db: float, value: float,
           last_good: Dict[str, ModelParams]) -> NumericDivergenceError:
    telemetry.nan_aborts.inc()
    diagnostics = {"stage": stage, "decoder": label, "epoch": epoch, "batch": batch,
                   "snr_db": snr_db, "loss": value}
    logger.error(f"[{stage}] non-finite loss {value} at epoch {epoch}, batch {batch} (snr {snr_db} dB)")
    return NumericDivergenceError(f"{stage}: loss became {value} at epoch {epoch}, batch {batch}",
                                  last_good=last_good, diagnostics=diagnostics)


def _run_epoch(stage: str, label: str, epoch: int, data: ImageBatch, cfg: TrainConfig, rng: Rng,
               step: StepFn, updates: Sequence[Tuple[ModelParams, AdamState]],
               untouchable: Sequence[ModelParams] = ()) -> LossRecord:
    if len(data) == 0:
        raise ValueError("cannot train on an empty batch")
    last_good = {model.name: model.copy() for model, _ in updates}
    order = rng.child("shuffle").permutation(len(data))
    total, steps = 0.0, 0
    for b, start in enumerate(range(0, len(data), cfg.batch_size)):
        brng = rng.child("batch", b)
        snr_db = float(brng.child("snr").choice(cfg.snr_set_db))
        x = Tensor(data.pixels[order[start:start + cfg.batch_size]])
        with telemetry.step_seconds.time():
            with Tape() as tape:
                try:
                    loss = step(x, snr_db, brng)
                except NumericError as e:
                    logger.error(f"[{stage}] forward pass failed: {e}")
                    raise _abort(stage, label, epoch, b, snr_db, math.nan, last_good) from e
            value = loss.item()
            if not math.isfinite(value):
                raise _abort(stage, label, epoch, b, snr_db, value, last_good)
            grads = ad.backward(loss, tape)
            tape.clear()
            for model in untouchable:
                if any(t in grads for t in model.tensors.values()):
                    raise FrozenModelError(f"gradient reached the frozen {model.name} during {stage}")
            for model, state in updates:
                adam_step(model, named_grads(model, grads), state, cfg.lr)
        total += value * x.shape[0]
        steps += 1
    mean = total / len(data)
    telemetry.record_epoch(stage, mean, steps)
    logger.info(f"[{stage}] {label} epoch {epoch}: loss {mean:.6f} over {steps} steps")
    return LossRecord(stage, label, epoch, mean)


def train_end_to_end(enc: ModelParams, dec: ModelParams, data: ImageBatch, cfg: TrainConfig,
                     epochs: int, stage: str = "end_to_end", epoch_offset: int = 0,
                     enc_state: Optional[AdamState] = None,
                     dec_state: Optional[AdamState] = None) -> List[LossRecord]:
    """Jointly update ``enc`` and ``dec`` in place for ``epochs`` epochs."""
    enc_state = enc_state or _adam(enc, cfg)
    dec_state = dec_state or _adam(dec, cfg)

    def step(x: Tensor, snr_db: float, rng: Rng) -> Tensor:
        return pair_loss(enc, dec, x, snr_db, cfg.channel_config(snr_db), rng.child("channel"))

    records = []
    for e in range(epochs):
        idx = epoch_offset + e
        records.append(_run_epoch(stage, dec.name, idx, data, cfg, Rng(cfg.seed).child("epoch", idx),
                                  step, [(enc, enc_state), (dec, dec_state)]))
    return records


def train_stage1(enc: ModelParams, sym_dec: ModelParams, data: ImageBatch, cfg: TrainConfig) -> TrainResult:
    """Self-reflective training of the encoder with its mirror decoder."""
    if sym_dec.latent_shape != enc.latent_shape or sym_dec.image_shape != enc.image_shape:
        raise ValueError(f"symmetric decoder {sym_dec.latent_shape}->{sym_dec.image_shape} does not pair "
                         f"with encoder {enc.image_shape}->{enc.latent_shape}")
    losses = train_end_to_end(enc, sym_dec, data, cfg, cfg.epochs_stage1, stage="stage1")
    return TrainResult(encoder=enc, decoders={sym_dec.name: sym_dec}, losses=losses, symmetric=sym_dec)


def freeze_encoder(enc: ModelParams) -> ModelParams:
    """Frozen copy of ``enc`` (the anchor); its checksum is recorded."""
    anchor = enc.frozen_copy()
    logger.info(f"Froze encoder as anchor, checksum {anchor.frozen_checksum[:12]}")
    return anchor


def train_stage2_decoder(anchor: ModelParams, dec: ModelParams, data: ImageBatch,
                         cfg: TrainConfig) -> TrainResult:
    """Adapt ``dec`` (in place) to the frozen anchor; the anchor never sees a gradient."""
    if not anchor.frozen:
        raise AnchorNotFrozenError("stage 2 needs a frozen anchor encoder; call freeze_encoder first")
    state = _adam(dec, cfg)

    def step(x: Tensor, snr_db: float, rng: Rng) -> Tensor:
        return pair_loss(anchor, dec, x, snr_db, cfg.channel_config(snr_db), rng.child("channel"))

    losses = []
    for e in range(cfg.epochs_per_decoder):
        rng = Rng(cfg.seed).child("stage2", dec.name, "epoch", e)
        losses.append(_run_epoch("stage2", dec.name, e, data, cfg, rng, step, [(dec, state)],
                                 untouchable=[anchor]))
    if not anchor.verify_frozen():
        raise FrozenModelError("anchor encoder checksum changed during stage 2")
    return TrainResult(encoder=anchor, decoders={dec.name: dec}, losses=losses)


def train_two_stage(enc: ModelParams, sym_dec: ModelParams, decoders: Sequence[ModelParams],
                    data: ImageBatch, cfg: TrainConfig) -> TrainResult:
    """Stage 1, freeze, then stage 2 for every decoder (optionally in a thread pool)."""
    stage1 = train_stage1(enc, sym_dec, data, cfg)
    anchor = freeze_encoder(stage1.encoder)
    with ThreadPoolExecutor(max_workers=cfg.stage2_workers) as pool:
        results = list(pool.map(lambda d: train_stage2_decoder(anchor, d, data, cfg), decoders))
    losses = list(stage1.losses)
    for r in results:
        losses.extend(r.losses)
    return TrainResult(encoder=anchor, decoders={d.name: d for d in decoders}, losses=losses,
                       symmetric=stage1.symmetric)


def train_iterative(enc: ModelParams, decoders: Sequence[ModelParams], data: ImageBatch,
                    cfg: TrainConfig) -> TrainResult:
    """Cycle end-to-end epochs over ``decoders`` in order, snapshotting after each one."""
    enc_state = _adam(enc, cfg)
    dec_states = [_adam(d, cfg) for d in decoders]
    k = len(decoders)
    losses: List[LossRecord] = []
    snapshots: List[Snapshot] = []
    for cycle in range(cfg.iterative_cycles):
        for pos, (dec, state) in enumerate(zip(decoders, dec_states)):
            losses += train_end_to_end(enc, dec, data, cfg, 1, stage="iterative", epoch_offset=cycle * k + pos,
                                       enc_state=enc_state, dec_state=state)
            snapshots.append(Snapshot(len(snapshots), cycle, dec.name, enc.copy(), dec.copy()))
    logger.info(f"Iterative training done: {cfg.iterative_cycles} cycles, {len(snapshots)} snapshots")
    return TrainResult(encoder=enc, decoders={d.name: d for d in decoders}, losses=losses, snapshots=snapshots)


def train_simultaneous(enc: ModelParams, decoders: Sequence[ModelParams], data: ImageBatch,
                       cfg: TrainConfig) -> TrainResult:
    """Update the encoder with the summed loss of all decoders, every batch."""
    updates = [(enc, _adam(enc, cfg))] + [(d, _adam(d, cfg)) for d in decoders]

    def step(x: Tensor, snr_db: float, rng: Rng) -> Tensor:
        total, _ = simultaneous_loss(enc, decoders, x, snr_db, cfg.channel_config(snr_db), rng.child("channel"))
        return total

    losses = []
    for e in range(cfg.epochs_simultaneous):
        rng = Rng(cfg.seed).child("simultaneous", "epoch", e)
        losses.append(_run_epoch("simultaneous", "all", e, data, cfg, rng, step, updates))
    return TrainResult(encoder=enc, decoders={d.name: d for d in decoders}, losses=losses)

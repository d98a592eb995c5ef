"""
Evaluation of (encoder, decoder) pairs and the catastrophic-forgetting protocol.

Channel noise during evaluation is keyed by (seed, SNR, batch) only, so every
decoder evaluated at one SNR sees the same noise realisations.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from .. import telemetry
from ..autodiff import Rng, Tensor, paused
from ..channel import transmit
from ..config import ChannelConfig, MsSsimConfig
from ..data import ImageBatch
from ..errors import ShapeError, SnapshotError
from ..metrics import ms_ssim_per_image, psnr_per_image
from ..models import ModelParams, decode, encode
from .schedules import Snapshot

logger = logging.getLogger(__name__)

TARGETED = "Targeted"


class EvalRecord(BaseModel):
    """One row of an evaluation CSV."""
    model_config = ConfigDict(extra="forbid")

    schedule: str
    decoder: str
    channel: str
    snr_db: float
    psnr_db: float
    ms_ssim: float
    seed: int
    snapshot: str = "final"


CSV_COLUMNS = list(EvalRecord.model_fields)


@dataclass(frozen=True)
class PairScore:
    psnr_db: float
    ms_ssim: float
    count: int


@dataclass(frozen=True)
class EvalJob:
    """A pair to score; ``snapshot`` labels which encoder state is used."""
    decoder: str
    encoder: ModelParams
    decoder_params: ModelParams
    snapshot: str = "final"


def reconstruct(encoder: ModelParams, decoder: ModelParams, images: Tensor, snr_db: float,
                channel: ChannelConfig, rng: Rng) -> Tensor:
    with paused():
        y = transmit(encode(encoder, images, snr_db), channel, rng)
        return decode(decoder, y, snr_db)


def evaluate_pair(encoder: ModelParams, decoder: ModelParams, images: ImageBatch, snr_db: float,
                  channel: ChannelConfig, seed: int = 0, batch_size: int = 64,
                  ms_cfg: Optional[MsSsimConfig] = None) -> PairScore:
    """Mean per-image PSNR and MS-SSIM of ``decoder`` fed by ``encoder`` at ``snr_db``."""
    if encoder.latent_shape != decoder.latent_shape:
        raise ShapeError(f"encoder latent {encoder.latent_shape} does not match "
                         f"{decoder.name} decoder latent {decoder.latent_shape}")
    chan = channel.model_copy(update={"snr_db": float(snr_db)})
    root = Rng(seed).child("eval", f"{float(snr_db):g}")
    psnrs, ssims = [], []
    for b, start in enumerate(range(0, len(images), batch_size)):
        x = images.pixels[start:start + batch_size]
        out = reconstruct(encoder, decoder, Tensor(x), snr_db, chan, root.child(b))
        psnrs.append(psnr_per_image(x, out.data))
        ssims.append(ms_ssim_per_image(x, out.data, ms_cfg))
    return PairScore(float(np.mean(np.concatenate(psnrs))), float(np.mean(np.concatenate(ssims))), len(images))


def evaluate_grid(jobs: Sequence[EvalJob], images: ImageBatch, snr_list: Sequence[float],
                  channel: ChannelConfig, schedule: str, seed: int = 0, batch_size: int = 64,
                  workers: int = 1, ms_cfg: Optional[MsSsimConfig] = None) -> List[EvalRecord]:
    """Score every (job, SNR) pair; rows come back in job-major, SNR-minor order."""
    tasks = [(job, float(snr)) for job in jobs for snr in snr_list]

    def run(task) -> EvalRecord:
        job, snr = task
        score = evaluate_pair(job.encoder, job.decoder_params, images, snr, channel, seed, batch_size, ms_cfg)
        telemetry.record_eval({"decoder": job.decoder, "snr_db": snr,
                               "psnr_db": score.psnr_db, "ms_ssim": score.ms_ssim})
        logger.debug(f"{job.decoder}/{job.snapshot} @ {snr:g} dB: {score.psnr_db:.3f} dB, {score.ms_ssim:.4f}")
        return EvalRecord(schedule=schedule, decoder=job.decoder, channel=channel.kind.value, snr_db=snr,
                          psnr_db=score.psnr_db, ms_ssim=score.ms_ssim, seed=seed, snapshot=job.snapshot)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(run, tasks))


def records_frame(records: Sequence[EvalRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump() for r in records], columns=CSV_COLUMNS)


def forgetting_labels(k: int) -> List[str]:
    return [TARGETED] + [f"After-{i}" for i in range(1, k)]


def select_snapshots(snapshots: Sequence[Snapshot], decoder: str, k: int) -> List[Snapshot]:
    """Targeted snapshot of ``decoder`` followed by the k-1 snapshots after it.

    The targeted one is the latest snapshot taken right after ``decoder``'s own
    epoch that still has k-1 successors.
    """
    candidates = [i for i, s in enumerate(snapshots) if s.decoder == decoder and i + k - 1 < len(snapshots)]
    if not candidates:
        raise SnapshotError(f"no snapshot of {decoder} is followed by {k - 1} more; "
                            f"run at least two iterative cycles ({len(snapshots)} snapshots available)")
    t = candidates[-1]
    return list(snapshots[t:t + k])


@dataclass
class ForgettingReport:
    """Decoder x encoder-snapshot matrix of PSNR / MS-SSIM per eval SNR."""
    records: List[EvalRecord]
    order: List[str]
    labels: List[str]

    def frame(self) -> pd.DataFrame:
        return records_frame(self.records)

    def value(self, decoder: str, label: str, snr_db: float, metric: str = "psnr_db") -> float:
        for r in self.records:
            if r.decoder == decoder and r.snapshot == label and r.snr_db == float(snr_db):
                return float(getattr(r, metric))
        raise KeyError(f"no entry for {decoder}/{label} at {snr_db} dB")

    def mean_over_snr(self, decoder: str, label: str, metric: str = "psnr_db") -> float:
        vals = [getattr(r, metric) for r in self.records if r.decoder == decoder and r.snapshot == label]
        if not vals:
            raise KeyError(f"no entries for {decoder}/{label}")
        return float(np.mean(vals))

    def matrix(self, metric: str = "psnr_db") -> pd.DataFrame:
        """Rows decoder, columns snapshot label, values averaged over SNR."""
        table = self.frame().pivot_table(index="decoder", columns="snapshot", values=metric, aggfunc="mean")
        return table.reindex(index=self.order, columns=self.labels)

    def forgetting_margin(self, decoder: str, metric: str = "psnr_db") -> float:
        """Targeted minus last-label mean; positive means the encoder drifted away."""
        return self.mean_over_snr(decoder, TARGETED, metric) - self.mean_over_snr(decoder, self.labels[-1], metric)


def forgetting_eval(snapshots: Sequence[Snapshot], order: Sequence[str], eval_data: ImageBatch,
                    snr_list: Sequence[float], channel: ChannelConfig, seed: int = 0, batch_size: int = 64,
                    workers: int = 1, ms_cfg: Optional[MsSsimConfig] = None,
                    schedule: str = "iterative") -> ForgettingReport:
    """Score each decoder (frozen at its own-epoch state) against its Targeted and later encoders."""
    k = len(order)
    labels = forgetting_labels(k)
    jobs: List[EvalJob] = []
    for name in order:
        chosen = select_snapshots(snapshots, name, k)
        own = chosen[0].decoder_params
        jobs += [EvalJob(name, snap.encoder, own, label) for label, snap in zip(labels, chosen)]
    records = evaluate_grid(jobs, eval_data, snr_list, channel, schedule, seed, batch_size, workers, ms_cfg)
    report = ForgettingReport(records=records, order=list(order), labels=labels)
    for name in order:
        logger.info(f"Forgetting {name}: targeted - {labels[-1]} = {report.forgetting_margin(name):.3f} dB")
    return report

"""
Prometheus metrics for training and evaluation runs.

Nothing is served; ``write_textfile`` drops the registry next to a run's
outputs in the node-exporter textfile format.
"""
from pathlib import Path
from typing import Any, Dict, Union

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, generate_latest, write_to_textfile

# Use a module-level registry to simplify imports in tests and the CLI
registry = CollectorRegistry()

# Gauges
train_loss = Gauge(
    "anchorkit_train_loss",
    "Mean training loss of the last finished epoch",
    labelnames=("stage",),
    registry=registry,
)
eval_psnr_db = Gauge(
    "anchorkit_eval_psnr_db",
    "Mean evaluation PSNR in dB",
    labelnames=("decoder", "snr_db"),
    registry=registry,
)
eval_ms_ssim = Gauge(
    "anchorkit_eval_ms_ssim",
    "Mean evaluation MS-SSIM",
    labelnames=("decoder", "snr_db"),
    registry=registry,
)

# Counters
train_steps = Counter(
    "anchorkit_train_steps_total",
    "Optimizer steps taken",
    labelnames=("stage",),
    registry=registry,
)
deep_fade_resamples = Counter(
    "anchorkit_deep_fade_resamples_total",
    "Rayleigh draws rejected by the deep-fade guard",
    registry=registry,
)
nan_aborts = Counter(
    "anchorkit_nan_aborts_total",
    "Training runs aborted on a non-finite loss",
    registry=registry,
)
checkpoints_written = Counter(
    "anchorkit_checkpoints_written_total",
    "Checkpoint files written",
    registry=registry,
)

step_seconds = Histogram(
    "anchorkit_train_step_seconds",
    "Wall time of one forward/backward/update step",
    buckets=(0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5, 5.0),
    registry=registry,
)


def record_epoch(stage: str, mean_loss: float, steps: int) -> None:
    train_loss.labels(stage=stage).set(float(mean_loss))
    train_steps.labels(stage=stage).inc(steps)


def record_eval(t: Dict[str, Any]) -> None:
    """Update eval gauges from a dict with decoder, snr_db and optional psnr_db / ms_ssim."""
    if t is None:
        return
    labels = {"decoder": str(t["decoder"]), "snr_db": f"{float(t['snr_db']):g}"}
    if "psnr_db" in t:
        eval_psnr_db.labels(**labels).set(float(t["psnr_db"]))
    if "ms_ssim" in t:
        eval_ms_ssim.labels(**labels).set(float(t["ms_ssim"]))


def render() -> bytes:
    return generate_latest(registry)


def write_textfile(path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), registry)
    return path

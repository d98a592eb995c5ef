"""
CSV and SVG report emission.

Every CSV is written through ``write_frame`` (fixed columns, 6-decimal floats,
``\\n`` line endings) and every chart through ``line_chart``, which pins the
matplotlib SVG hash salt and drops the date so reruns are byte-identical.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .errors import ReportError  # noqa: E402
from .training import CSV_COLUMNS, EvalRecord, ForgettingReport, LossRecord, records_frame  # noqa: E402

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"
LOSS_COLUMNS = ["stage", "decoder", "epoch", "loss"]
BEST_COLUMN = "best"
METRIC_LABELS = {"psnr_db": "PSNR (dB)", "ms_ssim": "MS-SSIM"}

_SVG_RC = {"svg.hashsalt": "anchorkit", "svg.fonttype": "none", "path.simplify": False}


def write_frame(frame: pd.DataFrame, path: Union[str, Path], columns: Optional[Sequence[str]] = None,
                index: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is not None:
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise ReportError(f"frame for {path.name} lacks columns {missing}")
        frame = frame[list(columns)]
    frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_eval_csv(records: Sequence[EvalRecord], path: Union[str, Path]) -> Path:
    """One row per record, columns fixed to ``CSV_COLUMNS``."""
    out = write_frame(records_frame(records), path, CSV_COLUMNS)
    logger.info(f"Wrote {len(records)} eval rows to {out}")
    return out


def read_eval_csv(path: Union[str, Path]) -> pd.DataFrame:
    frame = pd.read_csv(path)
    if list(frame.columns) != CSV_COLUMNS:
        raise ReportError(f"{path} has header {list(frame.columns)}, expected {CSV_COLUMNS}")
    return frame


def write_loss_csv(losses: Sequence[LossRecord], path: Union[str, Path]) -> Path:
    frame = pd.DataFrame([vars(r) for r in losses], columns=LOSS_COLUMNS)
    return write_frame(frame, path, LOSS_COLUMNS)


def line_chart(path: Union[str, Path], title: str, x: Sequence[float], series: Dict[str, Sequence[float]],
               ylabel: str, xlabel: str = "SNR (dB)") -> Path:
    """One marker line per series; each line is an SVG group with id ``series-<label>``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, ys in series.items():
            ax.plot(list(x), list(ys), marker="o", label=label, gid=f"series-{label}")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def forgetting_outputs(report: ForgettingReport, out_dir: Union[str, Path],
                       metric: str = "psnr_db") -> List[Path]:
    """forgetting.csv (all rows), forgetting_matrix.csv and one SVG per decoder."""
    out_dir = Path(out_dir)
    frame = report.frame()
    written = [write_frame(frame, out_dir / "forgetting.csv", CSV_COLUMNS)]
    written.append(write_frame(report.matrix(metric), out_dir / "forgetting_matrix.csv", index=True))
    for name in report.order:
        rows = frame[frame["decoder"] == name]
        snrs = sorted(rows["snr_db"].unique())
        series = {}
        for label in report.labels:
            by_snr = rows[rows["snapshot"] == label].set_index("snr_db")[metric]
            series[label] = [by_snr[s] for s in snrs]
        written.append(line_chart(out_dir / f"forgetting_{name}.svg", f"{name} decoder vs later encoders",
                                  snrs, series, METRIC_LABELS.get(metric, metric)))
    logger.info(f"Wrote forgetting report for {len(report.order)} decoders to {out_dir}")
    return written


def _check_comparable(frames: Sequence[pd.DataFrame]) -> List[str]:
    if not frames:
        raise ReportError("compare needs at least one eval CSV")
    schedules = []
    reference = None
    for frame in frames:
        names = list(frame["schedule"].unique())
        if len(names) != 1:
            raise ReportError(f"each eval CSV must hold one schedule, got {names}")
        if names[0] in schedules:
            raise ReportError(f"schedule {names[0]} appears in more than one input")
        schedules.append(names[0])
        key = {
            "pairs": sorted(zip(frame["decoder"], frame["snr_db"])),
            "channel": sorted(frame["channel"].unique()),
            "seed": sorted(frame["seed"].unique()),
        }
        if reference is None:
            reference = key
        elif key != reference:
            diff = [k for k in key if key[k] != reference[k]]
            raise ReportError(f"{names[0]} was evaluated on a different set than {schedules[0]} (differs in {diff})")
    return schedules


def compare_frame(frames: Sequence[pd.DataFrame], metric: str = "psnr_db") -> pd.DataFrame:
    """Rows (decoder, snr_db), one column per schedule plus the best schedule per row."""
    frames = [f[f["snapshot"] == "final"] if "snapshot" in f else f for f in frames]
    schedules = _check_comparable(frames)
    merged = pd.concat(frames, ignore_index=True)
    table = merged.pivot(index=["decoder", "snr_db"], columns="schedule", values=metric)
    order = list(dict.fromkeys(zip(frames[0]["decoder"], frames[0]["snr_db"])))
    table = table.reindex(index=pd.MultiIndex.from_tuples(order, names=["decoder", "snr_db"]), columns=schedules)
    table.columns.name = None
    table[BEST_COLUMN] = table[schedules].idxmax(axis=1)
    return table


def compare_outputs(frames: Sequence[pd.DataFrame], out_dir: Union[str, Path],
                    metrics: Sequence[str] = ("psnr_db", "ms_ssim")) -> List[Path]:
    """compare_<metric>.csv for each metric and one SVG per decoder and metric."""
    out_dir = Path(out_dir)
    written = []
    for metric in metrics:
        table = compare_frame(frames, metric)
        written.append(write_frame(table, out_dir / f"compare_{metric}.csv", index=True))
        schedules = [c for c in table.columns if c != BEST_COLUMN]
        for name in dict.fromkeys(table.index.get_level_values("decoder")):
            rows = table.xs(name, level="decoder")
            series = {s: rows[s].tolist() for s in schedules}
            written.append(line_chart(out_dir / f"compare_{metric}_{name}.svg", f"{name} decoder by schedule",
                                      rows.index.tolist(), series, METRIC_LABELS.get(metric, metric)))
    logger.info(f"Wrote schedule comparison ({len(frames)} runs) to {out_dir}")
    return written

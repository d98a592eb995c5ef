"""
Desk-scale reproductions: forgetting direction, schedule ordering and SNR
monotonicity on the default synthetic configuration.

Slow; run with ANCHORKIT_RUN_SLOW=1.
"""
from typing import Dict, Tuple

import numpy as np
import pytest

from anchorkit.cli import run_schedule
from anchorkit.config import ExperimentConfig
from anchorkit.data import load_datasets
from anchorkit.training import EvalJob, TrainResult, evaluate_grid, forgetting_eval, records_frame

pytestmark = pytest.mark.slow

SEEDS = [0, 1, 2]
FORGETTING_MARGIN_DB = 0.3
PSNR_TIE_DB = 0.1
MS_SSIM_TIE = 1e-3

_runs: Dict[Tuple[str, int], Tuple[ExperimentConfig, TrainResult]] = {}


def _run(schedule: str, seed: int) -> Tuple[ExperimentConfig, TrainResult]:
    key = (schedule, seed)
    if key not in _runs:
        cfg = ExperimentConfig().with_overrides({"train.schedule": schedule, "train.seed": seed})
        train, _ = load_datasets(cfg.data)
        _runs[key] = (cfg, run_schedule(cfg, train))
    return _runs[key]


def _eval_frame(schedule: str, seed: int):
    cfg, result = _run(schedule, seed)
    _, held_out = load_datasets(cfg.data)
    jobs = [EvalJob(kind.value, result.encoder, result.decoders[kind.value]) for kind in cfg.roster]
    records = evaluate_grid(jobs, held_out, cfg.report.eval_snr_db, cfg.train.channel_config(1.0), schedule,
                            seed=seed, batch_size=cfg.report.eval_batch_size)
    return records_frame(records)


def test_iterative_training_forgets():
    """Targeted beats After-3 by the margin for every decoder in at least 2 of 3 seeds."""
    passed = 0
    for seed in SEEDS:
        cfg, result = _run("iterative", seed)
        _, held_out = load_datasets(cfg.data)
        order = [kind.value for kind in cfg.roster]
        report = forgetting_eval(result.snapshots, order, held_out, cfg.report.eval_snr_db,
                                 cfg.train.channel_config(1.0), seed=seed,
                                 batch_size=cfg.report.eval_batch_size)
        margins = [report.forgetting_margin(name) for name in order]
        passed += all(m >= FORGETTING_MARGIN_DB for m in margins)
    assert passed >= 2


def test_two_stage_matches_or_beats_simultaneous():
    passed = 0
    for seed in SEEDS:
        anchor = _eval_frame("two_stage", seed).groupby("snr_db")[["psnr_db", "ms_ssim"]].mean()
        joint = _eval_frame("simultaneous", seed).groupby("snr_db")[["psnr_db", "ms_ssim"]].mean()
        ok = (np.all(anchor["psnr_db"] >= joint["psnr_db"] - PSNR_TIE_DB)
              and np.all(anchor["ms_ssim"] >= joint["ms_ssim"] - MS_SSIM_TIE))
        passed += bool(ok)
    assert passed >= 2


@pytest.mark.parametrize("schedule", ["two_stage", "iterative", "simultaneous"])
def test_psnr_rises_with_snr(schedule):
    frame = _eval_frame(schedule, SEEDS[0])
    for name, rows in frame.groupby("decoder"):
        psnr = rows.sort_values("snr_db")["psnr_db"].to_numpy()
        assert np.all(np.diff(psnr) >= -PSNR_TIE_DB), name

"""
End-to-end CLI tests on a tiny 16x16 configuration.
"""
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest
import yaml

from anchorkit import cli
from anchorkit.autodiff import Tensor
from anchorkit.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, main, parse_overrides, ConfigProblem
from anchorkit.config import CONFIG_ENV_VAR, ExperimentConfig
from anchorkit.reporting import write_eval_csv
from anchorkit.training import CSV_COLUMNS, EvalRecord, RunManifest

TINY_CONFIG = {
    "train": {"lr": 1e-3, "batch_size": 4, "snr_set_db": [4.0, 10.0], "epochs_stage1": 1,
              "epochs_per_decoder": 1, "iterative_cycles": 2, "epochs_simultaneous": 1, "seed": 3},
    "model": {"widths": [2, 2]},
    "data": {"train_count": 4, "eval_count": 2, "patch_size": 16, "seed": 8},
    "report": {"eval_snr_db": [1.0, 13.0], "dump_reconstructions": 1},
}


@pytest.fixture(autouse=True)
def _no_env_config(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)


@pytest.fixture(scope="module")
def tiny_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "tiny.yaml"
    path.write_text(yaml.safe_dump(TINY_CONFIG))
    return path


@pytest.fixture(scope="module")
def trained_run(tiny_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    assert main(["train", "--config", str(tiny_config), "--output", str(out)]) == EXIT_OK
    return out / "two_stage"


def test_print_defaults(capsys):
    assert main(["print-defaults"]) == EXIT_OK
    printed = yaml.safe_load(capsys.readouterr().out)
    assert ExperimentConfig(**printed) == ExperimentConfig()


def test_parse_overrides():
    assert parse_overrides(["train.lr=0.01", "roster=[conv, vgg]"]) == {"train.lr": 0.01, "roster": ["conv", "vgg"]}
    with pytest.raises(ConfigProblem):
        parse_overrides(["no-equals-sign"])


@pytest.mark.parametrize("argv, fragment", [
    (["print-defaults", "--set", "train.lr=-1"], "train.lr"),
    (["print-defaults", "--set", "train.nope=1"], "train.nope"),
    (["print-defaults", "--set", "broken"], "expected section.key=value"),
    (["print-defaults", "--config", "/nonexistent/anchorkit.yaml"], "anchorkit.yaml"),
])
def test_config_errors_exit_2(argv, fragment, capsys):
    assert main(argv) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "config error" in err and fragment in err


def test_train_writes_run(trained_run):
    manifest = RunManifest.from_yaml(trained_run / "manifest.yaml")
    assert set(manifest.checkpoints) == {"encoder", "symmetric", "attention", "conv", "resnet", "vgg"}
    assert len(list((trained_run / "checkpoints").glob("*.ckpt"))) == 6
    assert manifest.schedule == "two_stage" and manifest.seed == 3
    losses = pd.read_csv(trained_run / "losses.csv")
    assert list(losses.columns) == ["stage", "decoder", "epoch", "loss"]
    assert list(losses["stage"]) == ["stage1"] + ["stage2"] * 4
    assert (trained_run / "metrics.prom").read_text().count("anchorkit_train_steps_total") > 0


def test_rerun_from_manifest_reproduces_checksums(trained_run, tmp_path):
    code = main(["train", "--manifest", str(trained_run / "manifest.yaml"), "--output", str(tmp_path)])
    assert code == EXIT_OK
    first = RunManifest.from_yaml(trained_run / "manifest.yaml")
    second = RunManifest.from_yaml(tmp_path / "two_stage" / "manifest.yaml")
    assert second.checksums == first.checksums
    assert (tmp_path / "two_stage" / "losses.csv").read_bytes() == (trained_run / "losses.csv").read_bytes()


def test_eval_writes_csv(trained_run, tmp_path):
    out = tmp_path / "eval.csv"
    assert main(["eval", "--run", str(trained_run), "--csv", str(out)]) == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == CSV_COLUMNS
    assert len(frame) == 4 * 2
    assert set(frame["decoder"]) == {"attention", "conv", "resnet", "vgg"}
    assert set(frame["snr_db"]) == {1.0, 13.0}
    assert (frame["schedule"] == "two_stage").all()
    # six decimals on every float column
    first_row = out.read_text().splitlines()[1].split(",")
    assert len(first_row[CSV_COLUMNS.index("psnr_db")].split(".")[1]) == 6


def test_reconstruct_dumps_pngs(trained_run, tmp_path):
    code = main(["reconstruct", "--run", str(trained_run), "--snr", "7", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "original" / "000.png").exists()
    assert (tmp_path / "vgg" / "snr7" / "000.png").exists()
    assert not (tmp_path / "symmetric").exists()


def test_forgetting_trains_iterative_when_no_run(tiny_config, tmp_path):
    code = main(["forgetting", "--config", str(tiny_config), "--output", str(tmp_path)])
    assert code == EXIT_OK
    out = tmp_path / "iterative" / "forgetting"
    frame = pd.read_csv(out / "forgetting.csv")
    assert len(frame) == 4 * 4 * 2
    assert sorted(frame["snapshot"].unique()) == ["After-1", "After-2", "After-3", "Targeted"]
    assert len(list(out.glob("forgetting_*.svg"))) == 4
    manifest = RunManifest.from_yaml(tmp_path / "iterative" / "manifest.yaml")
    assert len(manifest.snapshots) == 8


def _fake_eval(path, schedule, offset):
    records = [EvalRecord(schedule=schedule, decoder=d, channel="awgn", snr_db=s, psnr_db=20.0 + s + offset,
                          ms_ssim=0.5, seed=0) for d in ("conv", "vgg") for s in (1.0, 13.0)]
    return write_eval_csv(records, path)


def test_compare(tmp_path):
    a = _fake_eval(tmp_path / "a.csv", "two_stage", 1.0)
    b = _fake_eval(tmp_path / "b.csv", "iterative", 0.0)
    assert main(["compare", str(a), str(b), "--out", str(tmp_path / "cmp")]) == EXIT_OK
    table = pd.read_csv(tmp_path / "cmp" / "compare_psnr_db.csv")
    assert list(table.columns) == ["decoder", "snr_db", "two_stage", "iterative", "best"]
    assert (table["best"] == "two_stage").all()
    assert (tmp_path / "cmp" / "compare_ms_ssim_vgg.svg").exists()


def test_compare_mismatch_exits_2(tmp_path):
    a = _fake_eval(tmp_path / "a.csv", "two_stage", 0.0)
    b = write_eval_csv([EvalRecord(schedule="iterative", decoder="conv", channel="awgn", snr_db=1.0,
                                   psnr_db=1.0, ms_ssim=0.1, seed=0)], tmp_path / "b.csv")
    assert main(["compare", str(a), str(b), "--out", str(tmp_path / "cmp")]) == EXIT_CONFIG


def test_non_finite_loss_exits_3(tiny_config, tmp_path):
    with patch("anchorkit.training.schedules.pair_loss", return_value=Tensor(np.array(np.inf))):
        code = main(["train", "--config", str(tiny_config), "--output", str(tmp_path)])
    assert code == EXIT_NUMERIC
    last_good = tmp_path / "two_stage" / "last_good"
    assert (last_good / "encoder.ckpt").exists()
    assert not (tmp_path / "two_stage" / "manifest.yaml").exists()


def test_missing_run_exits_4(tmp_path, capsys):
    assert main(["eval", "--run", str(tmp_path / "absent")]) == EXIT_IO
    assert "I/O error" in capsys.readouterr().err


def test_non_finite_encoder_exits_3(tiny_config, tmp_path, capsys):
    real_build = cli.build_models

    def poisoned(cfg):
        enc, sym, decoders = real_build(cfg)
        enc["block1.conv.bias"].data[:] = np.nan
        return enc, sym, decoders

    with patch("anchorkit.cli.build_models", side_effect=poisoned):
        code = main(["train", "--config", str(tiny_config), "--output", str(tmp_path)])
    assert code == EXIT_NUMERIC
    assert "numeric failure" in capsys.readouterr().err
    assert (tmp_path / "two_stage" / "last_good" / "encoder.ckpt").exists()

"""
CSV / SVG report emission and the Markdown schedule report.
"""
from pathlib import Path

import pandas as pd
import pytest

from anchorkit.errors import ReportError
from anchorkit.reporting import (
    BEST_COLUMN,
    compare_frame,
    compare_outputs,
    forgetting_outputs,
    line_chart,
    read_eval_csv,
    write_eval_csv,
    write_loss_csv,
)
from anchorkit.training import CSV_COLUMNS, EvalRecord, ForgettingReport, LossRecord, forgetting_labels
from tools.make_report import generate_report

DECODERS = ["attention", "conv", "resnet", "vgg"]
SNRS = [1.0, 7.0, 13.0]


def _records(schedule="two_stage", offset=0.0, decoders=DECODERS, snrs=SNRS, snapshot="final"):
    return [EvalRecord(schedule=schedule, decoder=d, channel="awgn", snr_db=s, psnr_db=20.0 + s / 3 + offset + i,
                       ms_ssim=0.5 + s / 100, seed=0, snapshot=snapshot)
            for i, d in enumerate(decoders) for s in snrs]


def _forgetting_report():
    labels = forgetting_labels(len(DECODERS))
    records = []
    for d in DECODERS:
        for j, label in enumerate(labels):
            for s in SNRS:
                records.append(EvalRecord(schedule="iterative", decoder=d, channel="awgn", snr_db=s,
                                          psnr_db=25.0 + s / 2 - 1.5 * j, ms_ssim=0.9 - 0.05 * j, seed=0,
                                          snapshot=label))
    return ForgettingReport(records=records, order=list(DECODERS), labels=labels)


def test_eval_csv_header_and_precision(tmp_path):
    path = write_eval_csv(_records(), tmp_path / "eval.csv")
    lines = path.read_text().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1] == "two_stage,attention,awgn,1.000000,20.333333,0.510000,0,final"
    assert lines[-1] == ""
    assert len(read_eval_csv(path)) == len(DECODERS) * len(SNRS)


def test_read_eval_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "other.csv"
    pd.DataFrame({"hbm_gb": [1.0]}).to_csv(path, index=False)
    with pytest.raises(ReportError):
        read_eval_csv(path)


def test_loss_csv(tmp_path):
    path = write_loss_csv([LossRecord("stage1", "symmetric", 0, 0.25)], tmp_path / "losses.csv")
    assert path.read_text() == "stage,decoder,epoch,loss\nstage1,symmetric,0,0.250000\n"


def test_line_chart_groups_series(tmp_path):
    path = line_chart(tmp_path / "c.svg", "t", [1, 2], {"a": [1, 2], "b": [2, 1]}, "y")
    text = path.read_text()
    assert text.startswith("<?xml")
    assert 'id="series-a"' in text and 'id="series-b"' in text


def test_forgetting_outputs(tmp_path):
    report = _forgetting_report()
    written = forgetting_outputs(report, tmp_path)
    assert len(written) == 2 + len(DECODERS)
    rows = pd.read_csv(tmp_path / "forgetting.csv")
    assert len(rows) == 4 * 4 * len(SNRS)
    matrix = pd.read_csv(tmp_path / "forgetting_matrix.csv", index_col=0)
    assert list(matrix.columns) == report.labels
    assert matrix.loc["conv", "Targeted"] > matrix.loc["conv", "After-3"]
    svg = (tmp_path / "forgetting_resnet.svg").read_text()
    for label in report.labels:
        assert f'id="series-{label}"' in svg


def test_outputs_are_byte_identical_on_rerun(tmp_path):
    report = _forgetting_report()
    forgetting_outputs(report, tmp_path / "a")
    forgetting_outputs(report, tmp_path / "b")
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def _frame(records):
    return pd.DataFrame([r.model_dump() for r in records], columns=CSV_COLUMNS)


def test_compare_frame_picks_best():
    frames = [_frame(_records("two_stage", 0.0)), _frame(_records("iterative", 1.0)),
              _frame(_records("simultaneous", -1.0))]
    table = compare_frame(frames)
    assert list(table.columns) == ["two_stage", "iterative", "simultaneous", BEST_COLUMN]
    assert list(table.index.get_level_values("decoder")[:3]) == ["attention"] * 3
    assert (table[BEST_COLUMN] == "iterative").all()


def test_compare_ignores_snapshot_rows():
    snapshots = _records("two_stage", 50.0, snapshot="Targeted")
    frames = [_frame(_records("two_stage") + snapshots), _frame(_records("iterative", 1.0))]
    assert (compare_frame(frames)[BEST_COLUMN] == "iterative").all()


@pytest.mark.parametrize("second", [
    _records("iterative", decoders=DECODERS[:2]),
    _records("iterative", snrs=[1.0, 4.0, 13.0]),
    _records("two_stage"),
    _records("iterative") + _records("simultaneous"),
])
def test_compare_rejects_mismatched_inputs(second):
    with pytest.raises(ReportError):
        compare_frame([_frame(_records("two_stage")), _frame(second)])


def test_compare_outputs_and_markdown_report(tmp_path):
    frames = [_frame(_records("two_stage", 0.5)), _frame(_records("iterative"))]
    written = compare_outputs(frames, tmp_path)
    assert (tmp_path / "compare_psnr_db.csv") in written
    assert len([p for p in written if p.suffix == ".svg"]) == 2 * len(DECODERS)

    out = tmp_path / "report" / "run_report.md"
    generate_report(tmp_path / "compare_psnr_db.csv", out)
    text = out.read_text(encoding="utf-8")
    assert "# anchorkit Schedule Report" in text
    assert "| two_stage |" in text and "| iterative |" in text
    assert "Best mean: two_stage" in text
    assert len(list((tmp_path / "report" / "charts").glob("*.png"))) == len(DECODERS)


def test_markdown_report_needs_comparison_csv(tmp_path):
    path = tmp_path / "x.csv"
    pd.DataFrame({"a": [1]}).to_csv(path, index=False)
    with pytest.raises(ValueError):
        generate_report(path, tmp_path / "r.md")

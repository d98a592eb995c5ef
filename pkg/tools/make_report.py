import argparse
from pathlib import Path
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

REPORT_PATH_DEFAULT = Path("outputs/run_report.md")

BEST_COLUMN = "best"


def _write_md(out_path: Path, content: str):
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(content, encoding="utf-8")


def _schedules(df: pd.DataFrame) -> List[str]:
    return [c for c in df.columns if c not in ("decoder", "snr_db", BEST_COLUMN)]


def _summarize(df: pd.DataFrame) -> Dict[str, Dict[str, float]]:
    """Mean over decoders and SNRs, and the share of rows each schedule wins."""
    summary = {}
    for s in _schedules(df):
        summary[s] = {
            "mean": float(df[s].mean()),
            "min": float(df[s].min()),
            "wins": float((df[BEST_COLUMN] == s).mean()) if BEST_COLUMN in df else float("nan"),
        }
    return summary


def _plots(df: pd.DataFrame, chart_dir: Path, metric: str) -> List[Path]:
    chart_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, rows in df.groupby("decoder", sort=False):
        p = chart_dir / f"{metric}_{name}.png"
        plt.figure()
        for s in _schedules(df):
            plt.plot(rows["snr_db"], rows[s], marker="o", label=s)
        plt.title(f"{name} decoder")
        plt.xlabel("SNR (dB)")
        plt.ylabel(metric)
        plt.legend()
        plt.tight_layout()
        plt.savefig(p)
        plt.close()
        paths.append(p)
    return paths


def generate_report(csv_path: Path, out: Path, chart_dir: Optional[Path] = None, metric: str = "psnr_db") -> Path:
    """Markdown summary of a ``compare_<metric>.csv`` written by ``anchorkit compare``."""
    df = pd.read_csv(csv_path)
    missing = {"decoder", "snr_db"} - set(df.columns)
    if missing:
        raise ValueError(f"{csv_path} is not a comparison CSV (missing {sorted(missing)})")
    chart_dir = chart_dir or out.parent / "charts"
    charts = _plots(df, chart_dir, metric)
    s = _summarize(df)

    rows = "\n".join(f"| {name} | {v['mean']:.3f} | {v['min']:.3f} | {v['wins'] * 100:.0f}% |" for name, v in s.items())
    best = max(s, key=lambda name: s[name]["mean"]) if s else "n/a"
    links = "\n".join(f"![{p.stem}]({p.relative_to(out.parent).as_posix() if p.is_relative_to(out.parent) else p})"
                      for p in charts)
    md = f"""# anchorkit Schedule Report
## Summary
Metric: {metric}
Decoders: {df['decoder'].nunique()}, SNR points: {df['snr_db'].nunique()}
Best mean: {best}

## Schedules
| Schedule | Mean | Min | Rows won |
|---|---:|---:|---:|
{rows}

## Charts
{links}
"""
    _write_md(out, md)
    return out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--csv", dest="csv", required=True, help="compare_<metric>.csv from `anchorkit compare`")
    parser.add_argument("--out", dest="out", default=str(REPORT_PATH_DEFAULT))
    parser.add_argument("--charts", dest="charts", default=None, help="Chart directory (default: <out dir>/charts)")
    parser.add_argument("--metric", dest="metric", default="psnr_db")
    args = parser.parse_args()

    out_path = Path(args.out)
    generate_report(Path(args.csv), out_path, Path(args.charts) if args.charts else None, metric=args.metric)
    print(f"Report written to {out_path}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""
anchorkit command line interface.

    anchorkit train       run the configured schedule, write checkpoints + manifest
    anchorkit eval        score a run's decoders over the eval SNRs -> CSV
    anchorkit forgetting  forgetting matrix of an iterative run -> CSV + SVG
    anchorkit compare     pivot eval CSVs of several schedules -> CSV + SVG
    anchorkit reconstruct dump original / reconstructed PNGs
    anchorkit print-defaults

Exit codes: 0 success, 2 configuration or input error, 3 numeric failure,
4 I/O failure.
"""
import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from . import __version__, reporting, telemetry
from .autodiff import Rng, Tensor
from .config import ChannelKind, DecoderKind, ExperimentConfig, LoggingSettings, ScheduleKind, load_config
from .data import ImageBatch, load_datasets, save_image
from .errors import AnchorkitError, CheckpointError, NumericDivergenceError, NumericError
from .models import (
    ModelParams,
    build_encoder,
    build_roster_decoder,
    build_symmetric_decoder,
    load_checkpoint,
    save_checkpoint,
)
from .training import (
    MANIFEST_NAME,
    EvalJob,
    RunManifest,
    Snapshot,
    SnapshotEntry,
    TrainResult,
    evaluate_grid,
    forgetting_eval,
    reconstruct,
    train_iterative,
    train_simultaneous,
    train_two_stage,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class ConfigProblem(Exception):
    """Configuration could not be assembled; carries every message at once."""

    def __init__(self, messages: Sequence[str]):
        super().__init__("; ".join(messages))
        self.messages = list(messages)


def setup_logging(settings: LoggingSettings, level: Optional[str] = None) -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.file is not None:
        Path(settings.file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(RotatingFileHandler(settings.file, maxBytes=settings.max_size_mb * 1024 * 1024,
                                            backupCount=settings.backup_count))
    logging.basicConfig(level=(level or settings.level).upper(), format=LOG_FORMAT, handlers=handlers, force=True)


def parse_overrides(pairs: Sequence[str]) -> Dict[str, Any]:
    """``section.key=value`` strings; values are parsed as YAML scalars or lists."""
    overrides, problems = {}, []
    for pair in pairs or ():
        key, sep, raw = pair.partition("=")
        if not sep or not key.strip():
            problems.append(f"--set {pair!r}: expected section.key=value")
            continue
        try:
            overrides[key.strip()] = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            problems.append(f"--set {key}: {e}")
    if problems:
        raise ConfigProblem(problems)
    return overrides


def _validation_messages(err: ValidationError) -> List[str]:
    return [f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}" for e in err.errors()]


def resolve_config(args: argparse.Namespace, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Config file (or ``base``) + dedicated flags + ``--set`` overrides, validated once."""
    overrides = parse_overrides(getattr(args, "set", None))
    for flag, key in (("schedule", "train.schedule"), ("seed", "train.seed"), ("channel", "train.channel")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides.setdefault(key, value)
    if getattr(args, "output", None):
        overrides["output_dir"] = args.output
    try:
        cfg = base if base is not None else load_config(args.config)
        return cfg.with_overrides(overrides) if overrides else cfg
    except ValidationError as e:
        raise ConfigProblem(_validation_messages(e)) from e
    except (KeyError, FileNotFoundError, yaml.YAMLError) as e:
        raise ConfigProblem([str(e)]) from e


def image_shape(cfg: ExperimentConfig) -> Tuple[int, int, int]:
    return (3, cfg.data.patch_size, cfg.data.patch_size)


def build_models(cfg: ExperimentConfig) -> Tuple[ModelParams, ModelParams, List[ModelParams]]:
    """Fresh encoder, its mirror decoder and the roster decoders, all seeded by ``train.seed``."""
    enc = build_encoder(image_shape(cfg), cfg.train.rate, cfg.model.widths, cfg.train.seed)
    sym = build_symmetric_decoder(enc)
    decoders = [build_roster_decoder(kind, enc, cfg.model.depth_scale) for kind in cfg.roster]
    logger.info(f"Encoder {enc.param_count} params, latent {enc.latent_shape}; "
                f"decoders {', '.join(f'{d.name}={d.param_count}' for d in decoders)}")
    return enc, sym, decoders


def run_schedule(cfg: ExperimentConfig, train_data: ImageBatch) -> TrainResult:
    enc, sym, decoders = build_models(cfg)
    schedule = cfg.train.schedule
    logger.info(f"Training {schedule.value} on {len(train_data)} images, seed {cfg.train.seed}")
    if schedule == ScheduleKind.TWO_STAGE:
        return train_two_stage(enc, sym, decoders, train_data, cfg.train)
    if schedule == ScheduleKind.ITERATIVE:
        return train_iterative(enc, decoders, train_data, cfg.train)
    return train_simultaneous(enc, decoders, train_data, cfg.train)


def run_dir(cfg: ExperimentConfig) -> Path:
    return cfg.resolved_output_dir() / cfg.train.schedule.value


def _save(params: ModelParams, out_dir: Path, relpath: str, meta: Dict[str, Any]) -> Tuple[str, str]:
    checksum = save_checkpoint(params, out_dir / relpath, meta)
    return relpath, checksum


def write_run(result: TrainResult, cfg: ExperimentConfig, out_dir: Path) -> RunManifest:
    """Checkpoints, loss curve and manifest of a finished run."""
    manifest = RunManifest.for_config(cfg)
    meta = {"schedule": cfg.train.schedule.value, "seed": cfg.train.seed}
    manifest.add_checkpoint("encoder", *_save(result.encoder, out_dir, "checkpoints/encoder.ckpt", meta))
    if result.symmetric is not None:
        manifest.add_checkpoint("symmetric", *_save(result.symmetric, out_dir, "checkpoints/symmetric.ckpt", meta))
    for name, dec in result.decoders.items():
        manifest.add_checkpoint(name, *_save(dec, out_dir, f"checkpoints/decoder_{name}.ckpt", meta))
    for snap in result.snapshots:
        stem = f"snapshots/{snap.index:03d}_{snap.decoder}"
        snap_meta = dict(meta, snapshot=snap.index, cycle=snap.cycle, decoder=snap.decoder)
        enc_file, enc_sum = _save(snap.encoder, out_dir, f"{stem}_encoder.ckpt", snap_meta)
        dec_file, dec_sum = _save(snap.decoder_params, out_dir, f"{stem}_decoder.ckpt", snap_meta)
        manifest.snapshots.append(SnapshotEntry(index=snap.index, cycle=snap.cycle, decoder=snap.decoder,
                                                encoder_checksum=enc_sum, decoder_checksum=dec_sum,
                                                encoder_file=enc_file, decoder_file=dec_file))
    reporting.write_loss_csv(result.losses, out_dir / "losses.csv")
    manifest.loss_curve = "losses.csv"
    manifest.to_yaml(out_dir / MANIFEST_NAME)
    logger.info(f"Run written to {out_dir} ({len(manifest.checkpoints)} checkpoints, "
                f"{len(manifest.snapshots)} snapshots)")
    return manifest


def dump_last_good(err: NumericDivergenceError, out_dir: Path) -> List[Path]:
    written = []
    for name, params in err.last_good.items():
        path = out_dir / "last_good" / f"{name}.ckpt"
        save_checkpoint(params, path, {"diagnostics": err.diagnostics})
        written.append(path)
    return written


def load_run(path: Path) -> Tuple[RunManifest, ExperimentConfig, ModelParams, Dict[str, ModelParams]]:
    """Manifest, its config, the final encoder and every decoder checkpoint of a run directory."""
    manifest = RunManifest.from_yaml(path / MANIFEST_NAME)
    cfg = manifest.experiment_config()
    encoder = load_checkpoint(path / manifest.checkpoints["encoder"])
    decoders = {role: load_checkpoint(path / rel) for role, rel in manifest.checkpoints.items() if role != "encoder"}
    return manifest, cfg, encoder, decoders


def load_snapshots(path: Path, manifest: RunManifest) -> List[Snapshot]:
    snaps = []
    for entry in manifest.snapshots:
        if entry.encoder_file is None or entry.decoder_file is None:
            raise CheckpointError(f"snapshot {entry.index} of {path} has no checkpoint files")
        snaps.append(Snapshot(entry.index, entry.cycle, entry.decoder,
                              load_checkpoint(path / entry.encoder_file),
                              load_checkpoint(path / entry.decoder_file)))
    return snaps


def _eval_decoders(cfg: ExperimentConfig, decoders: Dict[str, ModelParams]) -> Dict[str, ModelParams]:
    keep = {name: dec for name, dec in decoders.items() if name != DecoderKind.SYMMETRIC.value}
    if cfg.model.evaluate_symmetric and DecoderKind.SYMMETRIC.value in decoders:
        keep[DecoderKind.SYMMETRIC.value] = decoders[DecoderKind.SYMMETRIC.value]
    return keep


def _snr_list(args: argparse.Namespace, cfg: ExperimentConfig) -> List[float]:
    return list(args.snr) if getattr(args, "snr", None) else list(cfg.report.eval_snr_db)


def _channel(args: argparse.Namespace, cfg: ExperimentConfig):
    channel = cfg.train.channel_config(cfg.train.snr_set_db[0])
    if getattr(args, "channel", None):
        channel = channel.model_copy(update={"kind": ChannelKind(args.channel)})
    return channel


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    out_dir = run_dir(cfg)
    train_data, _ = load_datasets(cfg.data)
    try:
        result = run_schedule(cfg, train_data)
    except NumericDivergenceError as e:
        for path in dump_last_good(e, out_dir):
            logger.error(f"Last good parameters saved to {path}")
        raise
    write_run(result, cfg, out_dir)
    telemetry.write_textfile(out_dir / "metrics.prom")
    print(f"Run written to {out_dir}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    path = Path(args.run)
    manifest, run_cfg, encoder, decoders = load_run(path)
    cfg = resolve_config(args, base=run_cfg)
    _, eval_data = load_datasets(cfg.data)
    channel = _channel(args, cfg)
    jobs = [EvalJob(name, encoder, dec) for name, dec in _eval_decoders(cfg, decoders).items()]
    records = evaluate_grid(jobs, eval_data, _snr_list(args, cfg), channel, manifest.schedule, seed=cfg.train.seed,
                            batch_size=cfg.report.eval_batch_size, workers=cfg.report.workers)
    out = Path(args.csv) if args.csv else path / f"eval_{channel.kind.value}.csv"
    reporting.write_eval_csv(records, out)
    telemetry.write_textfile(path / "metrics.prom")
    print(f"Eval CSV written to {out}")
    return EXIT_OK


def cmd_forgetting(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    if args.run:
        path = Path(args.run)
        manifest = RunManifest.from_yaml(path / MANIFEST_NAME)
        cfg = resolve_config(args, base=manifest.experiment_config())
        snapshots = load_snapshots(path, manifest)
        order = [name for name in manifest.checkpoints
                 if name not in ("encoder", DecoderKind.SYMMETRIC.value)]
    else:
        cfg = cfg.with_overrides({"train.schedule": ScheduleKind.ITERATIVE.value})
        path = run_dir(cfg)
        train_data, _ = load_datasets(cfg.data)
        result = run_schedule(cfg, train_data)
        write_run(result, cfg, path)
        snapshots, order = result.snapshots, list(result.decoders)
    _, eval_data = load_datasets(cfg.data)
    report = forgetting_eval(snapshots, order, eval_data, _snr_list(args, cfg), _channel(args, cfg),
                             seed=cfg.train.seed, batch_size=cfg.report.eval_batch_size,
                             workers=cfg.report.workers)
    out_dir = Path(args.out) if args.out else path / "forgetting"
    reporting.forgetting_outputs(report, out_dir)
    telemetry.write_textfile(out_dir / "metrics.prom")
    print(f"Forgetting report written to {out_dir}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    frames = [reporting.read_eval_csv(p) for p in args.csvs]
    out_dir = Path(args.out) if args.out else cfg.resolved_output_dir() / "compare"
    reporting.compare_outputs(frames, out_dir)
    print(f"Comparison written to {out_dir}")
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    """Original and reconstructed PNGs; noise matches the first eval batch."""
    path = Path(args.run)
    _, run_cfg, encoder, decoders = load_run(path)
    cfg = resolve_config(args, base=run_cfg)
    _, eval_data = load_datasets(cfg.data)
    count = args.count if args.count is not None else cfg.report.dump_reconstructions
    images = eval_data.head(min(count, len(eval_data)))
    channel = _channel(args, cfg)
    out_dir = Path(args.out) if args.out else path / "reconstructions"
    for i, pixels in enumerate(images.pixels):
        save_image(pixels, out_dir / "original" / f"{i:03d}.png")
    for name, dec in _eval_decoders(cfg, decoders).items():
        for snr in _snr_list(args, cfg):
            chan = channel.model_copy(update={"snr_db": float(snr)})
            rng = Rng(cfg.train.seed).child("eval", f"{float(snr):g}").child(0)
            out = reconstruct(encoder, dec, Tensor(images.pixels), snr, chan, rng)
            for i, pixels in enumerate(out.data):
                save_image(pixels, out_dir / name / f"snr{float(snr):g}" / f"{i:03d}.png")
    print(f"Reconstructions written to {out_dir}")
    return EXIT_OK


def cmd_print_defaults(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    sys.stdout.write(cfg.dump_yaml())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="Experiment YAML (default: $ANCHORKIT_CONFIG or built-ins)")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="Override a config key; repeatable")
    common.add_argument("--output", default=None, help="Output directory (relative to $ANCHORKIT_OUTPUT_ROOT)")
    common.add_argument("--log-level", dest="log_level", default=None)

    parser = argparse.ArgumentParser(prog="anchorkit", description="Multi-user semantic communication simulator")
    parser.add_argument("--version", action="version", version=f"anchorkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="Train the configured schedule")
    p.add_argument("--schedule", choices=[s.value for s in ScheduleKind], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--channel", choices=[c.value for c in ChannelKind], default=None)
    p.add_argument("--manifest", default=None, help="Rerun the configuration recorded in a run manifest")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="Evaluate a run's decoders")
    p.add_argument("--run", required=True, help="Run directory holding manifest.yaml")
    p.add_argument("--snr", type=float, nargs="+", default=None)
    p.add_argument("--channel", choices=[c.value for c in ChannelKind], default=None)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("forgetting", parents=[common], help="Forgetting matrix of an iterative run")
    p.add_argument("--run", default=None, help="Iterative run directory; trains one when omitted")
    p.add_argument("--snr", type=float, nargs="+", default=None)
    p.add_argument("--channel", choices=[c.value for c in ChannelKind], default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_forgetting)

    p = sub.add_parser("compare", parents=[common], help="Compare eval CSVs of several schedules")
    p.add_argument("csvs", nargs="+")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("reconstruct", parents=[common], help="Dump reconstructed PNGs")
    p.add_argument("--run", required=True)
    p.add_argument("--snr", type=float, nargs="+", default=None)
    p.add_argument("--channel", choices=[c.value for c in ChannelKind], default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("print-defaults", parents=[common], help="Print the resolved configuration as YAML")
    p.set_defaults(func=cmd_print_defaults)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        base = None
        if getattr(args, "manifest", None):
            try:
                base = RunManifest.from_yaml(args.manifest).experiment_config()
            except ValidationError as e:
                raise ConfigProblem(_validation_messages(e)) from e
        cfg = resolve_config(args, base=base)
    except ConfigProblem as e:
        for message in e.messages:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    setup_logging(cfg.logging, args.log_level)
    try:
        return args.func(args, cfg)
    except ConfigProblem as e:
        for message in e.messages:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as e:
        for message in _validation_messages(e):
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericDivergenceError, NumericError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except AnchorkitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

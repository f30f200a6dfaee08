"""Command-line interface for the viewpoint prediction simulator."""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional

from .config import ENV_PREFIX, get_config_dir, resolve_config, sample_config
from .errors import ConfigError, DataError
from .harness import run_experiment
from .model_store import get_model_store
from .outcome_log import (
    clear_outcome_log,
    format_outcomes_for_display,
    get_outcome_log_path,
    log_outcomes,
    read_outcomes,
)
from .report import emit_plot_data, write_report
from .traces import SynthConfig, load_dataset, synth_traces, write_traces

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

# run flag dest -> dotted config key
RUN_OVERRIDES = {
    "seed": "seed",
    "predictor": "predictor",
    "data": "data",
    "order": "train.order",
    "epochs": "train.epochs",
    "learning_rate": "train.learning_rate",
    "online_learning_rate": "online_learning_rate",
    "scheme": "retrans.scheme",
    "k_re": "retrans.k_re",
    "regime": "plan.regime",
    "kcross": "plan.k_cross",
    "window": "window.t_w",
    "offset": "window.d",
    "dims": "window.dims",
    "joint": "window.joint",
    "imputation": "imputation",
    "antennas": "channel.antennas",
    "cell_users": "channel.n_users",
    "videos": "synthetic.n_videos",
    "users_per_video": "synthetic.users_per_video",
    "slots": "synthetic.t_tot",
    "regime_shift": "synthetic.regime_shift",
    "shared_model": "shared_model",
    "compare_schemes": "compare_schemes",
    "sweep_window": "sweep_windows",
    "sweep_users": "sweep_users",
    "out": "out_dir",
}


def _int_list(text: str) -> tuple[int, ...]:
    values = tuple(int(v) for v in text.split(",") if v.strip())
    if not values:
        raise ConfigError("expected a comma-separated list of integers")
    return values


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _truthy(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def apply_env_defaults(parser: argparse.ArgumentParser, environ=None) -> None:
    """Use VIEWPOINT_SIM_<FLAG> variables as defaults for a parser's long options."""
    environ = os.environ if environ is None else environ
    defaults = {}
    for action in parser._actions:
        if not any(opt.startswith("--") for opt in action.option_strings):
            continue
        if action.dest in ("help", "config"):
            continue
        raw = environ.get(ENV_PREFIX + action.dest.upper())
        if raw is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            defaults[action.dest] = _truthy(raw)
        elif action.type is not None:
            try:
                defaults[action.dest] = action.type(raw)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"{ENV_PREFIX}{action.dest.upper()}={raw!r}: {e}") from None
        else:
            defaults[action.dest] = raw
    parser.set_defaults(**defaults)


def run_overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides = {}
    for dest, key in RUN_OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "synthetic", None):
        overrides["data"] = None
    if getattr(args, "no_offline", None):
        overrides["compare_offline"] = False
    return overrides


def cmd_init(args):
    """Initialize configuration directory and create sample config."""
    config_dir = get_config_dir()
    config_file = config_dir / "config.json"

    if config_file.exists() and not args.force:
        print(f"Config already exists: {config_file}")
        print("Use --force to overwrite")
        return 1

    with open(config_file, "w") as f:
        json.dump(sample_config(), f, indent=2, sort_keys=True)

    print(f"Created config file: {config_file}")
    print()
    print("Next steps:")
    print("1. Edit the config file (every key is shown at its default)")
    print("2. Run: viewpoint-sim run --synthetic")
    return 0


def cmd_status(args):
    """Show the resolved configuration and cache state."""
    config_dir = get_config_dir()
    config_file = config_dir / "config.json"

    print("viewpoint-sim status")
    print("=" * 40)
    print(f"Config directory: {config_dir}")
    print(f"{'✓' if config_file.exists() else '✗'} Config file {config_file}")
    try:
        cfg = resolve_config(args.config)
    except (ConfigError, FileNotFoundError) as e:
        print(f"✗ Config error: {e}")
        return EXIT_CONFIG

    print(f"  Predictor: {cfg.predictor.value}")
    print(f"  Scheme: {cfg.scheme.value}")
    print(f"  Folds: {cfg.plan.k_cross} ({cfg.plan.regime.value})")
    print(f"  Window: t_w={cfg.window.t_w}, d={cfg.window.d}")
    print(f"  Data: {cfg.data or 'synthetic'}")
    print(f"  Output: {cfg.out_dir}")
    print()

    stats = get_model_store().get_stats()
    print(f"Model cache: {stats['models']} model(s) in {stats['path']}")
    log_path = get_outcome_log_path(cfg.out_dir)
    if log_path.exists():
        print(f"✓ Outcome log {log_path}")
    else:
        print(f"✗ No outcome log in {cfg.out_dir}")
    return EXIT_OK


def cmd_synth(args):
    """Write a synthetic trace CSV."""
    try:
        synth = SynthConfig(args.videos, args.users_per_video, args.slots, args.regime_shift)
        dataset = synth_traces(
            synth.n_videos, synth.users_per_video, synth.t_tot, args.seed, synth.regime_shift
        )
        write_traces(dataset, args.out)
    except ConfigError as e:
        print(f"Error: {e}")
        return EXIT_CONFIG
    print(f"Wrote {len(dataset)} traces ({synth.t_tot} slots each) to {args.out}")
    return EXIT_OK


def cmd_run(args):
    """Run a cross-validated experiment and write its artifacts."""
    try:
        cfg = resolve_config(args.config).with_overrides(run_overrides(args))
        dataset = load_dataset(cfg.data, cfg.synthetic, cfg.seed)
        store = None if args.no_cache else get_model_store()
        report = run_experiment(dataset, cfg, store)
        out_dir = Path(cfg.out_dir)
        write_report(report, out_dir)
        emit_plot_data(report, out_dir)
        log_outcomes(report.outcome_records, get_outcome_log_path(out_dir))
    except ConfigError as e:
        print(f"Error: {e}")
        return EXIT_CONFIG
    except (DataError, OSError) as e:
        print(f"Error: {e}")
        return EXIT_DATA

    print(
        f"Average prediction error ({report.predictor}, {report.scheme}): "
        f"{report.mse:.6g} deg^2, normalized {report.normalized_error:.2%}"
    )
    if report.offline_mse is not None:
        print(f"Offline (frozen) error: {report.offline_mse:.6g} deg^2")
    for scheme, fraction in sorted(report.delivered_fraction.items()):
        print(f"  {scheme}: {fraction:.1%} of samples delivered")
    for point in report.window_sweep:
        print(f"  t_w={point.value}: {point.mse:.6g} deg^2")
    for point in report.users_sweep:
        print(f"  {point.value} training users/video: {point.mse:.6g} deg^2")
    print(f"Results written to {out_dir}")
    return EXIT_OK


def cmd_log(args):
    """Show or clear a run's outcome log."""
    out_dir = args.out
    if out_dir is None:
        try:
            out_dir = resolve_config(args.config).out_dir
        except (ConfigError, FileNotFoundError) as e:
            print(f"Error: {e}")
            return EXIT_CONFIG
    log_path = get_outcome_log_path(out_dir)
    if args.clear:
        if clear_outcome_log(log_path):
            print(f"Cleared {log_path}")
            return EXIT_OK
        return 1
    entries = read_outcomes(log_path, limit=None)
    print(format_outcomes_for_display(entries, limit=args.limit))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="VR viewpoint prediction with online learning over a simulated uplink"
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More logging")
    subparsers = parser.add_subparsers(dest="command", help="Commands")

    # init
    init_parser = subparsers.add_parser("init", help="Create a sample config file")
    init_parser.add_argument("--force", action="store_true", help="Overwrite existing config")

    # status
    status_parser = subparsers.add_parser("status", help="Show configuration and caches")
    status_parser.add_argument("--config", help="Config file (default: config dir)")

    # synth
    synth_parser = subparsers.add_parser("synth", help="Write synthetic traces to CSV")
    synth_parser.add_argument("--out", required=True, help="Output CSV path")
    synth_parser.add_argument("--videos", type=int, default=4, help="Number of videos")
    synth_parser.add_argument("--users-per-video", type=int, default=8, help="Users per video")
    synth_parser.add_argument("--slots", type=int, default=300, help="Slots per trace")
    synth_parser.add_argument("--seed", type=int, default=0, help="Root seed")
    synth_parser.add_argument(
        "--regime-shift", action="store_true", help="Switch each user's path at mid-trace"
    )

    # run
    run_parser = subparsers.add_parser("run", help="Run an experiment")
    run_parser.add_argument("--config", help="Config file or saved report.json")
    source = run_parser.add_mutually_exclusive_group()
    source.add_argument("--data", help="Trace CSV")
    source.add_argument("--synthetic", action="store_true", default=None, help="Synthetic traces")
    run_parser.add_argument("--predictor", help="lr, nn, lstm or gru")
    run_parser.add_argument("--order", type=int, help="LR polynomial order")
    run_parser.add_argument("--scheme", help="genie, proactive or single-shot")
    run_parser.add_argument("--k-re", type=int, help="Repetitions per round")
    run_parser.add_argument("--regime", help="per-video or all-videos")
    run_parser.add_argument("--kcross", type=int, help="Number of folds")
    run_parser.add_argument("--window", type=int, help="Sliding window length t_w")
    run_parser.add_argument("--offset", type=int, help="Prediction offset d in slots")
    run_parser.add_argument("--dims", type=_str_list, help="Axes to predict, e.g. y or x,y,z")
    run_parser.add_argument("--joint", action="store_true", default=None, help="Joint-axis input")
    run_parser.add_argument("--imputation", help="hold or interpolate")
    run_parser.add_argument("--epochs", type=int, help="Offline training epochs")
    run_parser.add_argument("--learning-rate", type=float, help="Offline learning rate")
    run_parser.add_argument("--online-learning-rate", type=float, help="Online learning rate")
    run_parser.add_argument("--antennas", type=int, help="Base-station antennas M")
    run_parser.add_argument("--cell-users", type=int, help="Users sharing the cell")
    run_parser.add_argument("--videos", type=int, help="Synthetic videos")
    run_parser.add_argument("--users-per-video", type=int, help="Synthetic users per video")
    run_parser.add_argument("--slots", type=int, help="Synthetic slots per trace")
    run_parser.add_argument(
        "--regime-shift", action="store_true", default=None, help="Synthetic mid-trace shift"
    )
    run_parser.add_argument(
        "--shared-model", action="store_true", default=None, help="One online model per fold"
    )
    run_parser.add_argument(
        "--compare-schemes", action="store_true", default=None, help="Run every scheme"
    )
    run_parser.add_argument(
        "--no-offline", action="store_true", default=None, help="Skip the frozen-model baseline"
    )
    run_parser.add_argument("--seed", type=int, help="Root seed")
    run_parser.add_argument("--sweep-window", type=_int_list, help="Window sizes, e.g. 5,10,20")
    run_parser.add_argument("--sweep-users", type=_int_list, help="Training users per video")
    run_parser.add_argument("--out", help="Output directory")
    run_parser.add_argument(
        "--no-cache", action="store_true", default=None, help="Do not reuse trained models"
    )

    # log
    log_parser = subparsers.add_parser("log", help="Show a run's uplink outcome log")
    log_parser.add_argument("--out", help="Run output directory (default: from config)")
    log_parser.add_argument("--config", help="Config file")
    log_parser.add_argument("--limit", type=int, default=20, help="Records to list")
    log_parser.add_argument("--clear", action="store_true", help="Delete the log")

    parser.set_defaults(_subparsers={"synth": synth_parser, "run": run_parser})
    return parser


def main(argv: Optional[list[str]] = None):
    """Main CLI entry point."""
    parser = build_parser()
    sub_parsers = parser.get_default("_subparsers")
    try:
        for sub in sub_parsers.values():
            apply_env_defaults(sub)
    except ConfigError as e:
        print(f"Error: {e}")
        sys.exit(EXIT_CONFIG)

    args = parser.parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO
    if args.verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "init":
        sys.exit(cmd_init(args))
    elif args.command == "status":
        sys.exit(cmd_status(args))
    elif args.command == "synth":
        sys.exit(cmd_synth(args))
    elif args.command == "run":
        sys.exit(cmd_run(args))
    elif args.command == "log":
        sys.exit(cmd_log(args))
    else:
        parser.print_help()
        sys.exit(0)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""
Acceptance checks for viewpoint-sim.
Runs the latency, gradient, channel, scheme, online/offline, predictor-ordering and
determinism checks in sequence and prints a PASS/FAIL summary.

    python scripts/acceptance.py            # full seed counts
    python scripts/acceptance.py --quick    # fewer seeds, smaller traces
"""

import argparse
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from viewpoint_sim.channel import (  # noqa: E402
    ChannelConfig,
    attempt_success,
    draw_fading,
    mrc_sinr_batch,
    success_probability,
    uplink_rate,
)
from viewpoint_sim.config import ExperimentConfig  # noqa: E402
from viewpoint_sim.core import make_windowed_examples  # noqa: E402
from viewpoint_sim.harness import run_experiment  # noqa: E402
from viewpoint_sim.report import emit_plot_data, write_report  # noqa: E402
from viewpoint_sim.retransmission import proactive_latency  # noqa: E402
from viewpoint_sim.rng import substream  # noqa: E402
from viewpoint_sim.traces import synth_traces  # noqa: E402
from viewpoint_sim.training import TrainConfig, grad_check, train_offline  # noqa: E402

OUTPUT_LOG = []


def log(msg: str, indent: int = 0):
    """Log message to console and output log."""
    prefix = "  " * indent
    print(f"{prefix}{msg}")
    OUTPUT_LOG.append(f"{prefix}{msg}")


def check(name: str, passed: bool, detail: str, started: float) -> bool:
    log(f"\n{'=' * 60}")
    log(f"CHECK: {name}")
    log(f"{'=' * 60}")
    log(detail)
    log(f"  [{'PASS' if passed else 'FAIL'}] ({time.perf_counter() - started:.1f}s)")
    return passed


def _experiment(seed: int, slots: int, **overrides) -> ExperimentConfig:
    data = {
        "seed": seed,
        "synthetic": {"n_videos": 1, "users_per_video": 10, "t_tot": slots},
        "plan": {"k_cross": 5},
    }
    data.update(overrides)
    return ExperimentConfig.from_dict(data)


def _dataset(cfg: ExperimentConfig):
    s = cfg.synthetic
    return synth_traces(s.n_videos, s.users_per_video, s.t_tot, cfg.seed, s.regime_shift)


def check_latency() -> bool:
    started = time.perf_counter()
    fixed = [proactive_latency(1, 1, 8), proactive_latency(1, 8, 8), proactive_latency(2, 1, 8)]
    recurrence = all(
        proactive_latency(m, k_re, k_re) + 4 == proactive_latency(m + 1, 1, k_re)
        for m in range(1, 101)
        for k_re in range(1, 17)
    )
    passed = fixed == [4, 11, 15] and recurrence
    return check("proactive latency", passed, f"  (1,1),(1,8),(2,1) -> {fixed}", started)


def check_gradients(seeds: int) -> bool:
    started = time.perf_counter()
    worst = {
        kind: max(grad_check(kind, seed=s) for s in range(seeds))
        for kind in ("lr", "nn", "lstm", "gru")
    }
    detail = "\n".join(f"  {kind}: max relative error {err:.2e}" for kind, err in worst.items())
    return check("gradient oracle", max(worst.values()) < 1e-4, detail, started)


def check_channel(n_draws: int) -> bool:
    started = time.perf_counter()
    lines = []
    passed = True
    for antennas in (1, 4, 30):
        cfg = ChannelConfig(antennas=antennas)
        x_th = cfg.sinr_threshold * cfg.noise_watts / cfg.tx_watts
        distance = (antennas / x_th) ** (1.0 / cfg.alpha)
        h = draw_fading([distance], cfg, substream(0, "acceptance", antennas), n_draws)
        sinr = mrc_sinr_batch(h, cfg.noise_watts, cfg.tx_watts, user=0)
        empirical = float(np.mean(attempt_success(uplink_rate(sinr, cfg), cfg)))
        expected = success_probability(distance, cfg)
        passed &= abs(empirical - expected) < 0.01
        lines.append(f"  M={antennas}: empirical {empirical:.4f} vs closed form {expected:.4f}")
    return check("channel oracle", passed, "\n".join(lines), started)


def check_scheme_dominance(seeds: int, slots: int) -> bool:
    started = time.perf_counter()
    failures = 0
    errors = {"genie": [], "proactive": [], "single-shot": []}
    for seed in range(seeds):
        cfg = _experiment(seed, slots, compare_schemes=True, compare_offline=False)
        report = run_experiment(_dataset(cfg), cfg)
        frac = report.delivered_fraction
        if not frac["genie"] == 1.0 >= frac["proactive"] >= frac["single-shot"]:
            failures += 1
        for scheme in errors:
            errors[scheme].append(report.scheme_mse[scheme])
    mean = {scheme: float(np.mean(v)) for scheme, v in errors.items()}
    ordered = (
        mean["genie"] <= mean["proactive"] * 1.01
        and mean["proactive"] <= mean["single-shot"] * 1.01
    )
    detail = f"  delivery-order violations: {failures}/{seeds}\n" + "\n".join(
        f"  {scheme}: mean error {value:.4g} deg^2" for scheme, value in mean.items()
    )
    return check("scheme dominance", failures == 0 and ordered, detail, started)


def check_online_and_lr(seeds: int, slots: int) -> tuple[bool, bool]:
    started = time.perf_counter()
    online, offline, lr = [], [], []
    for seed in range(seeds):
        synthetic = {"n_videos": 1, "users_per_video": 10, "t_tot": slots, "regime_shift": True}
        cfg = _experiment(seed, slots, synthetic=synthetic)
        dataset = _dataset(cfg)
        gru = run_experiment(dataset, cfg)
        online.append(gru.mse)
        offline.append(gru.offline_mse)
        lr_cfg = cfg.with_overrides({"predictor": "lr", "train.order": 15})
        lr.append(run_experiment(dataset, lr_cfg).mse)
    m_on, m_off, m_lr = (float(np.mean(v)) for v in (online, offline, lr))
    gain = 1.0 - m_on / m_off
    first = check(
        "online beats frozen offline",
        gain >= 0.2,
        f"  online GRU {m_on:.4g}, offline GRU {m_off:.4g} deg^2 ({gain:.1%} lower)",
        started,
    )
    second = check(
        "15-order LR trails GRU",
        m_lr >= 1.5 * m_on,
        f"  LR {m_lr:.4g} vs GRU {m_on:.4g} deg^2 ({m_lr / m_on - 1.0:.1%} higher)",
        started,
    )
    return first, second


def check_offline_ordering(seeds: int, slots: int) -> bool:
    started = time.perf_counter()
    ordered = 0
    base = _experiment(0, slots)
    for seed in range(seeds):
        dataset = synth_traces(1, 10, slots, seed)
        examples = [ex for tr in dataset for ex in make_windowed_examples(tr, base.window, "y")]
        train_cfg = TrainConfig(seed=seed)
        final = {
            kind: train_offline(kind, examples, train_cfg, ("acceptance", seed)).epoch_losses[-1]
            for kind in ("gru", "lstm", "nn")
        }
        if final["gru"] <= final["lstm"] <= final["nn"]:
            ordered += 1
        log(f"  seed {seed}: " + ", ".join(f"{k} {v:.4g}" for k, v in final.items()), indent=1)
    return check(
        "offline loss ordering",
        ordered >= 0.7 * seeds,
        f"  GRU <= LSTM <= NN on {ordered}/{seeds} seeds",
        started,
    )


def check_determinism(slots: int) -> bool:
    started = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        cfg = _experiment(7, slots, out_dir=tmp, compare_schemes=True, sweep_windows=[5, 10])
        snapshots = []
        for _ in range(2):
            report = run_experiment(_dataset(cfg), cfg)
            write_report(report, tmp)
            emit_plot_data(report, tmp)
            snapshots.append({p.name: p.read_bytes() for p in Path(tmp).iterdir()})
    passed = snapshots[0] == snapshots[1]
    return check("determinism", passed, f"  {len(snapshots[0])} files compared", started)


def run_checks(quick: bool) -> int:
    seeds = 3 if quick else 20
    slots = 120 if quick else 300
    log("viewpoint-sim acceptance")
    log(f"Seeds: {seeds}, slots per trace: {slots}")

    results = [
        check_latency(),
        check_gradients(3 if quick else 10),
        check_channel(20_000 if quick else 100_000),
        check_scheme_dominance(seeds, slots),
        *check_online_and_lr(seeds, slots),
        check_offline_ordering(seeds, slots),
        check_determinism(slots),
    ]

    passed = sum(results)
    log(f"\n{'=' * 60}")
    log(f"SUMMARY: {passed} passed, {len(results) - passed} failed")
    log(f"{'=' * 60}")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--quick", action="store_true", help="Fewer seeds, shorter traces")
    sys.exit(run_checks(parser.parse_args().quick))

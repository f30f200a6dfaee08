"""Per-slot uplink outcome log.

One JSON object per line, written to ``outcomes.jsonl`` in a run's output directory.
Each record carries: fold, video_id, user_id, slot, scheme, success, rounds,
repetition, latency_ttis, attempts, updated, and actual_<axis> / predicted_<axis>
for every predicted axis. There are no wall-clock timestamps, so two runs with the
same config write identical files.
"""

import json
import logging
import threading
from collections import Counter
from pathlib import Path
from typing import Any, Iterable, Optional

logger = logging.getLogger(__name__)

OUTCOME_LOG_NAME = "outcomes.jsonl"
_log_lock = threading.Lock()


def get_outcome_log_path(out_dir: str | Path) -> Path:
    """Outcome log file inside an output directory."""
    return Path(out_dir) / OUTCOME_LOG_NAME


def log_outcomes(records: Iterable[dict[str, Any]], path: str | Path, append: bool = False) -> int:
    """Write outcome records; replaces the file unless ``append``. Returns the count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with _log_lock:
        with open(path, "a" if append else "w", encoding="utf-8", newline="\n") as f:
            for record in records:
                f.write(json.dumps(record, sort_keys=True) + "\n")
                count += 1
    logger.debug(f"Wrote {count} outcome records to {path}")
    return count


def read_outcomes(path: str | Path, limit: Optional[int] = 50) -> list[dict]:
    """Most recent records first; malformed lines are skipped."""
    path = Path(path)
    if not path.exists():
        return []

    entries = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    try:
                        entries.append(json.loads(line))
                    except json.JSONDecodeError:
                        continue
    except OSError as e:
        logger.warning(f"Failed to read outcome log: {e}")
        return []

    if limit is not None:
        entries = entries[-limit:]
    return entries[::-1]


def summarize_outcomes(entries: list[dict]) -> dict[str, dict[str, float]]:
    """Per-scheme delivered fraction and mean latency of successful deliveries."""
    totals: Counter = Counter()
    delivered: Counter = Counter()
    latency: Counter = Counter()
    for entry in entries:
        scheme = entry.get("scheme", "unknown")
        totals[scheme] += 1
        if entry.get("success"):
            delivered[scheme] += 1
            latency[scheme] += entry.get("latency_ttis", 0)
    return {
        scheme: {
            "slots": totals[scheme],
            "delivered_fraction": delivered[scheme] / totals[scheme],
            "mean_latency_ttis": latency[scheme] / delivered[scheme] if delivered[scheme] else 0.0,
        }
        for scheme in sorted(totals)
    }


def format_outcomes_for_display(entries: list[dict], limit: int = 20) -> str:
    """Human-readable listing of outcome records."""
    if not entries:
        return "No outcome records found."

    lines = [f"Uplink outcomes ({len(entries)} records):"]
    lines.append("-" * 60)
    for scheme, stats in summarize_outcomes(entries).items():
        lines.append(
            f"{scheme}: {stats['delivered_fraction']:.1%} delivered over {stats['slots']} slots, "
            f"mean latency {stats['mean_latency_ttis']:.2f} TTIs"
        )
    lines.append("")

    for entry in entries[:limit]:
        video, user = entry.get("video_id", "?"), entry.get("user_id", "?")
        where = f"v{video}/u{user} t={entry.get('slot', '?')}"
        scheme = entry.get("scheme", "unknown")
        if entry.get("success"):
            status = (
                f"OK round {entry.get('rounds')} rep {entry.get('repetition')}"
                f" ({entry.get('latency_ttis')} TTIs)"
            )
        else:
            status = f"FAILED after {entry.get('attempts')} attempt(s)"
        lines.append(f"[{scheme}] {where}: {status}")

    if len(entries) > limit:
        lines.append(f"... {len(entries) - limit} more records (use --limit N for more)")
    return "\n".join(lines)


def clear_outcome_log(path: str | Path) -> bool:
    """Delete an outcome log; True on success."""
    try:
        path = Path(path)
        if path.exists():
            path.unlink()
        return True
    except OSError as e:
        logger.warning(f"Failed to clear outcome log: {e}")
        return False

"""Benchmark harness: event emulator, delay and throughput experiments.

The emulator replays a charging-event-shaped record stream at a fixed
frequency (or unthrottled). The delay benchmark measures per-message
engine-ingress to engine-egress latency across a list of rates; the
throughput benchmark fires messages as fast as possible with and without
the anonymization stage and reports the ratio. Results serialize to
plot-ready CSV tables.
"""

from __future__ import annotations

import csv
import json
import random
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator

from .categorizer import CategoryDictionary, encode
from .engine import Engine
from .model import AnonConfig, Message, ReductionConfig
from .reduction import Drop, apply_pipeline

_MODEL_NAMES = [
    "e-tron 55", "model 3", "leaf", "zoe", "ioniq 5", "id.4",
    "ev6", "bolt", "i3", "taycan", "mustang mach-e", "kona",
]


@dataclass(frozen=True)
class EmulatorSpec:
    """Synthetic charging-event stream parameters.

    ``rate`` is messages per second; 0 means unthrottled. Generation is
    deterministic under ``seed``.
    """

    count: int
    rate: float = 0.0
    n_stations: int = 12
    n_vendors: int = 4
    n_persons: int = 25
    n_models: int = 6
    seed: int = 0


def generate_events(spec: EmulatorSpec) -> Iterator[dict]:
    """Yield ``count`` records, paced at ``rate`` when throttled."""
    rng = random.Random(spec.seed)
    start = time.monotonic()
    for i in range(spec.count):
        if spec.rate > 0:
            target = start + i / spec.rate
            now = time.monotonic()
            if target > now:
                time.sleep(target - now)
        yield {
            "station_id": rng.randrange(spec.n_stations),
            "vendor_id": rng.randrange(spec.n_vendors),
            "person_id": f"p{rng.randrange(spec.n_persons)}",
            "vehicle_model": _MODEL_NAMES[rng.randrange(min(spec.n_models, len(_MODEL_NAMES)))],
            "energy_kwh": round(rng.uniform(1.0, 80.0), 3),
            "timestamp": i,
        }


def default_bench_config() -> AnonConfig:
    """Parameters used when the caller does not supply a config."""
    return AnonConfig(
        k=5,
        delta=50,
        beta=10,
        mu=20,
        quasi_identifiers=("station_id", "vendor_id"),
        sensitive_attribute="energy_kwh",
        identifier_attribute="person_id",
    )


# ---------------------------------------------------------------------------
# Delay statistics
# ---------------------------------------------------------------------------


def quantile(sorted_values: list[float], q: float) -> float:
    """Linear interpolation between closest ranks on pre-sorted data."""
    if not sorted_values:
        raise ValueError("quantile of empty sample")
    if len(sorted_values) == 1:
        return sorted_values[0]
    pos = (len(sorted_values) - 1) * q
    lo = int(pos)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


@dataclass(frozen=True)
class DelayStats:
    """Boxplot-style summary of per-message delays (seconds)."""

    n: int
    mean: float
    median: float
    p25: float
    p75: float
    lo_whisker: float
    hi_whisker: float
    n_outliers: int

    @staticmethod
    def from_samples(delays: list[float]) -> "DelayStats":
        ordered = sorted(delays)
        p25 = quantile(ordered, 0.25)
        p75 = quantile(ordered, 0.75)
        iqr = p75 - p25
        fence_lo = p25 - 1.5 * iqr
        fence_hi = p75 + 1.5 * iqr
        inside = [v for v in ordered if fence_lo <= v <= fence_hi]
        # whiskers sit on the most extreme samples still inside the fences
        lo_whisker = inside[0] if inside else p25
        hi_whisker = inside[-1] if inside else p75
        return DelayStats(
            n=len(ordered),
            mean=sum(ordered) / len(ordered),
            median=quantile(ordered, 0.5),
            p25=p25,
            p75=p75,
            lo_whisker=lo_whisker,
            hi_whisker=hi_whisker,
            n_outliers=len(ordered) - len(inside),
        )


@dataclass(frozen=True)
class ThroughputSeries:
    """Per-second processed-message counts plus a moving window average."""

    counts: list[int]
    window_seconds: int
    window_avg: list[float]
    elapsed_seconds: float

    @staticmethod
    def from_counts(
        counts: list[int],
        window_seconds: int = 10,
        elapsed_seconds: float | None = None,
    ) -> "ThroughputSeries":
        avg = []
        for i in range(len(counts)):
            window = counts[max(0, i + 1 - window_seconds): i + 1]
            avg.append(sum(window) / len(window))
        if elapsed_seconds is None:
            elapsed_seconds = float(len(counts))
        return ThroughputSeries(
            counts=counts,
            window_seconds=window_seconds,
            window_avg=avg,
            elapsed_seconds=elapsed_seconds,
        )

    def mean(self) -> float:
        """Mean throughput in messages per second of wall time."""
        if not self.counts or self.elapsed_seconds <= 0:
            return 0.0
        return sum(self.counts) / self.elapsed_seconds


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def _run_stream(
    spec: EmulatorSpec,
    anon: AnonConfig | None,
    red: ReductionConfig,
) -> tuple[list[float], list[int], int, float]:
    """Drive the reduction/categorizer/engine stages in-process.

    Returns (per-message delays in seconds, per-second processed counts,
    ingested count, elapsed seconds). With ``anon`` None the engine stage
    is bypassed.
    """
    engine = Engine(anon) if anon is not None else None
    dictionary = CategoryDictionary()
    delays: list[float] = []
    counts: list[int] = []
    start = time.monotonic()
    seq = 0
    ingested = 0

    def bucket(n: int = 1) -> None:
        second = int(time.monotonic() - start)
        while len(counts) <= second:
            counts.append(0)
        counts[second] += n

    for record in generate_events(spec):
        ingested += 1
        arrival = time.monotonic_ns()
        msg = Message(seq=seq, arrival_ns=arrival, attributes=record)
        outcome = apply_pipeline(msg, red)
        if isinstance(outcome, Drop):
            continue
        if engine is None:
            bucket()
            delays.append((time.monotonic_ns() - arrival) / 1e9)
            seq += 1
            continue
        msg = encode(outcome, dictionary, engine.cfg.non_categorized_attributes)
        msg = replace(msg, seq=seq)
        seq += 1
        for rt in engine.ingest(msg):
            delays.append((rt.release_ns - rt.arrival_ns) / 1e9)
            bucket()
    if engine is not None:
        for rt in engine.flush():
            delays.append((rt.release_ns - rt.arrival_ns) / 1e9)
            bucket()
    return delays, counts, ingested, time.monotonic() - start


def bench_delay(
    rates: list[float],
    anon: AnonConfig,
    red: ReductionConfig = ReductionConfig(),
    count: int = 300,
    seed: int = 0,
) -> dict[float, DelayStats]:
    """One full pipeline run per rate; suppressed releases are included."""
    if not rates:
        raise ValueError("rates must be non-empty")
    results = {}
    for rate in rates:
        spec = EmulatorSpec(count=count, rate=rate, seed=seed)
        delays, _counts, _ingested, _elapsed = _run_stream(spec, anon, red)
        results[rate] = DelayStats.from_samples(delays)
    return results


def bench_throughput(
    anon: AnonConfig | None,
    red: ReductionConfig = ReductionConfig(),
    count: int = 50_000,
    seed: int = 0,
    window_seconds: int = 10,
) -> ThroughputSeries:
    """Unthrottled run; pass ``anon=None`` for the engine-bypassed baseline."""
    spec = EmulatorSpec(count=count, rate=0.0, seed=seed)
    _delays, counts, _ingested, elapsed = _run_stream(spec, anon, red)
    return ThroughputSeries.from_counts(counts, window_seconds, elapsed)


# ---------------------------------------------------------------------------
# Result files
# ---------------------------------------------------------------------------

DELAY_HEADER = ["rate", "median", "p25", "p75", "lo_whisker", "hi_whisker", "mean", "n_outliers"]
THROUGHPUT_HEADER = ["second", "count", "window_avg"]


def emit_delay_results(stats: dict[float, DelayStats], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(DELAY_HEADER)
        for rate in sorted(stats):
            s = stats[rate]
            writer.writerow(
                [rate, s.median, s.p25, s.p75, s.lo_whisker, s.hi_whisker, s.mean, s.n_outliers]
            )


def emit_throughput_results(series: ThroughputSeries, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(THROUGHPUT_HEADER)
        for second, (count, avg) in enumerate(zip(series.counts, series.window_avg)):
            writer.writerow([second, count, avg])


def read_delay_results(path: Path) -> dict[float, DelayStats]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[float(row["rate"])] = DelayStats(
                n=0,
                mean=float(row["mean"]),
                median=float(row["median"]),
                p25=float(row["p25"]),
                p75=float(row["p75"]),
                lo_whisker=float(row["lo_whisker"]),
                hi_whisker=float(row["hi_whisker"]),
                n_outliers=int(row["n_outliers"]),
            )
    return out


def write_events_file(spec: EmulatorSpec, path: Path) -> int:
    """Materialize an emulator stream as an NDJSON ingress file."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in generate_events(spec):
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
            n += 1
    return n

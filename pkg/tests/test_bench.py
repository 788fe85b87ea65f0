import random
import time
from dataclasses import replace

import numpy as np
import pytest

from streamanon import ReductionConfig
from streamanon.bench import (
    DelayStats,
    EmulatorSpec,
    ThroughputSeries,
    bench_delay,
    bench_throughput,
    default_bench_config,
    emit_delay_results,
    emit_throughput_results,
    generate_events,
    quantile,
    read_delay_results,
    write_events_file,
)


class TestEmulator:
    def test_same_seed_identical_streams(self):
        spec = EmulatorSpec(count=200, seed=7)
        a = list(generate_events(spec))
        b = list(generate_events(spec))
        assert a == b

    def test_different_seed_differs(self):
        a = list(generate_events(EmulatorSpec(count=50, seed=1)))
        b = list(generate_events(EmulatorSpec(count=50, seed=2)))
        assert a != b

    def test_single_person(self):
        events = list(generate_events(EmulatorSpec(count=30, n_persons=1)))
        assert {e["person_id"] for e in events} == {"p0"}

    def test_record_shape(self):
        (event,) = generate_events(EmulatorSpec(count=1))
        assert set(event) == {
            "station_id", "vendor_id", "person_id", "vehicle_model", "energy_kwh", "timestamp",
        }
        assert event["energy_kwh"] > 0

    def test_rate_pacing(self):
        # 51 events at 100/s should take about half a second
        start = time.monotonic()
        list(generate_events(EmulatorSpec(count=51, rate=100)))
        elapsed = time.monotonic() - start
        assert 0.4 <= elapsed <= 1.5

    def test_write_events_file(self, tmp_path):
        path = tmp_path / "events.ndjson"
        n = write_events_file(EmulatorSpec(count=25, seed=3), path)
        assert n == 25
        assert len(path.read_text().splitlines()) == 25


class TestQuantiles:
    def test_against_numpy_oracle(self):
        rng = random.Random(0)
        for _ in range(50):
            sample = [rng.uniform(-10, 10) for _ in range(rng.randint(1, 40))]
            ordered = sorted(sample)
            for q in (0.0, 0.25, 0.5, 0.75, 1.0):
                assert quantile(ordered, q) == pytest.approx(
                    float(np.percentile(sample, q * 100)), abs=1e-9
                )

    def test_delay_stats_against_sort_based_oracle(self):
        rng = random.Random(1)
        sample = [rng.gauss(1.0, 0.3) for _ in range(500)] + [5.0, 6.0]
        stats = DelayStats.from_samples(sample)
        p25 = float(np.percentile(sample, 25))
        p75 = float(np.percentile(sample, 75))
        iqr = p75 - p25
        inside = [v for v in sample if p25 - 1.5 * iqr <= v <= p75 + 1.5 * iqr]
        assert stats.p25 == pytest.approx(p25)
        assert stats.p75 == pytest.approx(p75)
        assert stats.median == pytest.approx(float(np.percentile(sample, 50)))
        assert stats.mean == pytest.approx(float(np.mean(sample)))
        assert stats.lo_whisker == pytest.approx(min(inside))
        assert stats.hi_whisker == pytest.approx(max(inside))
        assert stats.n_outliers == len(sample) - len(inside)

    def test_quartile_ordering(self):
        stats = DelayStats.from_samples([3.0, 1.0, 2.0, 9.0, 0.5])
        assert stats.p25 <= stats.median <= stats.p75


class TestThroughputSeries:
    def test_window_average_bounded_by_peak(self):
        series = ThroughputSeries.from_counts([10, 50, 30, 0, 20], window_seconds=3)
        assert max(series.window_avg) <= max(series.counts)

    def test_window_average_values(self):
        series = ThroughputSeries.from_counts([10, 20, 30, 40], window_seconds=2)
        assert series.window_avg == [10.0, 15.0, 25.0, 35.0]

    def test_empty(self):
        series = ThroughputSeries.from_counts([])
        assert series.mean() == 0.0


class TestExperiments:
    def test_unthrottled_delay_stats_well_formed(self):
        stats = bench_delay([0.0], default_bench_config(), count=300)
        s = stats[0.0]
        assert s.n > 0
        assert s.p25 <= s.median <= s.p75

    def test_k1_immediate_release(self):
        cfg = replace(default_bench_config(), k=1, delta=1)
        stats = bench_delay([0.0], cfg, count=500)
        # releases happen on the very next arrival, so delays are tiny
        assert stats[0.0].median < 0.05

    def test_empty_rates_rejected(self):
        with pytest.raises(ValueError):
            bench_delay([], default_bench_config())

    def test_throughput_zero_count_empty_series(self):
        series = bench_throughput(default_bench_config(), count=0)
        assert series.counts == []

    def test_anonymized_not_faster_than_baseline(self):
        red = ReductionConfig()
        anonymized = bench_throughput(default_bench_config(), red, count=20_000)
        baseline = bench_throughput(None, red, count=20_000)
        assert anonymized.mean() <= baseline.mean() * 1.05  # small scheduling slack


class TestResultFiles:
    def test_delay_csv_rows(self, tmp_path):
        stats = {
            15.0: DelayStats(10, 1.0, 0.9, 0.5, 1.5, 0.1, 2.0, 1),
            30.0: DelayStats(10, 0.8, 0.7, 0.4, 1.2, 0.1, 1.8, 0),
            60.0: DelayStats(10, 0.5, 0.4, 0.2, 0.9, 0.0, 1.1, 2),
        }
        path = tmp_path / "delay.csv"
        emit_delay_results(stats, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 4  # header + 3 rows
        assert lines[0].startswith("rate,")

    def test_throughput_csv_rows(self, tmp_path):
        series = ThroughputSeries.from_counts([5] * 60)
        path = tmp_path / "tp.csv"
        emit_throughput_results(series, path)
        assert len(path.read_text().splitlines()) == 61

    def test_delay_round_trip(self, tmp_path):
        stats = {
            15.0: DelayStats(10, 1.25, 0.875, 0.5, 1.5, 0.125, 2.0, 1),
            60.0: DelayStats(4, 0.5, 0.375, 0.25, 0.75, 0.0, 1.0, 0),
        }
        path = tmp_path / "delay.csv"
        emit_delay_results(stats, path)
        loaded = read_delay_results(path)
        assert set(loaded) == set(stats)
        for rate, s in stats.items():
            for field in ("mean", "median", "p25", "p75", "lo_whisker", "hi_whisker", "n_outliers"):
                assert getattr(loaded[rate], field) == getattr(s, field)

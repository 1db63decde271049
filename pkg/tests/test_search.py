"""Golden-section minimizer mechanics and the probe-cost pipeline."""

import csv
import math
from datetime import datetime

import numpy as np
import pytest

from tokon.datasets import Dataset, DatasetRecord, Granularity
from tokon.errors import AllForecastsFailed, EmptyInput
from tokon.forecasting import BackendConfig, BackendKind, Forecaster
from tokon.normalization import DomainStats, TimeSeries
from tokon.search import (
    CostKind,
    SearchConfig,
    evaluate_probe_cost,
    golden_ratio_conjugate,
    golden_section_minimize,
    golden_section_search,
    select_calibration,
    target_params_for_probe,
)

RHO = golden_ratio_conjugate()


class TestGoldenRatioConjugate:
    def test_value(self):
        assert golden_ratio_conjugate() == 0.6180339887498949

    def test_defining_identity(self):
        assert abs(RHO * RHO + RHO - 1.0) < 1e-15

    def test_reciprocal_identity(self):
        assert abs(1.0 / RHO - (1.0 + RHO)) < 1e-15


class TestMinimizer:
    def test_quadratic_converges(self):
        sigma, trace = golden_section_minimize(lambda d: (d - 300.0) ** 2, 0.0, 999.0, 1.0)
        assert abs(sigma - 300.0) <= 1.0
        assert len(trace.iterations) <= 16
        assert trace.converged
        assert trace.evaluations == 2 * len(trace.iterations)

    def test_interval_shrinks_by_rho(self):
        _, trace = golden_section_minimize(lambda d: (d - 300.0) ** 2, 0.0, 999.0, 1.0)
        for k, row in enumerate(trace.iterations):
            width = row.hi - row.lo
            assert width == pytest.approx(999.0 * RHO**k, rel=1e-9)

    def test_probe_ordering_invariant(self):
        _, trace = golden_section_minimize(lambda d: (d - 123.4) ** 2, 0.0, 999.0, 1.0)
        for row in trace.iterations:
            assert row.lo < row.probe_lower < row.probe_upper < row.hi

    def test_immediate_convergence_returns_midpoint(self):
        sigma, trace = golden_section_minimize(lambda d: d, 0.0, 999.0, 2000.0)
        assert sigma == 499.5
        assert trace.iterations == []
        assert trace.evaluations == 0

    def test_monotone_decreasing_cost_reaches_upper_bound(self):
        sigma, trace = golden_section_minimize(lambda d: 1.0 / d, 0.0, 999.0, 1.0)
        assert abs(sigma - 999.0) <= 1.0
        assert trace.converged

    def test_sigma_lies_in_final_interval(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            minimum = float(rng.uniform(0, 999))
            sigma, trace = golden_section_minimize(
                lambda d: (d - minimum) ** 2, 0.0, 999.0, 1.0
            )
            last = trace.iterations[-1]
            final_width = (last.hi - last.lo) * RHO
            assert final_width <= 1.0 + 1e-9
            assert abs(sigma - minimum) <= 1.0

    def test_max_iterations_cap(self):
        sigma, trace = golden_section_minimize(
            lambda d: (d - 300.0) ** 2, 0.0, 999.0, 1e-12, max_iterations=5
        )
        assert len(trace.iterations) == 5
        assert not trace.converged
        assert sigma == trace.final_sigma_t

    def test_best_probe_recorded(self):
        _, trace = golden_section_minimize(lambda d: (d - 300.0) ** 2, 0.0, 999.0, 1.0)
        assert trace.best_cost == min(
            min(r.cost_lower, r.cost_upper) for r in trace.iterations
        )

    def test_inverted_rule_moves_away_from_better_probe(self):
        # Cost favors the upper probe; the inverted rule then clips the
        # interval to [lo, probe_lower], discarding it.
        cost = lambda d: (d - 700.0) ** 2
        _, trace = golden_section_minimize(
            cost, 0.0, 999.0, 1.0, max_iterations=1, inverted_update_rule=True
        )
        row = trace.iterations[0]
        assert row.cost_upper < row.cost_lower
        assert trace.final_sigma_t == pytest.approx((0.0 + row.probe_lower) / 2)

    def test_default_rule_keeps_better_probe(self):
        cost = lambda d: (d - 700.0) ** 2
        _, trace = golden_section_minimize(
            cost, 0.0, 999.0, 1.0, max_iterations=1, inverted_update_rule=False
        )
        row = trace.iterations[0]
        assert trace.final_sigma_t == pytest.approx((row.probe_lower + 999.0) / 2)

    def test_trace_csv_export(self, tmp_path):
        _, trace = golden_section_minimize(lambda d: (d - 300.0) ** 2, 0.0, 999.0, 1.0)
        out = tmp_path / "trace.csv"
        trace.write_csv(out)
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "iteration", "lo", "hi", "probe_lower", "probe_upper",
            "cost_lower", "cost_upper",
        ]
        assert len(rows) == 1 + len(trace.iterations)
        assert float(rows[1][2]) == 999.0


def oracle_dataset(n_series=5, horizon=4, mean=5.0):
    """Targets sit at the domain mean so oracle cost is an exact 1/delta curve."""
    rng = np.random.default_rng(0)
    records = []
    for i in range(n_series):
        context = tuple(float(v) for v in rng.normal(mean, 2.0, size=8))
        records.append(
            DatasetRecord(
                id=f"cal-{i}",
                granularity=Granularity.HOURLY,
                start_date=datetime(2007, 1, 1 + i),
                context=TimeSeries(context),
                target=TimeSeries((mean,) * horizon),
            )
        )
    return Dataset(name="synthetic", horizon=horizon, records=records)


STATS = DomainStats(mean=5.0, std_dev=2.0, sample_count=40)


def make_config(**kwargs):
    defaults = dict(calibration_ids=tuple(f"cal-{i}" for i in range(5)))
    defaults.update(kwargs)
    return SearchConfig(**defaults)


class TestSearchConfig:
    def test_requires_calibration_ids(self):
        with pytest.raises(EmptyInput):
            SearchConfig(calibration_ids=())

    def test_target_mean_is_interval_midpoint(self):
        assert make_config().target_mean == 499.5
        assert make_config(initial_lo=100.0, initial_hi=200.0).target_mean == 150.0

    def test_probe_params(self):
        params = target_params_for_probe(24.57, make_config())
        assert params.target_mean == 499.5
        assert params.index_min == 0
        assert params.index_max == 999


class TestProbeCost:
    def test_oracle_cost_is_quantization_error(self):
        # Every target equals the mean, so each element's round-trip error
        # is exactly half a token step: cost = n * h * (0.5 * std / delta)^2.
        dataset = oracle_dataset()
        config = make_config()
        forecaster = Forecaster(BackendConfig(kind=BackendKind.QUANTIZING_ORACLE))
        delta = 100.0
        cost = evaluate_probe_cost(
            delta, dataset.records, STATS, forecaster, config
        )
        expected = 5 * 4 * (0.5 * STATS.std_dev / delta) ** 2
        assert cost == pytest.approx(expected, rel=1e-9)

    def test_oracle_cost_decreases_with_delta(self):
        dataset = oracle_dataset()
        config = make_config()
        forecaster = Forecaster(BackendConfig(kind=BackendKind.QUANTIZING_ORACLE))
        costs = [
            evaluate_probe_cost(d, dataset.records, STATS, forecaster, config)
            for d in (50.0, 200.0, 800.0)
        ]
        assert costs[0] > costs[1] > costs[2]

    def test_absolute_error_cost_kind(self):
        dataset = oracle_dataset()
        config = make_config(cost_kind=CostKind.SUM_ABSOLUTE_ERROR)
        forecaster = Forecaster(BackendConfig(kind=BackendKind.QUANTIZING_ORACLE))
        cost = evaluate_probe_cost(100.0, dataset.records, STATS, forecaster, config)
        assert cost == pytest.approx(5 * 4 * (0.5 * STATS.std_dev / 100.0), rel=1e-9)

    def test_failed_records_fall_back_to_naive_last(self, tmp_path):
        dataset = oracle_dataset(n_series=2)
        replay = tmp_path / "replay.tsv"
        replay.write_text("cal-0\t500, 500, 500, 500\n")  # cal-1 missing -> fails
        forecaster = Forecaster(
            BackendConfig(kind=BackendKind.REPLAY, replay_path=str(replay))
        )
        config = make_config(calibration_ids=("cal-0", "cal-1"))
        cost = evaluate_probe_cost(100.0, dataset.records, STATS, forecaster, config)
        rec1 = dataset.records[1]
        naive = rec1.context.values[-1]
        fallback_cost = sum((naive - t) ** 2 for t in rec1.target.values)
        assert cost >= fallback_cost

    def test_all_failed_raises(self, tmp_path):
        dataset = oracle_dataset(n_series=2)
        replay = tmp_path / "replay.tsv"
        replay.write_text("other\t1, 2, 3, 4\n")
        forecaster = Forecaster(
            BackendConfig(kind=BackendKind.REPLAY, replay_path=str(replay))
        )
        config = make_config(calibration_ids=("cal-0", "cal-1"))
        with pytest.raises(AllForecastsFailed):
            evaluate_probe_cost(100.0, dataset.records, STATS, forecaster, config)

    def test_rejects_nonpositive_delta(self):
        dataset = oracle_dataset()
        forecaster = Forecaster(BackendConfig(kind=BackendKind.QUANTIZING_ORACLE))
        with pytest.raises(ValueError):
            evaluate_probe_cost(0.0, dataset.records, STATS, forecaster, make_config())


class TestEndToEndSearch:
    def test_oracle_search_converges_to_upper_bound(self):
        dataset = oracle_dataset(n_series=5)
        config = make_config()
        forecaster = Forecaster(BackendConfig(kind=BackendKind.QUANTIZING_ORACLE))
        sigma, trace = golden_section_search(config, dataset, STATS, forecaster)
        assert abs(sigma - 999.0) <= config.epsilon
        assert trace.converged

    def test_select_calibration_preserves_dataset_order(self):
        dataset = oracle_dataset(n_series=5)
        picked = select_calibration(dataset, ["cal-3", "cal-1"])
        assert [r.id for r in picked] == ["cal-1", "cal-3"]

    def test_select_calibration_empty_match(self):
        dataset = oracle_dataset()
        with pytest.raises(EmptyInput):
            select_calibration(dataset, ["nope"])

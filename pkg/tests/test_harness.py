import numpy as np
import pytest

from gdcs.harness import (
    CurveRow,
    CurveTable,
    ExperimentConfig,
    NotBracketed,
    PartialSpec,
    aggregate,
    config_from_dict,
    config_to_dict,
    crossing_point,
    measurement_savings,
    read_curve_csv,
    run_sweep,
    run_trial,
    trial_rng,
    write_curve_csv,
    write_success_plot,
)
from gdcs.l1solver import SolverSettings

FAST_SOLVER = SolverSettings(primal_tol=1e-6, dual_tol=1e-6, max_iter=8000, inner_tol=1e-4)


def small_config(**overrides):
    base = dict(
        signal_length=20,
        num_sensors=3,
        partials=(PartialSpec(size=2, sparsity=2),),
        innovation_sparsity=1,
        sweep=(8, 10),
        trials=2,
        methods=("separate", "gdcs-oracle"),
        solver=FAST_SOLVER,
        master_seed=123,
        timing=False,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            small_config(trials=0)
        with pytest.raises(ValueError):
            small_config(sweep=())
        with pytest.raises(ValueError):
            small_config(sweep=(10, 8))
        with pytest.raises(ValueError):
            small_config(methods=("omp",))
        with pytest.raises(ValueError):
            small_config(resolution=0.0)

    def test_round_trips_through_dict(self):
        config = small_config()
        assert config_from_dict(config_to_dict(config)) == config


class TestRunTrial:
    def test_same_seed_reproduces_the_trial(self):
        config = small_config()
        a = run_trial(config, "gdcs-oracle", 10, 0)
        b = run_trial(config, "gdcs-oracle", 10, 0)
        assert a == b

    def test_zero_measurements_fail_without_crashing(self):
        config = small_config()
        tr = run_trial(config, "separate", 0, 0)
        assert not tr.success
        assert tr.relative_error == float("inf")

    def test_oracle_succeeds_at_generous_measurements(self):
        config = small_config(sweep=(16,))
        tr = run_trial(config, "gdcs-oracle", 16, 0)
        assert tr.success
        assert tr.relative_error < 0.1

    def test_distinct_triples_get_distinct_streams(self):
        config = small_config()
        seen = set()
        for method in config.methods:
            for m in config.sweep:
                for t in range(config.trials):
                    first = trial_rng(config, method, m, t).integers(0, 2**63)
                    assert first not in seen
                    seen.add(first)

    def test_timing_disabled_records_zero(self):
        config = small_config()
        tr = run_trial(config, "separate", 8, 0)
        assert tr.seconds == 0.0


class TestAggregation:
    def test_probability_is_exact_count_ratio(self):
        config = small_config(trials=3, sweep=(12,), methods=("gdcs-oracle",))
        table, results = run_sweep(config)
        row = table.row("gdcs-oracle", 12)
        assert row.trials == 3
        assert row.successes == sum(r.success for r in results)
        assert row.success_prob == row.successes / 3

    def test_single_trial_probability_is_zero_or_one(self):
        config = small_config(trials=1, sweep=(10,), methods=("separate",))
        table, _ = run_sweep(config)
        assert table.rows[0].success_prob in (0.0, 1.0)

    def test_parallel_matches_serial(self):
        config = small_config()
        serial_table, serial_results = run_sweep(config, workers=1)
        parallel_table, parallel_results = run_sweep(config, workers=2)
        assert serial_results == parallel_results
        assert serial_table == parallel_table


class TestSavings:
    def curve_table(self):
        rows = [
            CurveRow("dcs", 10, 10, 2, 0.5, 0.0),
            CurveRow("dcs", 12, 10, 6, 0.3, 0.0),
            CurveRow("dcs", 14, 10, 10, 0.01, 0.0),
            CurveRow("gdcs-oracle", 10, 10, 6, 0.2, 0.0),
            CurveRow("gdcs-oracle", 12, 10, 10, 0.01, 0.0),
            CurveRow("gdcs-oracle", 14, 10, 10, 0.0, 0.0),
        ]
        return CurveTable(tuple(rows))

    def test_interpolated_crossing(self):
        table = self.curve_table()
        # dcs reaches 0.9 between 12 and 14: 12 + (0.9-0.6)/(1.0-0.6)*2 = 13.5
        assert crossing_point(table.curve("dcs"), 0.9) == pytest.approx(13.5)
        # oracle: 10 + (0.9-0.6)/(1.0-0.6)*2 = 11.5
        assert measurement_savings(table, "dcs", "gdcs-oracle", 0.9) == pytest.approx(2.0)

    def test_identical_curves_save_nothing(self):
        table = self.curve_table()
        assert measurement_savings(table, "dcs", "dcs", 0.9) == 0.0

    def test_unreachable_level_raises(self):
        table = self.curve_table()
        with pytest.raises(NotBracketed):
            measurement_savings(table, "dcs", "gdcs-oracle", 1.1)


class TestCsvAndPlot:
    def test_csv_round_trip(self, tmp_path):
        config = small_config()
        table, _ = run_sweep(config)
        path = tmp_path / "curves.csv"
        write_curve_csv(table, path)
        back = read_curve_csv(path)
        assert len(back.rows) == len(table.rows)
        for a, b in zip(table.rows, back.rows):
            assert a.method == b.method
            assert a.measurements == b.measurements
            assert a.trials == b.trials
            assert a.successes == b.successes
            assert abs(a.mean_error - b.mean_error) < 1e-9
            assert abs(a.mean_seconds - b.mean_seconds) < 1e-9

    def test_one_row_table_gives_two_line_csv(self, tmp_path):
        table = CurveTable((CurveRow("dcs", 10, 4, 2, 0.2, 0.1),))
        path = tmp_path / "one.csv"
        write_curve_csv(table, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 2
        assert lines[0] == "method,M,trials,success_prob,mean_error,mean_seconds"

    def test_plot_is_a_vector_document(self, tmp_path):
        table = CurveTable(
            (
                CurveRow("dcs", 10, 4, 2, 0.2, 0.0),
                CurveRow("dcs", 12, 4, 4, 0.1, 0.0),
                CurveRow("gdcs-oracle", 10, 4, 4, 0.1, 0.0),
                CurveRow("gdcs-oracle", 12, 4, 4, 0.0, 0.0),
            )
        )
        path = tmp_path / "plot.svg"
        write_success_plot(table, path)
        head = path.read_text()[:200]
        assert "<?xml" in head or "<svg" in head

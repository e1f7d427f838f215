"""Evaluation helpers: test objective, memory accounting, CLT harness, logs."""

import numpy as np
import pytest

from ocdl import (
    ConvergenceRecord,
    Dictionary,
    Signal,
    append_record,
    clt_harness,
    memory_estimate,
    read_log_csv,
    soft_threshold,
    test_objective,
    write_log_csv,
)

from conftest import synth_corpus


def scalar_lasso_value(v, lam):
    x = float(soft_threshold(v, lam))
    return 0.5 * (x - v) ** 2 + lam * abs(x)


class TestTestObjective:
    def test_empty_set(self, rng):
        d = Dictionary(rng.standard_normal((1, 2, 2)))
        assert test_objective(d, [], 0.1) == 0.0

    def test_impulse_filter_closed_form(self, rng):
        taps = np.zeros((1, 2, 2))
        taps[0, 0, 0] = 1.0
        d = Dictionary(taps)
        signals = [Signal(rng.standard_normal((6, 6))) for _ in range(2)]
        want = sum(
            scalar_lasso_value(v, 0.2) for s in signals for v in s.values.ravel()
        )
        got = test_objective(d, signals, 0.2)
        assert got == pytest.approx(want, abs=1e-5)

    def test_exact_fit_at_zero_penalty(self, rng):
        taps = np.zeros((1, 2, 2))
        taps[0, 0, 0] = 1.0
        d = Dictionary(taps)
        s = Signal(rng.standard_normal((6, 6)))
        assert test_objective(d, [s], 0.0) < 1e-6

    def test_permutation_invariance(self, rng):
        d_true, signals = synth_corpus(rng, num_signals=2, shape=(8, 8),
                                       num_filters=3, kernel=(3, 3))
        base = test_objective(d_true, signals, 0.1)
        permuted = Dictionary(d_true.filters[[2, 0, 1]])
        assert test_objective(permuted, signals, 0.1) == pytest.approx(base, rel=1e-6)


class TestMemoryEstimate:
    def test_surrogate_frequency_example(self):
        assert memory_estimate(8, 9, 32 * 32, 0.1, "surrogate-frequency") == 1_048_576

    def test_zero_density_sparse(self):
        assert memory_estimate(4, 16, 256, 0.0, "sgd-spatial-sparse") == 0

    def test_doubling_filters_quadruples_blocks(self):
        one = memory_estimate(4, 9, 256, 0.1, "surrogate-frequency")
        two = memory_estimate(8, 9, 256, 0.1, "surrogate-frequency")
        assert two == 4 * one

    def test_dense_spatial(self):
        assert memory_estimate(2, 4, 100, 1.0, "sgd-spatial-dense") == 100 * 2 * 4 * 8

    def test_sparse_entry_size(self):
        # One coordinate-list entry is 24 bytes.
        assert memory_estimate(1, 4, 100, 0.25, "sgd-spatial-sparse") == 100 * 24

    def test_surrogate_spatial_terms(self):
        got = memory_estimate(2, 4, 100, 0.5, "surrogate-spatial")
        assert got == (8 * 8) * 8 + 400 * 24

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            memory_estimate(1, 1, 1, 0.0, "gpu")


class TestCltHarness:
    def test_unweighted_near_one(self):
        rng = np.random.default_rng(0)
        got = clt_harness(0.0, 2000, 400, rng)
        assert got == pytest.approx(1.0, rel=0.1)

    def test_weighted_factor(self):
        rng = np.random.default_rng(1)
        got = clt_harness(2.0, 2000, 400, rng)
        assert got == pytest.approx(3 / np.sqrt(5), rel=0.1)

    def test_monotone_in_exponent(self):
        rng = np.random.default_rng(2)
        values = [clt_harness(p, 2000, 400, rng) for p in (0.0, 2.0, 10.0)]
        assert values[0] < values[1] < values[2]

    def test_bad_sizes(self):
        with pytest.raises(ValueError):
            clt_harness(1.0, 0, 10, np.random.default_rng(0))


class TestRecords:
    def fixtures(self):
        return [
            ConvergenceRecord(1, 0, 0.5, 12.25, None, None, None, 1.0, 1024),
            ConvergenceRecord(2, 0, 1.0, 11.5, 100.125, 7, 1e-3, 0.5, 2048),
            ConvergenceRecord(3, 1, 1.5, 10.75, None, 0, 0.0, 0.25, None),
        ]

    def test_round_trip(self, tmp_path):
        path = tmp_path / "log.csv"
        records = self.fixtures()
        write_log_csv(path, records)
        assert read_log_csv(path) == records

    def test_header(self, tmp_path):
        path = tmp_path / "log.csv"
        write_log_csv(path, [])
        header = path.read_text().splitlines()[0]
        assert header == "t,epoch,wall_sec,sample_obj,test_obj,inner_iters,fpr,step_or_tol,mem_bytes"

    def test_append_record(self):
        import time

        log = []
        start = time.perf_counter()
        rec = append_record(log, t=1, epoch=0, start_time=start, sample_obj=3.5,
                            step_or_tol=0.1)
        assert log == [rec]
        assert rec.wall_sec >= 0.0
        assert rec.test_obj is None

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_log_csv(path)

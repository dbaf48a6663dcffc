"""Tests for the benchmark sweeps."""
import math

import numpy as np
import pytest

from bcclique.bench import bench_suite, fit_affine, fit_exponent, summarize, to_csv
from bcclique.config import SweepConfig


class TestBenchSuite:
    def test_empty_sweep(self):
        assert bench_suite('sparsify', SweepConfig()) == []
        assert to_csv([]) == ''

    def test_unknown_benchmark(self):
        with pytest.raises(ValueError):
            bench_suite('nope', SweepConfig(sizes=[8]))

    def test_duplicate_seeds_repeat_rows(self):
        rows = bench_suite('spanner', SweepConfig(sizes=[12], seeds=[3, 3]))

        assert len(rows) == 2
        assert rows[0] == rows[1]
        assert rows[0]['pass']

    def test_sparsify_rows(self):
        rows = bench_suite('sparsify', SweepConfig(sizes='12,16', seeds='0'))

        assert [r['n'] for r in rows] == [12, 16]
        assert {'rounds', 'sparsifier_edges', 'lambda_min', 'lambda_max'} <= set(rows[0])

    def test_lapsolve_rows_per_epsilon(self):
        rows = bench_suite('lapsolve', SweepConfig(sizes=[10], epsilons=[1e-2, 1e-6]))

        assert [r['epsilon'] for r in rows] == [1e-2, 1e-6]
        assert rows[0]['iterations'] <= rows[1]['iterations']
        assert all(r['pass'] for r in rows)

    def test_mcmf_rows(self):
        rows = bench_suite('mcmf', SweepConfig(sizes=[4], max_value=3))

        assert rows[0]['pass']


class TestFits:
    def test_exponent_of_a_power_law(self):
        xs = np.array([8, 16, 32, 64])
        slope, r2 = fit_exponent(xs, 3 * xs ** 1.5)

        assert slope == pytest.approx(1.5)
        assert r2 == pytest.approx(1.0)

    def test_single_size_has_no_fit(self):
        assert all(math.isnan(v) for v in fit_exponent([8, 8], [1, 2]))
        assert all(math.isnan(v) for v in fit_affine([1], [1]))

    def test_affine(self):
        slope, intercept, r2 = fit_affine([1, 2, 3], [5, 7, 9])

        assert (slope, intercept) == (pytest.approx(2.0), pytest.approx(3.0))
        assert r2 == pytest.approx(1.0)

    def test_summary_of_lapsolve_rows(self):
        rows = [
            {'n': 8, 'epsilon': 1e-2, 'iterations': 5, 'rounds': 50, 'pass': True},
            {'n': 8, 'epsilon': 1e-4, 'iterations': 10, 'rounds': 100, 'pass': True},
            {'n': 8, 'epsilon': 1e-8, 'iterations': 20, 'rounds': 200, 'pass': False},
        ]
        out = summarize('lapsolve', rows)

        assert out['pass_rate'] == pytest.approx(2 / 3)
        assert out['iterations_r2'] == pytest.approx(1.0)
        assert math.isnan(out['rounds_exponent'])
        assert out['iteration_constant'] == pytest.approx(5 / (math.sqrt(3) * math.log(100)))

    def test_empty_summary(self):
        assert summarize('spanner', []) == {'benchmark': 'spanner', 'rows': 0}

    def test_csv(self):
        text = to_csv([{'n': 8, 'rounds': 3}, {'n': 16, 'rounds': 5}])

        assert text.splitlines() == ['n,rounds', '8,3', '16,5']

"""Tests for the coordinate barriers."""
import numpy as np
import pytest

from bcclique.barriers import BarrierKind, BarrierSet, barrier_eval
from bcclique.exceptions import Infeasible, OutOfDomain


class TestBarrierSet:
    def test_kinds(self):
        barriers = BarrierSet([0.0, -np.inf, 0.0], [np.inf, 1.0, 2.0])

        assert list(barriers.kind) == [BarrierKind.LOG_LOWER.value, BarrierKind.LOG_UPPER.value,
                                       BarrierKind.TRIG.value]

    def test_values(self):
        barriers = BarrierSet([1.0, -np.inf, -1.0], [np.inf, 3.0, 1.0])
        phi, d1, d2 = barrier_eval(barriers, np.array([2.0, 2.0, 0.0]))

        assert np.allclose(phi, [0.0, 0.0, 0.0])
        assert np.allclose(d1, [-1.0, 1.0, 0.0])
        assert np.allclose(d2, [1.0, 1.0, np.pi ** 2 / 4])

    def test_finite_differences(self):
        barriers = BarrierSet([0.0, -np.inf, -2.0], [np.inf, 5.0, 3.0])
        x = np.array([0.7, 4.1, 2.2])
        h = 1e-5
        phi, d1, d2 = barriers.evaluate(x)
        phi_up, d1_up, _ = barriers.evaluate(x + h)
        phi_down, d1_down, _ = barriers.evaluate(x - h)

        assert np.allclose((phi_up - phi_down) / (2 * h), d1, rtol=1e-6)
        assert np.allclose((d1_up - d1_down) / (2 * h), d2, rtol=1e-6)

    def test_trig_barrier_blows_up_at_both_ends(self):
        barriers = BarrierSet([0.0], [1.0])

        assert barriers.evaluate(np.array([1e-9]))[0][0] > 15
        assert barriers.evaluate(np.array([1 - 1e-9]))[0][0] > 15

    def test_out_of_domain(self):
        barriers = BarrierSet([0.0, 0.0], [1.0, np.inf])

        with pytest.raises(OutOfDomain) as info:
            barriers.evaluate(np.array([0.5, -1.0]))
        assert info.value.coordinate == 1
        with pytest.raises(OutOfDomain):
            barriers.evaluate(np.array([1.0, 1.0]))

    def test_infeasible_bounds(self):
        with pytest.raises(Infeasible):
            BarrierSet([-np.inf], [np.inf])
        with pytest.raises(Infeasible):
            BarrierSet([1.0], [1.0])

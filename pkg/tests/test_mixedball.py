"""Tests for the mixed-norm ball projection."""
import numpy as np
import pytest

from bcclique.exceptions import DimensionMismatch, ZeroObjective
from bcclique.mixedball import MAX_PROBES, mixed_ball_grid_oracle, mixed_norm, project_mixed_ball
from bcclique.netsim import Network


class TestProjectMixedBall:
    def test_loose_box_is_the_euclidean_ball(self):
        a = np.array([3.0, -4.0])
        result = project_mixed_ball(a, np.full(2, 1e9))

        assert np.allclose(result.x, a / 5.0, atol=1e-6)
        assert result.value == pytest.approx(5.0, rel=1e-6)

    def test_single_coordinate(self):
        result = project_mixed_ball(np.array([1.0]), np.array([1.0]))

        assert result.x[0] == pytest.approx(0.5)

    @pytest.mark.parametrize('seed', range(5))
    def test_against_grid_search(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(1, 9))
        a = rng.standard_normal(m)
        l = rng.uniform(0.05, 2.0, m)
        result = project_mixed_ball(a, l)
        oracle = mixed_ball_grid_oracle(a, l)

        assert result.value >= oracle - 1e-6
        assert result.value <= oracle + 1e-4
        assert mixed_norm(result.x, l) <= 1 + 1e-9
        assert result.probes <= MAX_PROBES

    def test_zero_objective(self):
        result = project_mixed_ball(np.zeros(3), np.ones(3))

        assert not result.x.any()
        with pytest.raises(ZeroObjective):
            project_mixed_ball(np.zeros(3), np.ones(3), strict=True)

    def test_input_checks(self):
        with pytest.raises(DimensionMismatch):
            project_mixed_ball(np.ones(2), np.ones(3))
        with pytest.raises(ValueError):
            project_mixed_ball(np.ones(2), np.array([1.0, 0.0]))

    def test_rounds_per_probe(self):
        rng = np.random.default_rng(1)
        a, l = rng.standard_normal(6), rng.uniform(0.1, 1.0, 6)
        net = Network(3, bandwidth_bits=16)
        result = project_mixed_ball(a, l, net=net, owners=[0, 0, 1, 1, 2, 2], width=16)

        assert result.rounds == result.probes * (net.charge_bits(16) + net.charge_bits(48))
        assert net.round_ledger['lp.mixed_ball'] == result.rounds

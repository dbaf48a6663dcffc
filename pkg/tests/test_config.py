"""Tests for the pydantic configuration models."""
import math

import pytest
from pydantic import ValidationError

from bcclique.config import (LPInstanceModel, Mode, NetworkConfig, Profile, ProfileConfig, SweepConfig,
                             default_seed)


def _lp(**overrides):
    fields = {'m': 2, 'n': 1, 'A': [(0, 0, 1.0), (1, 0, 1.0)], 'b': [1.0], 'c': [1.0, 2.0],
              'l': [0.0, 0.0], 'u': [1.0, 1.0], 'x0': [0.5, 0.5]}
    fields.update(overrides)
    return LPInstanceModel(**fields)


class TestSeed:
    def test_default(self, monkeypatch):
        monkeypatch.delenv('BCCLIQUE_SEED', raising=False)

        assert default_seed() == 0

    def test_environment(self, monkeypatch):
        monkeypatch.setenv('BCCLIQUE_SEED', '17')

        assert default_seed() == 17
        assert NetworkConfig(n=4).seed == 17


class TestNetworkConfig:
    def test_mode_from_string(self):
        config = NetworkConfig.model_validate_json('{"mode": "BroadcastCongest", "n": 5, "seed": 1}')

        assert config.mode is Mode.BROADCAST_CONGEST
        assert config.bandwidth_bits is None

    def test_rejects_empty_network(self):
        with pytest.raises(ValidationError):
            NetworkConfig(n=0)


class TestProfileConfig:
    def test_practical_caps_constants(self):
        config = ProfileConfig(prefactor=5.0)

        assert config.constant(400.0) == 5.0
        assert config.constant(2.0) == 2.0
        assert not config.faithful

    def test_faithful_keeps_constants(self):
        config = ProfileConfig(profile='faithful')

        assert config.profile is Profile.FAITHFUL
        assert config.constant(400.0) == 400.0

    def test_damping_range(self):
        with pytest.raises(ValidationError):
            ProfileConfig(damping=1.0)


class TestSweepConfig:
    def test_comma_separated(self):
        config = SweepConfig(sizes='8,16,', seeds='3', epsilons='1e-2,1e-4')

        assert config.sizes == [8, 16]
        assert config.seeds == [3]
        assert config.epsilons == [1e-2, 1e-4]

    def test_defaults(self):
        config = SweepConfig()

        assert config.sizes == []
        assert config.seeds == [0]
        assert config.profile.profile is Profile.PRACTICAL


class TestLPInstanceModel:
    def test_missing_bounds_are_infinite(self):
        lower, upper = _lp(l=[None, '-inf'], u=['inf', 1.0]).bounds()

        assert math.isinf(lower[0]) and lower[0] < 0
        assert math.isinf(lower[1]) and lower[1] < 0
        assert math.isinf(upper[0]) and upper[0] > 0
        assert upper[1] == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError, match='c must have m=2 entries'):
            _lp(c=[1.0])

    def test_entry_out_of_range(self):
        with pytest.raises(ValidationError, match='out of range'):
            _lp(A=[(0, 0, 1.0), (2, 0, 1.0)])

"""Tests for the shared-bit Johnson-Lindenstrauss sketch."""
import numpy as np
import pytest

from bcclique.exceptions import InsufficientBits
from bcclique.netsim import Network
from bcclique.sketching import (COEFFICIENT_BITS, MIN_COEFFICIENTS, SketchSource, default_bit_count,
                                jl_sketch_build, random_bits, share_bits, sketch_rows)


def _bits(seed, count=200):
    return random_bits(np.random.default_rng(seed), count)


class TestSketchRows:
    def test_formula(self):
        assert sketch_rows(0.5, 0.1, sketch_constant=1.0) == 10

    def test_monotone(self):
        rows = [sketch_rows(eta, 0.01) for eta in (0.1, 0.2, 0.4, 0.8)]

        assert rows == sorted(rows, reverse=True)
        assert sketch_rows(0.2, 0.001) > sketch_rows(0.2, 0.1)

    @pytest.mark.parametrize('eta, delta', [(0.0, 0.1), (1.0, 0.1), (0.5, 0.5)])
    def test_range(self, eta, delta):
        with pytest.raises(ValueError):
            sketch_rows(eta, delta)


class TestBuild:
    def test_same_bits_same_matrix(self):
        a = jl_sketch_build(50, 0.5, 0.1, _bits(1))
        b = jl_sketch_build(50, 0.5, 0.1, _bits(1))
        c = jl_sketch_build(50, 0.5, 0.1, _bits(2))

        assert np.array_equal(a.Q, b.Q)
        assert not np.array_equal(a.Q, c.Q)

    def test_entries(self):
        sketch = jl_sketch_build(40, 0.5, 0.1, _bits(3))

        assert sketch.Q.shape == (sketch.k, 40)
        assert np.allclose(np.abs(sketch.Q), 1 / np.sqrt(sketch.k))

    def test_distortion(self):
        sketch = jl_sketch_build(100, 0.5, 0.01, _bits(4))
        rng = np.random.default_rng(0)
        ratios = [sketch.distortion(rng.standard_normal(100)) for _ in range(20)]

        assert all(0.5 <= r <= 1.5 for r in ratios)

    def test_insufficient_bits(self):
        with pytest.raises(InsufficientBits):
            jl_sketch_build(10, 0.5, 0.1, _bits(0, MIN_COEFFICIENTS * COEFFICIENT_BITS - 1))

    def test_default_bit_count(self):
        assert default_bit_count(2) == MIN_COEFFICIENTS * COEFFICIENT_BITS
        assert default_bit_count(2 ** 10) == 400


class TestShareBits:
    def test_leader_broadcast(self):
        net = Network(8, seed=5)
        bits = share_bits(net, 124)

        assert len(bits) == 124
        # one leader round plus ceil(124 / 8) fragments
        assert net.round_counter == 1 + net.charge_bits(124)
        assert net.round_ledger['sketch.bits'] == net.charge_bits(124)

    def test_source_gives_fresh_bits(self):
        source = SketchSource(seed=0)
        first, second = source.bits(124), source.bits(124)
        source.reset()

        assert not np.array_equal(first, second)
        assert np.array_equal(source.bits(124), first)

"""Bit widths of the values vertices put on the wire.
"""
import math

import numpy as np


GUARD_BITS = 16


def id_bits(n):
    """Bits of a vertex identifier in a network of n vertices.
    """
    return max(1, math.ceil(math.log2(n + 1)))


def default_bandwidth(n):
    """B = 2 * ceil(log2(n+1)), a concrete Theta(log n).
    """
    return 2 * id_bits(n)


def weight_bits(max_weight):
    """Bits of a non-negative integer weight field.

    The all-ones pattern of the field is reserved for the infinite weight,
    hence the +1.
    """
    return max(1, (int(max_weight) + 1).bit_length())


def fixed_point_width(n, U, epsilon, guard_bits=GUARD_BITS):
    """Sign bit plus ceil(log2(n U / epsilon)) plus guard bits.
    """
    ratio = max(2.0, n * max(U, 1.0) / epsilon)
    return 1 + math.ceil(math.log2(ratio)) + guard_bits


class FixedPointCodec():
    """Fixed-point representation of reals relative to a known scale.
    """
    def __init__(self,
                 n,
                 U=1.0,
                 epsilon=1e-10,
                 scale=1.0,
                 guard_bits=GUARD_BITS,
                 ):
        # total bits per encoded value, sign included
        self.width = fixed_point_width(n, U, epsilon, guard_bits)
        # integer part must hold values up to n U times the scale
        self.int_bits = max(1, math.ceil(math.log2(n * max(U, 1.0) + 1)))
        self.frac_bits = self.width - 1 - self.int_bits
        # globally known magnitude the values are measured against
        self.scale = scale if scale > 0 else 1.0

    @property
    def resolution(self):
        return self.scale * 2.0 ** (-self.frac_bits)

    def quantize(self, values):
        """Round to the representable grid, saturating at the largest magnitude.
        """
        values = np.asarray(values, dtype=float)
        limit = self.scale * (2.0 ** self.int_bits - self.resolution / self.scale)
        grid = np.round(np.clip(values, -limit, limit) / self.resolution) * self.resolution
        return grid

"""Johnson-Lindenstrauss sketches that every vertex rebuilds from a few shared bits.

The leader broadcasts the bits once; Q is then a pure function of them. The
entries are +-1/sqrt(k) signs read off a polynomial hash over the prime field
Z_p, p = 2^31 - 1, whose coefficients are the broadcast bits in 31-bit
chunks. Four coefficients (a 4-wise independent family) are the minimum;
more bits raise the degree of the polynomial and with it the independence.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InsufficientBits
from .netsim import Message

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


FIELD_PRIME = 2 ** 31 - 1
COEFFICIENT_BITS = 31
MIN_COEFFICIENTS = 4
DEFAULT_SKETCH_CONSTANT = 8.0
# key of the leader's stream for sketch bits
SKETCH_SALT = 2 ** 31 - 2


def sketch_rows(eta, delta, sketch_constant=DEFAULT_SKETCH_CONSTANT):
    """k = ceil(sketch_constant * ln(1/delta) / eta^2).
    """
    if not 0 < eta < 1:
        raise ValueError('eta must lie in (0, 1), got {}'.format(eta))
    if not 0 < delta < 0.5:
        raise ValueError('delta must lie in (0, 1/2), got {}'.format(delta))
    return max(1, math.ceil(sketch_constant * math.log(1.0 / delta) / eta ** 2))


def default_bit_count(m):
    """4 * ceil(log2 m)^2 bits, never fewer than four field elements.
    """
    return max(4 * max(1, math.ceil(math.log2(max(m, 2)))) ** 2, MIN_COEFFICIENTS * COEFFICIENT_BITS)


def random_bits(rng, count):
    return rng.integers(0, 2, size=count, dtype=np.uint8)


def _coefficients(shared_bits):
    bits = np.asarray(shared_bits, dtype=np.int64).ravel()
    n_coeff = len(bits) // COEFFICIENT_BITS
    if n_coeff < MIN_COEFFICIENTS:
        errmsg = 'got {} shared bits, need at least {}'.format(len(bits), MIN_COEFFICIENTS * COEFFICIENT_BITS)
        log.error(errmsg)
        raise InsufficientBits(errmsg)
    chunks = bits[:n_coeff * COEFFICIENT_BITS].reshape(n_coeff, COEFFICIENT_BITS)
    powers = np.left_shift(np.int64(1), np.arange(COEFFICIENT_BITS, dtype=np.int64))
    return (chunks @ powers) % FIELD_PRIME


@dataclass
class JLSketch:
    k: int
    m: int
    shared_bits: np.ndarray
    Q: np.ndarray

    def apply(self, x):
        return self.Q @ x

    def distortion(self, x):
        """||Q x|| / ||x||.
        """
        return float(np.linalg.norm(self.Q @ x) / np.linalg.norm(x))


def jl_sketch_build(m, eta, delta, shared_bits, sketch_constant=DEFAULT_SKETCH_CONSTANT, k=None):
    """k x m sign matrix with (1 +- eta) distortion with probability 1 - delta.
    """
    if k is None:
        k = sketch_rows(eta, delta, sketch_constant)
    if k * m >= FIELD_PRIME:
        raise ValueError('sketch of {} x {} entries exceeds the hash domain'.format(k, m))
    coeffs = _coefficients(shared_bits)

    keys = np.arange(1, k * m + 1, dtype=np.int64)
    h = np.zeros_like(keys)
    # Horner over Z_p; operands stay below 2^62
    for c in coeffs:
        h = (h * keys + c) % FIELD_PRIME
    signs = 1.0 - 2.0 * (h & 1)
    Q = signs.reshape(k, m) / math.sqrt(k)
    return JLSketch(k=k, m=m, shared_bits=np.asarray(shared_bits, dtype=np.uint8), Q=Q)


class SketchSource():
    """Fresh shared bits for every sketch: broadcast by a leader, or drawn from a seed.
    """
    def __init__(self, net=None, seed=0):
        self.net = net
        self.seed = seed
        self.reset()

    def reset(self):
        self.counter = 0
        self.rng = np.random.default_rng([self.seed, SKETCH_SALT])

    def bits(self, count):
        self.counter += 1
        if self.net is not None:
            return share_bits(self.net, count, self.counter)
        return random_bits(self.rng, count)


def share_bits(net, count, counter=0):
    """Leader election, then the leader samples count bits and broadcasts them.

    Returns the bits every vertex now holds.
    """
    leader = net.elect_leader()
    bits = random_bits(net.stream(SKETCH_SALT, leader, counter), count)
    with net.phase('sketch.bits'):
        net.broadcast({leader: Message('sketch_bits', bits.tobytes(), count)})
    return bits

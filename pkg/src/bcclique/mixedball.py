"""argmax a^T x over the mixed ball ||x||_2 + ||x / l||_inf <= 1.

Splitting the budget as ||x / l||_inf <= t and ||x||_2 <= 1 - t, the
optimum for fixed t saturates the box on the coordinates with the largest
|a_i| / l_i and is proportional to a on the rest. With S1, S2, S3 the sums
of |a_k| l_k, a_k^2 and l_k^2 over a saturated prefix P,

    g_P(t) = t S1 + sqrt((1 - t)^2 - t^2 S3) sqrt(||a||^2 - S2).

The prefix shrinks as t grows, and the best value per prefix is unimodal
in the prefix, so a binary search over prefixes needs O(log m) probes.
Each probe fixes a threshold on |a_i| / l_i and every vertex reports its
three partial sums for the coordinates at or above it.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .exceptions import DimensionMismatch, ZeroObjective

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


MAX_PROBES = 64


@dataclass
class MixedBallResult:
    x: np.ndarray
    value: float
    t: float
    probes: int
    rounds: int = 0


class _Prefix():
    """Closed forms for one saturated prefix.
    """
    def __init__(self, s1, s2, s3, norm2, inside_min, outside_max):
        self.s1, self.s3 = s1, s3
        self.rest = max(norm2 - s2, 0.0)
        # smallest ratio inside the prefix and largest outside it
        self.inside_min = inside_min
        self.outside_max = outside_max
        self.t_max = 1.0 / (1.0 + math.sqrt(s3))

    def slack(self, t):
        return max((1.0 - t) ** 2 - t ** 2 * self.s3, 0.0)

    def g(self, t):
        return t * self.s1 + math.sqrt(self.slack(t)) * math.sqrt(self.rest)

    def theta(self, t):
        return math.sqrt(self.slack(t) / self.rest) if self.rest > 0 else 0.0

    def rho(self, t):
        """Ratio threshold s / theta at which coordinates leave the box at t.
        """
        slack = self.slack(t)
        if slack <= 0:
            return math.inf
        return t * math.sqrt(self.rest) / math.sqrt(slack)

    def invert(self, ratio):
        if ratio <= 0:
            return 0.0
        if math.isinf(ratio):
            return self.t_max
        f = lambda t: self.rho(t) - ratio
        hi = self.t_max * (1.0 - 1e-15)
        if f(hi) <= 0:
            return self.t_max
        return brentq(f, 0.0, hi, xtol=1e-15)

    def best(self):
        """max g on the t-interval where exactly this prefix is saturated.
        """
        if self.rest <= 0:
            return self.t_max * self.s1, self.t_max
        lo = self.invert(self.outside_max)
        hi = self.invert(self.inside_min)
        # adjacent prefixes meet at a single t; rounding may swap the ends
        hi = max(hi, lo)
        candidates = [(self.g(lo), lo), (self.g(hi), hi)]
        if hi - lo > 1e-15:
            res = minimize_scalar(lambda t: -self.g(t), bounds=(lo, hi), method='bounded',
                                  options={'xatol': 1e-14})
            candidates.append((-res.fun, float(res.x)))
        return max(candidates)


def project_mixed_ball(a, l, net=None, owners=None, width=64, strict=False):
    """x* = argmax a^T x subject to ||x||_2 + ||x / l||_inf <= 1.

    owners[i] is the vertex holding (a_i, l_i); with a network every probe
    costs one closest-value broadcast plus one broadcast of three partial
    sums per vertex.
    """
    a = np.asarray(a, dtype=float)
    l = np.asarray(l, dtype=float)
    if a.shape != l.shape:
        errmsg = 'a of shape {} and l of shape {}'.format(a.shape, l.shape)
        log.error(errmsg)
        raise DimensionMismatch(errmsg)
    if np.any(l <= 0):
        raise ValueError('l must be positive, min is {}'.format(l.min()))
    if not np.any(a):
        if strict:
            raise ZeroObjective('objective vector is zero')
        return MixedBallResult(x=np.zeros_like(a), value=0.0, t=0.0, probes=0)

    start = net.round_counter if net is not None else 0
    ratio = np.abs(a) / l
    norm2 = float(a @ a)
    # distinct positive ratios, largest first; the vertices never sort them
    # globally, a probe only needs the one at the current rank
    levels = np.unique(ratio[ratio > 0])[::-1]

    cache = {}
    holder = np.zeros(len(a), dtype=int) if owners is None else np.asarray(owners, dtype=int)
    n_vertices = net.n if net is not None else 0

    def _partial_sums(inside):
        if owners is None:
            return None
        # per vertex: sum |a_i| l_i, sum a_i^2, sum l_i^2 over its saturated coordinates
        sums = [np.bincount(holder[inside], weights=w[inside], minlength=n_vertices)
                for w in (np.abs(a) * l, a * a, l * l)]
        return {v: (sums[0][v], sums[1][v], sums[2][v]) for v in range(n_vertices)}

    def probe(j):
        """Best value with the prefix of the j largest ratio levels saturated.
        """
        if j in cache:
            return cache[j]
        if net is not None:
            with net.phase('lp.mixed_ball'):
                net.broadcast_all('closest_ratio', width)
        inside = ratio >= levels[j - 1] if j > 0 else np.zeros_like(ratio, dtype=bool)
        if net is not None:
            with net.phase('lp.mixed_ball'):
                net.broadcast_all('partial_sums', 3 * width, values=_partial_sums(inside))
        prefix = _Prefix(s1=float(np.abs(a[inside]) @ l[inside]),
                         s2=float(a[inside] @ a[inside]),
                         s3=float(l[inside] @ l[inside]),
                         norm2=norm2,
                         inside_min=levels[j - 1] if j > 0 else math.inf,
                         outside_max=levels[j] if j < len(levels) else 0.0,
                         )
        value, t = prefix.best()
        cache[j] = (value, t, inside, prefix)
        return cache[j]

    lo, hi = 0, len(levels)
    while lo < hi:
        mid = (lo + hi) // 2
        if probe(mid)[0] < probe(mid + 1)[0]:
            lo = mid + 1
        else:
            hi = mid
    value, t, inside, prefix = probe(lo)
    if len(cache) > MAX_PROBES:
        log.warning('mixed ball projection used %d probes', len(cache))

    x = np.where(inside, t * np.sign(a) * l, prefix.theta(t) * a)
    rounds = net.round_counter - start if net is not None else 0
    return MixedBallResult(x=x, value=float(a @ x), t=t, probes=len(cache), rounds=rounds)


def mixed_norm(x, l):
    return float(np.linalg.norm(x) + np.max(np.abs(x) / l))


def inner_box_ball(a, l, s, r):
    """max a^T x subject to ||x||_2 <= r and |x_i| <= s l_i, by bisection on the scale.
    """
    if r <= 0 or s <= 0:
        return 0.0
    cap = s * l

    def norm_at(theta):
        return np.linalg.norm(np.minimum(cap, theta * np.abs(a)))

    if np.linalg.norm(cap[a != 0]) <= r:
        return float(np.abs(a) @ np.where(a != 0, cap, 0.0))
    hi = 1.0
    while norm_at(hi) < r:
        hi *= 2.0
    theta = brentq(lambda th: norm_at(th) - r, 0.0, hi, xtol=1e-15)
    return float(np.abs(a) @ np.minimum(cap, theta * np.abs(a)))


def mixed_ball_grid_oracle(a, l, step=1e-4):
    """max over t in {0, step, ..., 1} of the exact inner value at that t.
    """
    a = np.asarray(a, dtype=float)
    l = np.asarray(l, dtype=float)
    ts = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    return max(inner_box_ball(a, l, t, 1.0 - t) for t in ts)

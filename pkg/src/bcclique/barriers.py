"""Coordinate-wise self-concordant barriers for the box constraints l <= x <= u.
"""
import logging
from enum import Enum

import numpy as np

from .exceptions import Infeasible, OutOfDomain

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


class BarrierKind(str, Enum):
    LOG_LOWER = 'log_lower'
    LOG_UPPER = 'log_upper'
    TRIG = 'trig'


class BarrierSet():
    """One barrier per coordinate, chosen by which bounds are finite.

    -log(x - l) when only l is finite, -log(u - x) when only u is, and
    -log cos(a x + b) with a = pi / (u - l), b = -(pi/2)(u + l)/(u - l)
    when both are.
    """
    def __init__(self, l, u):
        self.l = np.asarray(l, dtype=float)
        self.u = np.asarray(u, dtype=float)
        if self.l.shape != self.u.shape:
            raise ValueError('bounds of shapes {} and {}'.format(self.l.shape, self.u.shape))

        lower = np.isfinite(self.l)
        upper = np.isfinite(self.u)
        free = ~lower & ~upper
        if free.any():
            errmsg = 'coordinate {} has no finite bound'.format(int(np.flatnonzero(free)[0]))
            log.error(errmsg)
            raise Infeasible(errmsg)
        empty = lower & upper & (self.u <= self.l)
        if empty.any():
            errmsg = 'coordinate {} has an empty domain'.format(int(np.flatnonzero(empty)[0]))
            log.error(errmsg)
            raise Infeasible(errmsg)

        self.kind = np.where(lower & upper, BarrierKind.TRIG.value,
                             np.where(lower, BarrierKind.LOG_LOWER.value, BarrierKind.LOG_UPPER.value))
        self.trig = lower & upper
        self.log_lower = lower & ~upper
        self.log_upper = upper & ~lower

        width = np.where(self.trig, self.u - self.l, 1.0)
        self.a = np.where(self.trig, np.pi / width, 0.0)
        self.b = np.where(self.trig, -0.5 * np.pi * (self.u + self.l) / width, 0.0)

    @property
    def m(self):
        return len(self.l)

    def interior(self, x):
        """Mask of coordinates strictly inside their domain.
        """
        x = np.asarray(x, dtype=float)
        return np.where(np.isfinite(self.l), x > self.l, True) & np.where(np.isfinite(self.u), x < self.u, True)

    def check(self, x):
        inside = self.interior(x)
        if not inside.all():
            i = int(np.flatnonzero(~inside)[0])
            errmsg = 'x[{}] = {} outside ({}, {})'.format(i, x[i], self.l[i], self.u[i])
            log.error(errmsg)
            raise OutOfDomain(errmsg, coordinate=i)

    def evaluate(self, x):
        """phi(x), phi'(x) and phi''(x) coordinate-wise.
        """
        x = np.asarray(x, dtype=float)
        self.check(x)
        phi = np.empty_like(x)
        d1 = np.empty_like(x)
        d2 = np.empty_like(x)

        i = self.log_lower
        gap = x[i] - self.l[i]
        phi[i] = -np.log(gap)
        d1[i] = -1.0 / gap
        d2[i] = 1.0 / gap ** 2

        i = self.log_upper
        gap = self.u[i] - x[i]
        phi[i] = -np.log(gap)
        d1[i] = 1.0 / gap
        d2[i] = 1.0 / gap ** 2

        i = self.trig
        theta = self.a[i] * x[i] + self.b[i]
        cos = np.cos(theta)
        phi[i] = -np.log(cos)
        d1[i] = self.a[i] * np.tan(theta)
        d2[i] = self.a[i] ** 2 / cos ** 2
        return phi, d1, d2


def barrier_eval(barriers, x):
    """(phi, phi', phi'') of the barrier set at x; computed at every vertex for free.
    """
    return barriers.evaluate(x)

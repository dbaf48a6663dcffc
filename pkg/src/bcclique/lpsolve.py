"""Weighted path following for min c^T x s.t. A^T x = b, l <= x <= u.

The iterate x lives in R^m, one coordinate per row of A; vertex i of the
network is column i of A and owns the rows whose last nonzero sits in
column i. A centering step is one Newton step on x for the weighted
barrier t c^T x + sum_i w_i phi_i(x_i), followed by a multiplicative move of
w toward the regularized Lewis weights of A_x = diag(phi''(x))^{-1/2} A.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from tqdm import tqdm

from .backends import DEFAULT_WIDTH, make_solver
from .barriers import BarrierSet
from .config import LPInstanceModel, Mode, ProfileConfig
from .exceptions import DimensionMismatch, Infeasible, LeftDomain, RankDeficient
from .mixedball import project_mixed_ball
from .netsim import Network
from .sketching import SketchSource
from .weights import compute_apx_weights, compute_initial_weights, lewis_p

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


# instances with more columns are not rank-checked densely
RANK_CHECK_LIMIT = 2000
FEASIBILITY_TOLERANCE = 1e-12
MAX_BACKTRACKS = 40


class LPInstance():
    """Validated LP data with a strictly interior, feasible starting point.
    """
    def __init__(self,
                 a_matrix,
                 b,
                 c,
                 l,
                 u,
                 x0,
                 check_rank=True,
                 ):
        self.a_matrix = sp.csr_matrix(a_matrix, dtype=float)
        m, n = self.a_matrix.shape
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.l = np.asarray(l, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.x0 = np.asarray(x0, dtype=float)
        if self.b.shape != (n,) or any(v.shape != (m,) for v in (self.c, self.l, self.u, self.x0)):
            errmsg = 'LP data does not fit A of shape {}'.format(self.a_matrix.shape)
            log.error(errmsg)
            raise DimensionMismatch(errmsg)

        # raises Infeasible on a free coordinate or an empty box
        self.barriers = BarrierSet(self.l, self.u)
        inside = self.barriers.interior(self.x0)
        if not inside.all():
            i = int(np.flatnonzero(~inside)[0])
            errmsg = 'x0[{}] = {} is not strictly inside ({}, {})'.format(i, self.x0[i], self.l[i], self.u[i])
            log.error(errmsg)
            raise Infeasible(errmsg)
        residual = self.residual(self.x0)
        scale = max(1.0, np.linalg.norm(self.b), float(np.max(abs(self.a_matrix).T @ np.abs(self.x0), initial=0.0)))
        if residual > FEASIBILITY_TOLERANCE * scale:
            errmsg = 'A^T x0 misses b by {:.3e}'.format(residual)
            log.error(errmsg)
            raise Infeasible(errmsg)

        if check_rank and n <= RANK_CHECK_LIMIT:
            rank = np.linalg.matrix_rank(self.a_matrix.toarray()) if m >= n else m
            if rank < n:
                errmsg = 'A has rank {} < n = {}'.format(rank, n)
                log.error(errmsg)
                raise RankDeficient(errmsg)

    @classmethod
    def from_model(cls, model, **kwargs):
        """Instance from a validated LPInstanceModel.
        """
        rows, cols, vals = zip(*model.A) if model.A else ((), (), ())
        a_matrix = sp.csr_matrix((vals, (rows, cols)), shape=(model.m, model.n))
        l, u = model.bounds()
        return cls(a_matrix, model.b, model.c, l, u, model.x0, **kwargs)

    @classmethod
    def from_json(cls, path, **kwargs):
        with open(path) as f:
            return cls.from_model(LPInstanceModel.model_validate_json(f.read()), **kwargs)

    @property
    def m(self):
        return self.a_matrix.shape[0]

    @property
    def n(self):
        return self.a_matrix.shape[1]

    @property
    def U(self):
        """max of ||1/(u - x0)||, ||1/(x0 - l)||, ||u - l|| and ||c||, all infinity norms over finite entries.
        """
        terms = [np.abs(self.c)]
        upper = np.isfinite(self.u)
        lower = np.isfinite(self.l)
        terms.append(1.0 / (self.u[upper] - self.x0[upper]))
        terms.append(1.0 / (self.x0[lower] - self.l[lower]))
        terms.append(self.u[upper & lower] - self.l[upper & lower])
        return float(max(np.max(t, initial=0.0) for t in terms))

    def residual(self, x):
        return float(np.linalg.norm(self.a_matrix.T @ x - self.b))

    def objective(self, x):
        return float(self.c @ x)


@dataclass
class WeightConfig:
    """Constants of the regularized Lewis weight function.
    """
    m: int
    n: int
    c1: float
    cs: float
    ck: float
    c_norm: float
    p: float
    c0: float

    @classmethod
    def for_instance(cls, m, n, profile=None):
        profile = profile if profile is not None else ProfileConfig()
        cs = 4.0
        ck = 2.0 * math.log(4 * m)
        return cls(m=m,
                   n=n,
                   c1=1.5 * n,
                   cs=cs,
                   ck=ck,
                   c_norm=profile.constant(24.0) * math.sqrt(cs) * ck,
                   p=lewis_p(m),
                   c0=n / (2.0 * m),
                   )

    def radius(self, profile):
        """R = 1 / (768 ck^2 log(36 c1 cs ck m)).
        """
        return 1.0 / (profile.constant(768.0) * self.ck ** 2 * math.log(36.0 * self.c1 * self.cs * self.ck * self.m))

    @property
    def eta(self):
        return 1.0 / (2.0 * self.ck)


@dataclass
class PathState:
    x: np.ndarray
    w: np.ndarray
    t: float
    R: float
    alpha: float
    # centrality measured by the last centering step
    delta: float = math.inf


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    rounds: int
    iterations: int
    profile: str
    weights: np.ndarray = None
    trace: list = field(default_factory=list)
    ledger: dict = field(default_factory=dict)


def _log_floor(m):
    # log m with the logarithm floored at 1, so that m = 1, 2 stay well defined
    return max(1.0, math.log(m))


def potential_gradient(v, mu):
    """Direction of the gradient of sum_i exp(mu v_i) + exp(-mu v_i), rescaled to avoid overflow.
    """
    s = mu * np.abs(v)
    top = float(np.max(s, initial=0.0))
    return np.sign(v) * (np.exp(s - top) - np.exp(-s - top))


def weighted_norm(x, w):
    return float(np.sqrt(np.sum(w * x ** 2)))


def mixed_weight_norm(x, w, c_norm):
    """||x||_inf + c_norm ||x||_w.
    """
    return float(np.max(np.abs(x), initial=0.0)) + c_norm * weighted_norm(x, w)


class LPSolver():
    """Two-phase weighted path following with round accounting.
    """
    def __init__(self,
                 instance,
                 epsilon=1e-3,
                 profile=None,
                 backend='dense',
                 net=None,
                 seed=0,
                 progress=False,
                 solver=None,
                 flow=None,
                 width=DEFAULT_WIDTH,
                 ):
        # validated LPInstance
        self.instance = instance
        # additive accuracy of the objective
        self.epsilon = epsilon
        self.profile = profile if profile is not None else ProfileConfig()
        self.config = WeightConfig.for_instance(instance.m, instance.n, self.profile)
        # one vertex per column of A
        self.net = net if net is not None else Network(instance.n, mode=Mode.BROADCAST_CONGESTED_CLIQUE, seed=seed)
        # bits of one broadcast real
        self.width = width
        # normal-equations backend: 'dense' or 'laplacian' (flow = (graph, source, target))
        if solver is None:
            solver = make_solver(backend, instance.a_matrix, net=self.net, width=width, flow=flow, seed=seed)
        self.solver = solver
        self.sketch = SketchSource(net=self.net, seed=seed)
        self.progress = progress

        A = instance.a_matrix.tocoo()
        owners = np.zeros(instance.m, dtype=int)
        np.maximum.at(owners, A.row, A.col)
        # owners[j] holds coordinate j of x, w and c
        self.owners = owners
        self.load = int(np.bincount(owners, minlength=instance.n).max())

        self.reset()

    def reset(self):
        self.trace = []
        self._phase = 'init'
        self.iterations = 0
        self.solver.reset()
        self.sketch.reset()
        self.start_round = self.net.round_counter

    @property
    def barriers(self):
        return self.instance.barriers

    def share_rows(self, tag, values=1):
        """Every owner broadcasts `values` reals for each coordinate it holds.
        """
        with self.net.phase('lp.matvec'):
            self.net.broadcast_all(tag, values * self.load * self.width)

    def share_norm(self):
        """Every vertex broadcasts its local maximum and weighted sum of squares.
        """
        with self.net.phase('lp.norm'):
            self.net.broadcast_all('norm', 2 * self.width)

    def projection(self, w, s, y):
        """P_{x,w} y = y - W^{-1} A_x (A_x^T W^{-1} A_x)^{-1} A_x^T y, with A_x = diag(1/s) A.
        """
        A = self.instance.a_matrix
        v = self.solver.solve(1.0 / (w * s ** 2), A.T @ (y / s))
        self.share_rows('correction')
        return y - (A @ v) / (w * s)

    def initial_state(self, x, w, t):
        R = self.config.radius(self.profile)
        if self.profile.faithful:
            alpha = R / (1600.0 * math.sqrt(self.instance.n) * _log_floor(self.instance.m) ** 2)
        else:
            alpha = min(0.5, self.profile.step_scale / math.sqrt(self.instance.n))
        return PathState(x=np.array(x, dtype=float), w=np.array(w, dtype=float), t=t, R=R, alpha=alpha)

    def _newton_step(self, x, step):
        scale = 1.0
        if not self.profile.faithful:
            scale = min(1.0, self.profile.damping / max(float(np.max(np.abs(step[1]), initial=0.0)), 1e-300))
        x_new = x - scale * step[0]
        if self.barriers.interior(x_new).all():
            return x_new
        if self.profile.faithful:
            errmsg = 'Newton step left the domain at t-step {}'.format(self.iterations)
            log.error(errmsg)
            raise LeftDomain(errmsg)
        for _ in range(MAX_BACKTRACKS):
            scale /= 2.0
            x_new = x - scale * step[0]
            if self.barriers.interior(x_new).all():
                return x_new
        errmsg = 'Newton step left the domain after {} halvings'.format(MAX_BACKTRACKS)
        log.error(errmsg)
        raise LeftDomain(errmsg)

    def refresh_weights(self, x, w):
        """Regularized Lewis weights of A_x, warm-started from w."""
        cfg = self.config
        _, _, d2 = self.barriers.evaluate(x)
        R = self.config.radius(self.profile)
        precision = math.expm1(R)
        iterations = None
        if not self.profile.faithful:
            precision = max(precision, self.profile.weight_tolerance)
            iterations = self.profile.refresh_iterations
        base = np.maximum(w - cfg.c0, 1e-12)
        lewis = compute_apx_weights(self.instance.a_matrix, 1.0 / np.sqrt(d2), cfg.p, base, min(precision, 0.5),
                                    solver=self.solver, sketch=self.sketch, profile=self.profile,
                                    iterations=iterations)
        return lewis + cfg.c0

    def centering_inexact(self, state, t, c):
        """One Newton step on x at path parameter t, then one weight update.

        Returns the new PathState; its delta is the centrality measured
        before the step.
        """
        start = self.net.round_counter
        cfg = self.config
        x, w = state.x, state.w
        _, d1, d2 = self.barriers.evaluate(x)
        s = np.sqrt(d2)

        self.share_rows('gradient')
        projected = self.projection(w, s, (t * c + w * d1) / (w * s))
        self.share_norm()
        delta = mixed_weight_norm(projected, w, cfg.c_norm)

        x_new = self._newton_step(x, (projected / s, projected))

        z = np.log(self.refresh_weights(x_new, w))
        mu = cfg.eta / (12.0 * state.R)
        a = potential_gradient(z - np.log(w), mu)
        radius = cfg.c_norm * np.sqrt(w)
        ball = project_mixed_ball(a / radius, radius, net=self.net, owners=self.owners, width=self.width)
        size = delta if self.profile.faithful else min(delta, self.profile.damping)
        u = (1.0 - 6.0 / (7.0 * cfg.ck)) * size * ball.x / radius
        w_new = w * np.exp(u)

        self.iterations += 1
        self.trace.append({
            'phase': self._phase,
            't': float(t),
            'delta': delta,
            'rounds': self.net.round_counter - start,
            'residual': self.instance.residual(x_new),
        })
        return PathState(x=x_new, w=w_new, t=t, R=state.R, alpha=state.alpha, delta=delta)

    def path_following(self, state, t_start, t_end, eta, c):
        """Move t geometrically from t_start to t_end, then recenter at t_end.
        """
        t = t_start
        steps = 0
        postfix = {
            'phase': self._phase,
            't': '{:.3e}'.format(t),
            'delta': 0.0,
        }
        with tqdm(disable=not self.progress, postfix=postfix, desc='path following') as pbar:
            while t != t_end:
                state = self.centering_inexact(state, t, c)
                t = float(np.median([(1.0 - state.alpha) * t, t_end, (1.0 + state.alpha) * t]))
                steps += 1
                postfix['t'] = '{:.3e}'.format(t)
                postfix['delta'] = '{:.2e}'.format(state.delta)
                pbar.set_postfix(postfix)
                pbar.update(1)

            recenter = math.ceil(4.0 * self.config.ck * math.log(1.0 / eta))
            for _ in range(max(recenter, 1)):
                state = self.centering_inexact(state, t_end, c)
                pbar.update(1)
                if not self.profile.faithful and state.delta <= max(eta, 1e-9):
                    break
        state.t = t_end
        log.debug('path following to t = %.3e: %d steps', t_end, steps)
        return state

    def schedule(self):
        """(t1, eta1, t2, eta2) of the two path-following phases.
        """
        inst = self.instance
        m, U = inst.m, max(inst.U, 1.0)
        logm = _log_floor(m)
        constant = self.profile.constant
        eta1 = 1.0 / (constant(2.0 ** 18) * logm ** 3)
        eta2 = self.epsilon / (8.0 * U ** 2)
        if self.profile.faithful:
            t1 = 1.0 / (constant(2.0 ** 27) * m ** 1.5 * U ** 2 * logm ** 4)
            t2 = 2.0 * m / eta2
        else:
            # t1 U^2 bounds the gradient change, in the local norm, when c replaces the phase 1 cost
            t1 = 1.0 / (constant(2.0 ** 27) * U ** 2 * logm)
            # duality gap at the weighted center is about ||w||_1 / t
            t2 = 4.0 * self.config.c1 / self.epsilon
        return t1, eta1, t2, eta2

    def initial_weights(self, x):
        inst = self.instance
        _, _, d2 = self.barriers.evaluate(x)
        eta = 1.0 / (self.profile.constant(2.0 ** 16) * _log_floor(inst.m) ** 3)
        if not self.profile.faithful:
            eta = max(eta, self.profile.weight_tolerance)
        w = compute_initial_weights(inst.a_matrix, 1.0 / np.sqrt(d2), self.config.p, min(eta, 0.5),
                                    solver=self.solver, sketch=self.sketch, profile=self.profile)
        return w + self.config.c0

    def run(self):
        """Phase 1 recenters x0 for the cost -w phi'(x0), phase 2 follows c.
        """
        self.reset()
        inst = self.instance
        x0 = inst.x0
        self._phase = 'init'
        w = self.initial_weights(x0)
        _, d1, _ = self.barriers.evaluate(x0)
        d = -w * d1
        t1, eta1, t2, eta2 = self.schedule()
        log.info('lp solve: m=%d n=%d U=%.3e t1=%.3e t2=%.3e profile=%s',
                 inst.m, inst.n, inst.U, t1, t2, self.profile.profile.value)

        state = self.initial_state(x0, w, 1.0)
        self._phase = 'phase1'
        state = self.path_following(state, 1.0, t1, eta1, d)
        self._phase = 'phase2'
        state = self.path_following(state, t1, t2, eta2, inst.c)

        rounds = self.net.round_counter - self.start_round
        return LPResult(x=state.x,
                        objective=inst.objective(state.x),
                        rounds=rounds,
                        iterations=self.iterations,
                        profile=self.profile.profile.value,
                        weights=state.w,
                        trace=self.trace,
                        ledger=dict(self.net.round_ledger),
                        )


def lp_solve(instance, epsilon=1e-3, profile=None, backend='dense', net=None, seed=0, progress=False,
             flow=None, full_output=False):
    """x in the interior with c^T x <= OPT + epsilon.
    """
    if not epsilon > 0:
        raise ValueError('epsilon must be positive, got {}'.format(epsilon))
    solver = LPSolver(instance, epsilon=epsilon, profile=profile, backend=backend, net=net, seed=seed,
                      progress=progress, flow=flow)
    result = solver.run()
    log.info('lp solve: objective %.6e after %d centering steps, %d rounds',
             result.objective, result.iterations, result.rounds)
    return result if full_output else result.x


def lp_oracle(instance):
    """(x, OPT) from scipy's HiGHS solver.
    """
    bounds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi)
              for lo, hi in zip(instance.l, instance.u)]
    res = linprog(instance.c, A_eq=instance.a_matrix.T.tocsr(), b_eq=instance.b, bounds=bounds, method='highs')
    if res.status != 0:
        errmsg = 'reference LP solve failed: {}'.format(res.message)
        log.error(errmsg)
        raise Infeasible(errmsg)
    return res.x, float(res.fun)

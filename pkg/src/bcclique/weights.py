"""Leverage scores and l_p Lewis weights of M = diag(d) A.

Every routine works through a normal-equations backend, so the same code
runs centrally (no network) and with round accounting. The dense oracles at
the bottom are the ground truth for tests.
"""
import logging
import math

import numpy as np
import scipy.sparse as sp

from .backends import DenseSolver
from .config import ProfileConfig
from .exceptions import BadInitialWeight, DimensionMismatch
from .sketching import DEFAULT_SKETCH_CONSTANT, SketchSource, default_bit_count, jl_sketch_build, sketch_rows

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


def lewis_p(m):
    """p = 1 - 1/ln(4m), the exponent of the regularized Lewis weights.
    """
    return 1.0 - 1.0 / math.log(4 * m)


def _median3(lo, x, hi):
    return np.median(np.stack([lo, x, hi]), axis=0)


def _prepare(A, d):
    A = sp.csr_matrix(A, dtype=float)
    d = np.ones(A.shape[0]) if d is None else np.asarray(d, dtype=float)
    if d.shape != (A.shape[0],):
        errmsg = 'row scaling of shape {} for A of shape {}'.format(d.shape, A.shape)
        log.error(errmsg)
        raise DimensionMismatch(errmsg)
    return A, d


def compute_leverage_scores(A, d, eta, solver=None, sketch=None, sketch_constant=DEFAULT_SKETCH_CONSTANT,
                            delta=None):
    """(1 +- eta)-approximate leverage scores of M = diag(d) A.

    Sums the squares of M (M^T M)^{-1} M^T Q^(j) over the rows Q^(j) of a JL
    sketch built with eta / 4 from shared bits. When the sketch would have
    at least m rows, Q is the identity and the scores are exact.
    """
    A, d = _prepare(A, d)
    m = A.shape[0]
    solver = solver if solver is not None else DenseSolver(A)
    delta = delta if delta is not None else min(0.25, 1.0 / m ** 2)

    k = sketch_rows(min(eta / 4.0, 0.5), delta, sketch_constant)
    if k >= m:
        Q = np.eye(m)
    else:
        sketch = sketch if sketch is not None else SketchSource()
        Q = jl_sketch_build(m, eta / 4.0, delta, sketch.bits(default_bit_count(m)),
                            sketch_constant=sketch_constant, k=k).Q

    M = sp.diags(d) @ A
    # M^T Q^T is computed locally: vertex i knows every row of A it appears in
    X = solver.solve(d ** 2, np.asarray((M.T @ Q.T)))
    P = M @ X
    return np.asarray(P ** 2).sum(axis=1)


def _lewis_scaling(d, w, p):
    return d * w ** (0.5 - 1.0 / p)


def apx_weight_iterations(p, n, eta, profile=None):
    """T = ceil(80 (p/2 + 2/p) log(p n / (32 eta))), the logarithm floored at 1.
    """
    profile = profile if profile is not None else ProfileConfig()
    return max(1, math.ceil(profile.constant(80.0) * (p / 2.0 + 2.0 / p) * max(1.0, math.log(p * n / (32.0 * eta)))))


def compute_apx_weights(A, d, p, w0, eta, solver=None, sketch=None, profile=None, iterations=None,
                        check_initial=False):
    """Approximate l_p Lewis weights of M = diag(d) A, starting from w0.

    Each iteration computes leverage scores of W^{1/2 - 1/p} M to precision
    delta / 2, delta = (4 - p) eta / 256, and moves w by a step of 1/L,
    L = max(4, 8/p), clamped to within (1 +- r) w0, r = p^2 (4 - p) / 2^20.
    """
    A, d = _prepare(A, d)
    profile = profile if profile is not None else ProfileConfig()
    m, n = A.shape
    w0 = np.asarray(w0, dtype=float)
    if w0.shape != (m,) or np.any(w0 <= 0):
        errmsg = 'initial weights must be a positive {}-vector'.format(m)
        log.error(errmsg)
        raise BadInitialWeight(errmsg)

    L = max(4.0, 8.0 / p)
    r = p ** 2 * (4.0 - p) / profile.constant(2.0 ** 20)
    delta = (4.0 - p) * eta / profile.constant(256.0)
    if check_initial:
        exact = lewis_weights_oracle(sp.diags(d) @ A, p)
        gap = float(np.max(np.abs(exact - w0) / w0))
        if gap > r:
            errmsg = 'initial weights are {:.3e} off the Lewis weights, allowed {:.3e}'.format(gap, r)
            log.error(errmsg)
            raise BadInitialWeight(errmsg)

    T = iterations if iterations is not None else apx_weight_iterations(p, n, eta, profile)
    w = w0.copy()
    for _ in range(T - 1):
        sigma = compute_leverage_scores(A, _lewis_scaling(d, w, p), delta / 2.0, solver=solver, sketch=sketch,
                                        sketch_constant=profile.sketch_constant)
        w = _median3((1.0 - r) * w0, w - (w0 - w0 / w * sigma) / L, (1.0 + r) * w0)
    return w


def compute_initial_weights(A, d, p_target, eta, solver=None, sketch=None, profile=None):
    """Lewis weights for p_target by a homotopy in p starting at p = 2.

    At p = 2 the Lewis weights are the leverage scores, so the homotopy
    starts from compute_leverage_scores. p then moves toward p_target in
    steps of h = min(2, p) r / (sqrt(n) log(m e^2 / n)).
    """
    A, d = _prepare(A, d)
    profile = profile if profile is not None else ProfileConfig()
    m, n = A.shape
    p = 2.0
    r0 = p ** 2 * (4.0 - p) / profile.constant(2.0 ** 20)
    w = compute_leverage_scores(A, d, min(0.5, r0 / 4.0), solver=solver, sketch=sketch,
                                sketch_constant=profile.sketch_constant)
    w = np.maximum(w, 1e-12)

    steps = 0
    while p != p_target:
        r = p ** 2 * (4.0 - p) / profile.constant(2.0 ** 20)
        h = min(2.0, p) / (math.sqrt(n) * math.log(m * math.e ** 2 / n)) * r
        p_new = float(np.median([p - h, p_target, p + h]))
        precision = p ** 2 * (4.0 - p) / profile.constant(2.0 ** 22)
        w = compute_apx_weights(A, d, p_new, w ** (p_new / p), min(precision, 0.5), solver=solver, sketch=sketch,
                                profile=profile)
        p = p_new
        steps += 1
    log.debug('initial weights: %d homotopy steps down to p = %.4f', steps, p_target)
    return compute_apx_weights(A, d, p_target, w, eta, solver=solver, sketch=sketch, profile=profile)


# dense oracles

def leverage_scores_oracle(M):
    """diag(M (M^T M)^{-1} M^T) through a thin QR factorization.
    """
    M = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    Q, _ = np.linalg.qr(M)
    return (Q ** 2).sum(axis=1)


def lewis_weights_oracle(M, p, tol=1e-12, max_iter=10000):
    """Fixed point w = sigma(W^{1/2 - 1/p} M), iterated in the form w <- tau(w)^{p/2}.

    tau_i = m_i^T (M^T W^{1 - 2/p} M)^{-1} m_i; the map contracts for p < 4.
    """
    M = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    w = np.ones(M.shape[0])
    for _ in range(max_iter):
        sigma = leverage_scores_oracle(M * (w ** (0.5 - 1.0 / p))[:, None])
        tau = sigma / w ** (1.0 - 2.0 / p)
        w_new = tau ** (p / 2.0)
        if np.max(np.abs(w_new - w) / w) < tol:
            return w_new
        w = w_new
    log.warning('Lewis weight iteration stopped after %d steps', max_iter)
    return w

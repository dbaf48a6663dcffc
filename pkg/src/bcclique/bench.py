"""Scaling sweeps over graph size, seed and precision.

Every sweep returns a list of flat dict rows, one per cell, in the order
sizes x seeds (x epsilons). Cells are deterministic in their seed, so
repeating a seed repeats the row.
"""
import csv
import io
import logging
import math

import numpy as np
from scipy import stats
from tqdm import tqdm

from .config import SweepConfig
from .graph import erdos_renyi, lnorm, spanner_stretch
from .lapsolve import SolverHandle, laplacian_solve
from .mcmf import mcmf_oracle, min_cost_max_flow, random_flow_instance
from .sparsifier import spectral_sparsify
from .spanner import spanner

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


BENCHMARKS = ('spanner', 'sparsify', 'lapsolve', 'mcmf')


def _cells(config, with_epsilon=False):
    for n in config.sizes:
        for seed in config.seeds:
            if with_epsilon:
                for epsilon in config.epsilons:
                    yield n, seed, epsilon
            else:
                yield n, seed, None


def bench_spanner(config):
    rows = []
    for n, seed, _ in _cells(config):
        G = erdos_renyi(n, config.density, seed=seed, connected=True)
        result = spanner(G, config.k, seed=seed)
        stretch = spanner_stretch(G, [G.index[e] for e in result.edges()])
        rows.append({
            'n': n,
            'seed': seed,
            'm': G.m,
            'k': config.k,
            'rounds': result.rounds,
            'spanner_edges': len(result.f_plus),
            'stretch': stretch,
            'pass': bool(stretch <= 2 * config.k - 1 + 1e-9),
        })
    return rows


def bench_sparsify(config):
    rows = []
    for n, seed, epsilon in _cells(config, with_epsilon=True):
        G = erdos_renyi(n, config.density, seed=seed, connected=True)
        out = spectral_sparsify(G, epsilon=epsilon, seed=seed, profile=config.profile)
        lo, hi, ok = out.verification
        rows.append({
            'n': n,
            'seed': seed,
            'epsilon': epsilon,
            'm': G.m,
            'rounds': out.rounds_used,
            'sparsifier_edges': out.h.m,
            'lambda_min': lo,
            'lambda_max': hi,
            'retries': out.retries,
            'pass': ok,
        })
    return rows


def bench_lapsolve(config):
    """Planted solutions; the preconditioner is built once per (n, seed).
    """
    rows = []
    for n in config.sizes:
        for seed in config.seeds:
            G = erdos_renyi(n, config.density, seed=seed, connected=True, weight_range=(1.0, 10.0))
            handle = SolverHandle.build(G, seed=seed, profile=config.profile)
            rng = np.random.default_rng(seed)
            x = rng.standard_normal(n)
            x -= x.mean()
            L = G.laplacian()
            b = L.apply(x)
            for epsilon in config.epsilons:
                result = laplacian_solve(handle, b, epsilon, full_output=True)
                error = lnorm(L, x - result.y) / lnorm(L, x)
                rows.append({
                    'n': n,
                    'seed': seed,
                    'epsilon': epsilon,
                    'iterations': result.iterations,
                    'rounds': result.rounds,
                    'preprocessing_rounds': handle.preprocessing_rounds,
                    'error': error,
                    'pass': bool(error <= epsilon),
                })
    return rows


def bench_mcmf(config):
    rows = []
    for n, seed, _ in _cells(config):
        inst = random_flow_instance(n, M=config.max_value, density=config.density, seed=seed)
        flow = min_cost_max_flow(inst, seed=seed, profile=config.profile, backend='dense')
        best = mcmf_oracle(inst)
        rows.append({
            'n': n,
            'seed': seed,
            'm': inst.m,
            'rounds': flow.rounds,
            'value': flow.value,
            'cost': flow.cost,
            'retries': flow.retries,
            'pass': bool((flow.value, flow.cost) == (best.value, best.cost)),
        })
    return rows


def bench_suite(name, config=None, progress=False):
    """Rows of one benchmark over the sweep.
    """
    config = config if config is not None else SweepConfig()
    runners = {
        'spanner': bench_spanner,
        'sparsify': bench_sparsify,
        'lapsolve': bench_lapsolve,
        'mcmf': bench_mcmf,
    }
    if name not in runners:
        raise ValueError('unknown benchmark {!r}, expected one of {}'.format(name, ', '.join(BENCHMARKS)))
    if not config.sizes:
        return []
    postfix = {'benchmark': name}
    with tqdm(total=len(config.sizes), postfix=postfix, disable=not progress) as pbar:
        rows = []
        for n in config.sizes:
            rows += runners[name](config.model_copy(update={'sizes': [n]}))
            pbar.update(1)
    log.info('bench %s: %d rows', name, len(rows))
    return rows


def fit_exponent(xs, ys):
    """(slope, r^2) of log y against log x.
    """
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    keep = (xs > 0) & (ys > 0)
    if len(np.unique(xs[keep])) < 2:
        return math.nan, math.nan
    fit = stats.linregress(np.log(xs[keep]), np.log(ys[keep]))
    return float(fit.slope), float(fit.rvalue ** 2)


def fit_affine(xs, ys):
    """(slope, intercept, r^2) of a least-squares line.
    """
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if len(np.unique(xs)) < 2:
        return math.nan, math.nan, math.nan
    fit = stats.linregress(xs, ys)
    return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)


def summarize(name, rows):
    """Fitted growth of the round count for a finished sweep.
    """
    if not rows:
        return {'benchmark': name, 'rows': 0}
    out = {'benchmark': name, 'rows': len(rows), 'pass_rate': float(np.mean([r['pass'] for r in rows]))}
    slope, r2 = fit_exponent([r['n'] for r in rows], [r['rounds'] for r in rows])
    out['rounds_exponent'], out['rounds_exponent_r2'] = slope, r2
    if name == 'lapsolve':
        # iterations should be affine in log(1/epsilon)
        xs = [math.log(1.0 / r['epsilon']) for r in rows]
        slope, intercept, r2 = fit_affine(xs, [r['iterations'] for r in rows])
        out['iterations_per_log'], out['iterations_intercept'], out['iterations_r2'] = slope, intercept, r2
        # C in iterations <= C sqrt(3) log(1/epsilon)
        out['iteration_constant'] = float(max(r['iterations'] / (math.sqrt(3.0) * x) for r, x in zip(rows, xs)))
    return out


def to_csv(rows):
    """CSV text with a header taken from the first row; empty for no rows.
    """
    if not rows:
        return ''
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()), lineterminator='\n')
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()

"""Command-line harness: one subcommand per algorithm plus `bench`.

Every subcommand prints a JSON report (or CSV for bench) and exits 0 when
all verdicts pass, 1 when one fails or the library raises, and 2 on usage
errors.
"""
import argparse
import json
import logging
import sys
import time

import numpy as np

from . import __version__
from .bench import BENCHMARKS, bench_suite, summarize, to_csv
from .config import Mode, Profile, ProfileConfig, SweepConfig, default_seed
from .exceptions import BCCliqueError
from .graph import erdos_renyi, lnorm, read_edge_list, spanner_stretch
from .lapsolve import SolverHandle, laplacian_solve
from .lpsolve import LPInstance, LPSolver, lp_oracle
from .mcmf import FlowInstance, mcmf_oracle, min_cost_max_flow
from .netsim import Network
from .spanner import spanner
from .sparsifier import spectral_sparsify

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


def _add_graph_arguments(parser):
    parser.add_argument('--graph', help='edge list with lines "u v w"; a random graph is used if omitted')
    parser.add_argument('--n', type=int, default=16, help='vertices of the random graph')
    parser.add_argument('--density', type=float, default=0.5, help='edge probability of the random graph')


def _add_profile_arguments(parser):
    parser.add_argument('--profile', choices=[p.value for p in Profile], default=Profile.PRACTICAL.value)
    parser.add_argument('--prefactor', type=float, default=10.0,
                        help='replacement for large constants in the practical profile')


def build_parser():
    parser = argparse.ArgumentParser(prog='bcclique', description=__doc__.splitlines()[0])
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    parser.add_argument('--seed', type=int, default=None, help='defaults to $BCCLIQUE_SEED or 0')
    parser.add_argument('--verbose', action='store_true', help='log at DEBUG level')
    parser.add_argument('--log', dest='message_log', help='write the message log as JSON lines to this path')
    parser.add_argument('--output', help='write the report here instead of stdout')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('spanner', help='(2k-1)-spanner in Broadcast CONGEST')
    _add_graph_arguments(p)
    p.add_argument('--k', type=int, default=2)

    p = sub.add_parser('sparsify', help='spectral sparsifier in Broadcast CONGEST')
    _add_graph_arguments(p)
    _add_profile_arguments(p)
    p.add_argument('--epsilon', type=float, default=0.5)
    p.add_argument('--bundle-constant', type=float, default=1.0)
    p.add_argument('--retries', type=int, default=3)
    p.add_argument('--mode', choices=[m.value for m in Mode], default=Mode.BROADCAST_CONGEST.value)

    p = sub.add_parser('lapsolve', help='Laplacian solve against a planted solution')
    _add_graph_arguments(p)
    _add_profile_arguments(p)
    p.add_argument('--epsilon', type=float, default=1e-6)

    p = sub.add_parser('lpsolve', help='interior point LP solve of a JSON instance')
    p.add_argument('--instance', required=True)
    p.add_argument('--epsilon', type=float, default=1e-3)
    _add_profile_arguments(p)
    p.add_argument('--backend', choices=['dense', 'laplacian'], default='dense')
    p.add_argument('--no-check', dest='check', action='store_false', help='skip the reference LP solve')

    p = sub.add_parser('mcmf', help='exact min-cost max-flow')
    p.add_argument('--input', required=True, help='DIMACS file or lines "u v cap cost"')
    p.add_argument('--source', type=int)
    p.add_argument('--sink', type=int)
    _add_profile_arguments(p)
    p.add_argument('--backend', choices=['dense', 'laplacian'], default='laplacian')
    p.add_argument('--retries', type=int, default=3)
    p.add_argument('--no-check', dest='check', action='store_false', help='skip the combinatorial oracle')

    p = sub.add_parser('bench', help='CSV scaling sweep')
    p.add_argument('benchmark', choices=BENCHMARKS)
    p.add_argument('--n', dest='sizes', default='', help='comma-separated sizes')
    p.add_argument('--seeds', default='0', help='comma-separated seeds')
    p.add_argument('--epsilon', dest='epsilons', default='0.5', help='comma-separated precisions')
    p.add_argument('--k', type=int, default=2)
    p.add_argument('--density', type=float, default=0.5)
    p.add_argument('--max-value', type=int, default=5)
    p.add_argument('--summary', help='write fitted exponents as JSON to this path')
    _add_profile_arguments(p)
    return parser


def _profile(args):
    return ProfileConfig(profile=args.profile, prefactor=args.prefactor)


def _graph(args, seed):
    if args.graph:
        with open(args.graph) as f:
            return read_edge_list(f)
    return erdos_renyi(args.n, args.density, seed=seed, connected=True, weight_range=(1.0, 10.0))


def _export(net, args):
    if args.message_log:
        net.export_log(args.message_log)


def run_spanner(args, seed):
    G = _graph(args, seed)
    net = Network(G.n, mode=Mode.BROADCAST_CONGEST, topology=G.edges, seed=seed)
    result = spanner(G, args.k, net=net, seed=seed)
    _export(net, args)
    stretch = spanner_stretch(G, [G.index[e] for e in result.edges()])
    report = {
        'n': G.n,
        'm': G.m,
        'k': args.k,
        'edges': [list(e) for e in result.edges()],
        'orientation': [list(result.orientation[e]) for e in result.edges()],
        'rounds': result.rounds,
        'round_ledger': dict(net.round_ledger),
        'stretch': stretch,
        'views_consistent': result.views_consistent(),
    }
    verdicts = {'stretch': stretch <= 2 * args.k - 1 + 1e-9, 'views': report['views_consistent']}
    return report, verdicts


def run_sparsify(args, seed):
    G = _graph(args, seed)
    profile = _profile(args)
    out = spectral_sparsify(G,
                            epsilon=args.epsilon,
                            seed=seed,
                            bundle_constant=args.bundle_constant,
                            retries=args.retries,
                            profile=profile,
                            mode=Mode(args.mode),
                            )
    if args.message_log:
        log.warning('sparsify does not export a message log')
    report = out.to_dict()
    report.update({'n': G.n, 'm': G.m})
    return report, {'spectral_bounds': bool(out.verification[2])}


def run_lapsolve(args, seed):
    G = _graph(args, seed)
    handle = SolverHandle.build(G, seed=seed, profile=_profile(args))
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(G.n)
    x -= x.mean()
    L = G.laplacian()
    result = laplacian_solve(handle, L.apply(x), args.epsilon, full_output=True)
    _export(handle.net, args)
    error = lnorm(L, x - result.y) / lnorm(L, x)
    report = {
        'n': G.n,
        'm': G.m,
        'epsilon': args.epsilon,
        'iterations': result.iterations,
        'rounds': result.rounds,
        'preprocessing_rounds': handle.preprocessing_rounds,
        'spectrum': list(handle.spectrum),
        'relative_error': error,
    }
    return report, {'precision': bool(error <= args.epsilon)}


def run_lpsolve(args, seed):
    inst = LPInstance.from_json(args.instance)
    solver = LPSolver(inst, epsilon=args.epsilon, profile=_profile(args), backend=args.backend, seed=seed)
    result = solver.run()
    _export(solver.net, args)
    report = {
        'x': result.x.tolist(),
        'objective': result.objective,
        'rounds': result.rounds,
        'round_ledger': result.ledger,
        'iterations': result.iterations,
        'profile': result.profile,
        'trace': result.trace,
    }
    verdicts = {'feasible': bool(inst.residual(result.x) <= 1e-8 * max(1.0, np.linalg.norm(inst.b)))}
    if args.check:
        _, opt = lp_oracle(inst)
        report['reference_objective'] = opt
        verdicts['objective'] = bool(result.objective <= opt + args.epsilon)
    return report, verdicts


def run_mcmf(args, seed):
    inst = FlowInstance.from_file(args.input, source=args.source, sink=args.sink)
    flow = min_cost_max_flow(inst, seed=seed, profile=_profile(args), backend=args.backend, retries=args.retries)
    if args.message_log:
        log.warning('mcmf does not export a message log')
    report = flow.to_dict()
    report['profile'] = args.profile
    verdicts = {'feasible': inst.is_feasible(flow.flow) and not inst.has_augmenting_path(flow.flow)}
    if args.check:
        best = mcmf_oracle(inst)
        report['reference'] = {'value': best.value, 'cost': best.cost}
        verdicts['optimal'] = (flow.value, flow.cost) == (best.value, best.cost)
    return report, verdicts


def run_bench(args, seed):
    config = SweepConfig(sizes=args.sizes,
                         seeds=args.seeds,
                         epsilons=args.epsilons,
                         k=args.k,
                         density=args.density,
                         max_value=args.max_value,
                         profile=_profile(args),
                         )
    rows = bench_suite(args.benchmark, config)
    if args.summary:
        with open(args.summary, 'w') as f:
            json.dump(summarize(args.benchmark, rows), f, indent=2, sort_keys=True)
    return rows, {'rows': all(r['pass'] for r in rows)}


COMMANDS = {
    'spanner': run_spanner,
    'sparsify': run_sparsify,
    'lapsolve': run_lapsolve,
    'lpsolve': run_lpsolve,
    'mcmf': run_mcmf,
    'bench': run_bench,
}


def run(argv=None):
    """Parse argv, run the subcommand and return (report, exit code).

    The report is a dict for every subcommand but bench, whose rows come
    back as a list.
    """
    return execute(build_parser().parse_args(argv))


def execute(args):
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    seed = args.seed if args.seed is not None else default_seed()
    started = time.perf_counter()
    try:
        report, verdicts = COMMANDS[args.command](args, seed)
    except (BCCliqueError, ValueError, OSError) as err:
        log.debug('command %s failed', args.command, exc_info=True)
        return {'error': str(err), 'type': type(err).__name__, 'command': args.command}, 1
    code = 0 if all(verdicts.values()) else 1
    if args.command == 'bench':
        return report, code

    config = {k: v for k, v in vars(args).items() if k not in ('output', 'message_log', 'verbose')}
    config['seed'] = seed
    report = {
        'command': args.command,
        'config': config,
        'seed': seed,
        'verdicts': {k: bool(v) for k, v in verdicts.items()},
        'pass': code == 0,
        'result': report,
        'elapsed': time.perf_counter() - started,
    }
    return report, code


def _jsonable(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError('{} is not JSON serializable'.format(type(value).__name__))


def main(argv=None):
    args = build_parser().parse_args(argv)
    report, code = execute(args)
    if isinstance(report, list):
        text = to_csv(report)
    else:
        text = json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + '\n'
    if args.output:
        with open(args.output, 'w') as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == '__main__':
    raise SystemExit(main())

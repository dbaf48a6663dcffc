"""Spectral sparsification by repeated bundle spanners and edge sampling.

`AdHocSparsifier` runs in Broadcast CONGEST and samples an edge only when a
spanner computation first touches it; `APrioriSparsifier` samples every
leftover edge centrally after each bundle and serves as the reference.
Both produce the same output distribution when they read the same marking
bits.
"""
import abc
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from tqdm import tqdm

from .config import Mode, Profile
from .encoding import id_bits
from .exceptions import NullSpaceMismatch, RetriesExhausted
from .graph import ProbWeightedGraph, WeightedGraph
from .netsim import Message, Network
from .spanner import bundle_spanner, spanner_appendix_oracle

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


FAITHFUL_BUNDLE_CONSTANT = 400.0


def stretch_parameter(n):
    """k = ceil(log2 n), at least 1.
    """
    return max(1, math.ceil(math.log2(max(n, 2))))


def bundle_count(n, epsilon, bundle_constant=FAITHFUL_BUNDLE_CONSTANT):
    """t = bundle_constant * log2(n)^2 / epsilon^2, rounded up.
    """
    return max(1, math.ceil(bundle_constant * math.log2(max(n, 2)) ** 2 / epsilon ** 2))


def iteration_count(m):
    """ceil(log2 m) sampling iterations, at least one.
    """
    return max(1, math.ceil(math.log2(max(m, 2))))


@dataclass
class SparsifierOutput:
    h: WeightedGraph
    # edge -> (tail, head)
    orientation: dict
    rounds_used: int
    epsilon: float
    k: int = 0
    t: int = 0
    iterations: int = 0
    retries: int = 0
    # (lambda_min, lambda_max, pass) when verified
    verification: tuple = None
    profile: str = Profile.PRACTICAL.value
    seed: int = 0

    def out_degrees(self):
        degrees = np.zeros(self.h.n, dtype=int)
        for tail, _ in self.orientation.values():
            degrees[tail] += 1
        return degrees

    def to_dict(self):
        out = {
            'edges': [[int(u), int(v), float(w)] for u, v, w in self.h.triples()],
            'orientation': [[int(a), int(b)] for a, b in self.orientation.values()],
            'rounds': int(self.rounds_used),
            'epsilon': self.epsilon,
            'k': self.k,
            't': self.t,
            'iterations': self.iterations,
            'retries': self.retries,
            'profile': self.profile,
            'seed': self.seed,
        }
        if self.verification is not None:
            lo, hi, ok = self.verification
            out['lambda_min'], out['lambda_max'], out['pass'] = float(lo), float(hi), bool(ok)
        return out


class Sparsifier(abc.ABC):
    """Base class of the two sparsification schedules.
    """
    def __init__(self,
                 graph,
                 epsilon=0.5,
                 bundle_constant=1.0,
                 k=None,
                 t=None,
                 seed=0,
                 progress=False,
                 ):
        # graph to sparsify
        self.graph = graph
        # target quality of the sparsifier
        self.epsilon = epsilon
        # bundle spanners have stretch 2k-1
        self.k = k if k is not None else stretch_parameter(graph.n)
        # spanners per bundle
        self.t = t if t is not None else bundle_count(graph.n, epsilon, bundle_constant)
        # number of bundle-and-sample iterations
        self.iterations = iteration_count(graph.m)
        # marking bits and edge samples are derived from seed
        self.seed = seed
        # show a progress bar over the iterations
        self.progress = progress

        self.reset()

    def reset(self):
        """Every edge present with its original weight.
        """
        # edges of E_i as ids into self.graph.edges
        self.remaining = list(range(self.graph.m))
        # weight exponent, w(e) = 4^scale_exponent * w_0(e)
        self.scale_exponent = np.zeros(self.graph.m, dtype=int)
        self.orientation = {}
        self.rounds_used = 0

    def current_weights(self, ids):
        return self.graph.weights[ids] * 4.0 ** self.scale_exponent[ids]

    def output(self, ids):
        ids = sorted(ids)
        h = self.graph.subgraph(ids, self.current_weights(ids))
        orientation = {e: self.orientation[e] for e in h.edges}
        return SparsifierOutput(h=h,
                                orientation=orientation,
                                rounds_used=self.rounds_used,
                                epsilon=self.epsilon,
                                k=self.k,
                                t=self.t,
                                iterations=self.iterations,
                                seed=self.seed,
                                )

    @abc.abstractmethod
    def run_iteration(self, i):
        """One bundle computation followed by sampling.
        To be defined in children classes.
        """
        pass

    @abc.abstractmethod
    def finish(self):
        """Return the SparsifierOutput after the last iteration.
        """
        pass

    def run(self):
        postfix = {
            'edges': len(self.remaining),
            'rounds': 0,
        }
        with tqdm(total=self.iterations, postfix=postfix, disable=not self.progress) as pbar:
            for i in range(1, self.iterations + 1):
                self.run_iteration(i)
                postfix['edges'] = len(self.remaining)
                postfix['rounds'] = self.rounds_used
                pbar.set_postfix(postfix)
                pbar.update(1)
        return self.finish()


class AdHocSparsifier(Sparsifier):
    """Sparsifier in Broadcast CONGEST with on-the-fly edge sampling.

    The survival probability of an edge is kept as an integer exponent j,
    p = 4^-j, reset to zero whenever the edge lands in a bundle.
    """
    def __init__(self,
                 graph,
                 net=None,
                 mode=Mode.BROADCAST_CONGEST,
                 **kwargs
                 ):
        # communication network, the graph itself unless given
        self.net = net
        # model of the network built when none is given
        self.mode = Mode(mode)
        super().__init__(graph, **kwargs)

    def reset(self):
        super().reset()
        if self.net is None:
            self.net = Network(self.graph.n,
                               mode=self.mode,
                               topology=self.graph.edges,
                               seed=self.seed,
                               )
        self.round_start = self.net.round_counter
        self.prob_exponent = np.zeros(self.graph.m, dtype=int)
        # iteration in which each edge last entered a bundle, 0 for never
        self.last_member = np.zeros(self.graph.m, dtype=int)
        self.last_bundle = set()
        # per iteration: edge id -> (prob_exponent, iteration - last_member)
        self.history = []

    def probabilities(self, ids):
        return 4.0 ** -self.prob_exponent[ids]

    def run_iteration(self, i):
        ids = self.remaining
        if not ids:
            self.last_bundle = set()
            return
        layer = ProbWeightedGraph(self.graph.subgraph(ids, self.current_weights(ids)), self.probabilities(ids))
        bundle = bundle_spanner(layer, self.k, self.t, net=self.net, marking_key=(i,), epsilon=self.epsilon)
        self.orientation.update(bundle.orientation)

        self.remaining = [e for e in ids if self.graph.edges[e] not in bundle.c]
        for e in self.remaining:
            if self.graph.edges[e] in bundle.b:
                self.prob_exponent[e] = 0
                self.last_member[e] = i
            else:
                self.prob_exponent[e] += 1
                self.scale_exponent[e] += 1
        self.last_bundle = bundle.b
        self.history.append({e: (int(self.prob_exponent[e]), i - int(self.last_member[e])) for e in self.remaining})
        self.rounds_used = self.net.round_counter - self.round_start
        log.debug('iteration %d: |B|=%d |C|=%d, %d edges left', i, len(bundle.b), len(bundle.c), len(self.remaining))

    def finish(self):
        """Lower-id endpoints sample the leftover edges and announce the survivors.
        """
        kept = [e for e in self.remaining if self.graph.edges[e] in self.last_bundle]
        queues = {}
        for e in self.remaining:
            u, v = self.graph.edges[e]
            if self.graph.edges[e] in self.last_bundle:
                continue
            # edges are stored with u < v, so u samples
            self.net.record_decision((u, v), u, 'final_sample')
            p = 4.0 ** -self.prob_exponent[e]
            if self.net.vertices[u].rng.random() < p:
                kept.append(e)
                self.orientation[(u, v)] = (u, v)
                queues.setdefault(u, []).append(Message('sampled', v, id_bits(self.graph.n)))

        slot = 0
        with self.net.phase('sparsify.final_sample'):
            while any(slot < len(q) for q in queues.values()):
                self.net.broadcast({u: q[slot] for u, q in queues.items() if slot < len(q)})
                slot += 1
        self.rounds_used = self.net.round_counter - self.round_start
        return self.output(kept)


class APrioriSparsifier(Sparsifier):
    """Centralized reference: p == 1 bundles, then every other edge survives with probability 1/4.
    """
    def reset(self):
        super().reset()
        self.rng = np.random.default_rng([self.seed, 1])

    def run_iteration(self, i):
        ids = self.remaining
        if not ids:
            return
        layer_edges = list(ids)
        bundle = set()
        for l in range(self.t):
            if not layer_edges:
                break
            sub = self.graph.subgraph(layer_edges, self.current_weights(layer_edges))
            f_plus = spanner_appendix_oracle(sub, self.k, seed=self.seed, marking_key=(i, l), epsilon=self.epsilon)
            for e in f_plus:
                self.orientation.setdefault(e, e)
            bundle |= f_plus
            layer_edges = [e for e in layer_edges if self.graph.edges[e] not in f_plus]

        self.remaining = []
        for e in ids:
            if self.graph.edges[e] in bundle:
                self.remaining.append(e)
            elif self.rng.random() < 0.25:
                self.remaining.append(e)
                self.scale_exponent[e] += 1
                self.orientation[self.graph.edges[e]] = self.graph.edges[e]

    def finish(self):
        return self.output(self.remaining)


def _bundle_constant(bundle_constant, profile):
    if profile is not None and getattr(profile, 'faithful', False):
        return FAITHFUL_BUNDLE_CONSTANT
    return bundle_constant


def spectral_sparsify(G,
                      epsilon=0.5,
                      seed=0,
                      bundle_constant=1.0,
                      k=None,
                      t=None,
                      retries=3,
                      verify=True,
                      strict=False,
                      profile=None,
                      mode=Mode.BROADCAST_CONGEST,
                      progress=False,
                      ):
    """(1 +- epsilon)-spectral sparsifier computed in Broadcast CONGEST.

    With verify, a failed quality check triggers a rerun with seed + attempt,
    up to retries extra attempts. The last output is returned with
    pass=False if none succeeds, unless strict, which raises RetriesExhausted.
    """
    constant = _bundle_constant(bundle_constant, profile)
    out = None
    for attempt in range(retries + 1):
        sparsifier = AdHocSparsifier(G,
                                     epsilon=epsilon,
                                     bundle_constant=constant,
                                     k=k,
                                     t=t,
                                     seed=seed + attempt,
                                     mode=mode,
                                     progress=progress,
                                     )
        out = sparsifier.run()
        out.retries = attempt
        if profile is not None:
            out.profile = profile.profile.value
        if not verify:
            return out
        try:
            out.verification = verify_sparsifier(G, out.h, epsilon)
        except NullSpaceMismatch:
            out.verification = (0.0, math.inf, False)
        if out.verification[2]:
            return out
        log.warning('sparsifier attempt %d failed verification: lambda in [%.4f, %.4f]',
                    attempt, out.verification[0], out.verification[1])
    if strict:
        errmsg = 'no (1 +- {}) sparsifier after {} attempts'.format(epsilon, retries + 1)
        log.error(errmsg)
        raise RetriesExhausted(errmsg)
    return out


def spectral_sparsify_apriori(G, epsilon=0.5, seed=0, bundle_constant=1.0, k=None, t=None, profile=None):
    """Centralized reference sparsifier with a fixed bundle size.
    """
    sparsifier = APrioriSparsifier(G,
                                   epsilon=epsilon,
                                   bundle_constant=_bundle_constant(bundle_constant, profile),
                                   k=k,
                                   t=t,
                                   seed=seed,
                                   )
    return sparsifier.run()


def verify_sparsifier(G, H, epsilon):
    """Extreme generalized eigenvalues of (L_G, L_H) off the common null space.

    Returns (lambda_min, lambda_max, pass) with pass iff both lie in
    [1 - epsilon, 1 + epsilon].
    """
    labels_g = G.components()
    labels_h = H.components()
    if len(set(labels_h)) > len(set(labels_g)):
        errmsg = 'H has {} components, G has {}'.format(len(set(labels_h)), len(set(labels_g)))
        log.error(errmsg)
        raise NullSpaceMismatch(errmsg)

    indicators = np.zeros((G.n, len(set(labels_g))))
    for j, label in enumerate(np.unique(labels_g)):
        indicators[labels_g == label, j] = 1.0
    Q = scipy.linalg.null_space(indicators.T)
    if Q.shape[1] == 0:
        return 1.0, 1.0, True

    LG = Q.T @ G.laplacian().dense() @ Q
    LH = Q.T @ H.laplacian().dense() @ Q
    vals = scipy.linalg.eigh(LG, LH, eigvals_only=True)
    lo, hi = float(vals.min()), float(vals.max())
    return lo, hi, bool(1 - epsilon <= lo and hi <= 1 + epsilon)


def rayleigh_ratios(G, H, n_samples=1000, seed=None):
    """x^T L_G x / x^T L_H x for random x orthogonal to the constants.
    """
    rng = np.random.default_rng(seed)
    LG, LH = G.laplacian(), H.laplacian()
    ratios = []
    for _ in range(n_samples):
        x = rng.standard_normal(G.n)
        x -= x.mean()
        ratios.append(LG.quadratic_form(x) / LH.quadratic_form(x))
    return np.array(ratios)

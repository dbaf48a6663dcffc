"""Spanners of graphs whose edges exist only with some probability.

The distributed construction runs vertex by vertex inside a Broadcast
CONGEST network. An edge is sampled only when one of its endpoints first
tries to use it; the outcome reaches the other endpoint without ever being
sent, through the choices the sampling vertex announces. With p == 1 the
construction is the clustering spanner of Baswana and Sen, which
`spanner_appendix_oracle` computes centrally from the same marking bits.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from .config import Mode
from .encoding import id_bits, weight_bits
from .graph import ProbWeightedGraph, WeightedGraph, integer_weights
from .netsim import Message, Network

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


# shared marking streams are keyed (MARKING_SALT, *marking_key, phase, center)
MARKING_SALT = 2 ** 31 - 1


def _edge(u, v):
    return (u, v) if u < v else (v, u)


def marking_probability(n, k):
    return float(n) ** (-1.0 / k)


def is_marked(seed, marking_key, phase, center, n, k):
    """Marking bit of the cluster centred at center in the given phase.

    Depends only on (seed, marking_key, phase, center), so every algorithm
    reading it with the same key sees the same bit.
    """
    seq = np.random.SeedSequence([seed, MARKING_SALT, *marking_key, phase, center])
    rng = np.random.Generator(np.random.Philox(seq))
    return rng.random() < marking_probability(n, k)


def connect(v, N, p, rng=None, decided=()):
    """Scan the candidates of v lightest first, accepting each with its probability.

    N maps candidate -> weight and p maps candidate -> probability. Ties in
    weight break toward the smaller id. Candidates in decided are known to
    exist and are accepted without a draw.
    Returns (u, rejected): the accepted candidate (None for no candidate)
    and the candidates rejected before it, in scan order.
    """
    rejected = []
    for x in sorted(N, key=lambda x: (N[x], x)):
        if x in decided or p[x] >= 1.0:
            return x, rejected
        if p[x] > 0.0:
            if rng is None:
                rng = np.random.default_rng()
            if rng.random() < p[x]:
                return x, rejected
        rejected.append(x)
    log.debug('vertex %d accepted none of %d candidates', v, len(rejected))
    return None, rejected


@dataclass
class ClusterState:
    """Clusters of the current phase as rooted trees.
    """
    # cluster id (= center id) per vertex, None once a vertex left all clusters
    center: list
    parent: list
    depth: list
    # ids of the clusters marked in the current phase
    marked: set = field(default_factory=set)

    @classmethod
    def singletons(cls, n):
        return cls(center=list(range(n)), parent=[None] * n, depth=[0] * n)

    def centers(self):
        return sorted({c for c in self.center if c is not None})

    def members(self, cid):
        return [v for v, c in enumerate(self.center) if c == cid]

    def active(self):
        return [v for v, c in enumerate(self.center) if c is not None]


@dataclass
class SpannerResult:
    f_plus: set
    f_minus: set
    # edge -> (tail, head) for every edge of f_plus
    orientation: dict
    # per vertex (F+_v, F-_v) as each vertex knows them
    views: list
    rounds: int
    clusters: ClusterState = None

    def edges(self):
        return sorted(self.f_plus)

    def out_degrees(self):
        degrees = np.zeros(len(self.views), dtype=int)
        for tail, _ in self.orientation.values():
            degrees[tail] += 1
        return degrees

    def views_consistent(self):
        """u in F+_v iff (u,v) in F+, and likewise for F-.
        """
        plus = set()
        minus = set()
        for v, (f_plus_v, f_minus_v) in enumerate(self.views):
            plus.update((_edge(u, v), u, v) for u in f_plus_v)
            minus.update((_edge(u, v), u, v) for u in f_minus_v)
        expected_plus = {(e, a, b) for e in self.f_plus for a, b in (e, e[::-1])}
        expected_minus = {(e, a, b) for e in self.f_minus for a, b in (e, e[::-1])}
        return plus == expected_plus and minus == expected_minus


class ProbabilisticSpanner():
    """One (2k-1)-spanner computation on a probabilistic graph.
    """
    def __init__(self,
                 graph,
                 k,
                 net=None,
                 seed=0,
                 marking_key=(0,),
                 epsilon=1.0,
                 ):
        # graph whose edges exist with probability p_e
        self.graph = graph if isinstance(graph, ProbWeightedGraph) else ProbWeightedGraph(graph)
        # stretch parameter, the spanner has stretch 2k-1
        if not 1 <= k <= max(1, self.graph.n):
            raise ValueError('k must lie in [1, n], got {}'.format(k))
        self.k = k
        # communication network, defaults to the graph itself in CONGEST mode
        if net is None:
            net = Network(self.graph.n,
                          mode=Mode.BROADCAST_CONGEST,
                          topology=self.graph.base.edges,
                          seed=seed,
                          )
        self.net = net
        # prefix of the shared marking stream key
        self.marking_key = tuple(marking_key)
        # precision of the integer weight scaling for non-integral weights
        self.epsilon = epsilon

        self.reset()

    @property
    def n(self):
        return self.graph.n

    def reset(self):
        """Initialize vertex-local state.
        """
        n = self.n
        wire_weights, self.weight_scale = integer_weights(self.graph.base.weights, n, self.epsilon)
        self.adj = [dict() for _ in range(n)]
        self.prob = [dict() for _ in range(n)]
        for (u, v), w, p in zip(self.graph.base.edges, wire_weights, self.graph.p):
            self.adj[u][v] = self.adj[v][u] = int(w)
            self.prob[u][v] = self.prob[v][u] = float(p)

        self.id_bits = id_bits(n)
        self.weight_bits = weight_bits(max(wire_weights, default=0))

        self.f_plus_v = [set() for _ in range(n)]
        self.f_minus_v = [set() for _ in range(n)]
        self.f_plus = set()
        self.f_minus = set()
        self.orientation = {}

        self.clusters = ClusterState.singletons(n)
        # neighbour -> cluster id, as each vertex sees it
        self.nbr_cluster = [{u: u for u in self.adj[v]} for v in range(n)]
        self.nbr_marked = [dict() for _ in range(n)]

    def live(self, v):
        """Neighbours of v not yet known to be absent.
        """
        return {u: w for u, w in self.adj[v].items() if u not in self.f_minus_v[v]}

    def decide(self, v, N, tag):
        """Run connect at v and apply the outcome to v's view and the ledger.
        """
        u, rejected = connect(v, N, self.prob[v], self.net.vertices[v].rng, decided=self.f_plus_v[v])
        for x in rejected:
            self.net.record_decision((v, x), v, tag)
            self.f_minus_v[v].add(x)
            self.f_minus.add(_edge(v, x))
        if u is None:
            return None
        e = _edge(v, u)
        if u not in self.f_plus_v[v]:
            self.net.record_decision((v, u), v, tag)
            self.f_plus_v[v].add(u)
            self.f_plus.add(e)
            self.orientation[e] = (v, u)
        elif self.orientation[e][0] != v:
            # both endpoints added it
            self.orientation[e] = e
        return u

    def reconstruct(self, u, v, choice):
        """Update F+-_u from v's announced choice among candidates that included u.

        choice is None for no acceptance, else (x, weight of (v, x)).
        """
        if choice is None:
            self.f_minus_v[u].add(v)
            return
        x, w = choice
        if x == u:
            self.f_plus_v[u].add(v)
        elif (w, x) > (self.adj[u][v], u) and v not in self.f_plus_v[u]:
            self.f_minus_v[u].add(v)

    # step 1

    def mark_clusters(self, phase):
        """Centers draw their marks; the result travels down each cluster tree.

        Phase i clusters have depth at most i-1, so i rounds suffice.
        Returns own, the per-vertex marked flag of its own cluster.
        """
        n = self.n
        centers = self.clusters.centers()
        marked = {c for c in centers
                  if is_marked(self.net.seed, self.marking_key, phase, c, n, self.k)}
        self.clusters.marked = marked
        own = [None] * n
        for c in centers:
            own[c] = c in marked
        self.nbr_cluster = [dict() for _ in range(n)]
        self.nbr_marked = [dict() for _ in range(n)]

        with self.net.phase('spanner.mark'):
            for depth in range(phase):
                senders = {
                    v: Message('mark', (self.clusters.center[v], own[v]), self.id_bits + 1)
                    for v in self.clusters.active() if self.clusters.depth[v] == depth
                }
                inbox = self.net.run_round(senders)
                for v, received in inbox.items():
                    for sender, message in received:
                        if sender not in self.adj[v]:
                            continue
                        cid, flag = message.value
                        self.nbr_cluster[v][sender] = cid
                        self.nbr_marked[v][sender] = flag
                        if sender == self.clusters.parent[v]:
                            own[v] = flag
        log.debug('phase %d: %d of %d clusters marked', phase, len(marked), len(centers))
        return own

    # step 2

    def connect_to_marked(self, own):
        """Vertices of unmarked clusters try to join a marked neighbouring cluster.

        Returns (joins, limits): joins maps v -> (cluster id, u), limits
        maps receiver -> {sender: W_sender} as heard on the wire.
        """
        n = self.n
        joins = {}
        messages = {}
        for v in self.clusters.active():
            if own[v]:
                continue
            N = {u: w for u, w in self.live(v).items() if self.nbr_marked[v].get(u)}
            if not N:
                continue
            u = self.decide(v, N, 'join')
            if u is None:
                messages[v] = Message('join', None, self.id_bits + self.weight_bits)
            else:
                cid = self.nbr_cluster[v][u]
                joins[v] = (cid, u)
                messages[v] = Message('join', (cid, u, N[u]), 2 * self.id_bits + self.weight_bits)

        with self.net.phase('spanner.join'):
            inbox = self.net.broadcast(messages)

        limits = [dict() for _ in range(n)]
        self.heard_joins = [dict() for _ in range(n)]
        for u, received in inbox.items():
            for v, message in received:
                if v not in self.adj[u]:
                    continue
                if message.value is None:
                    limits[u][v] = math.inf
                    choice = None
                else:
                    cid, x, w = message.value
                    limits[u][v] = w
                    self.heard_joins[u][v] = cid
                    choice = (x, w)
                if own[u] and v not in self.f_minus_v[u]:
                    self.reconstruct(u, v, choice)
        return joins, limits

    # steps 3.x and 4.x

    def connect_to_clusters(self, targets, limits, tag):
        """Each sender connects to each of its target clusters, one announcement per cluster.

        targets maps v -> {cluster id: candidates}. Announcements are sent in
        cluster id order, one complete message per slot. limits maps
        receiver -> {sender: W}, the weight bound the sender applied (None
        for no bound).
        """
        queues = {}
        for v in sorted(targets):
            queue = []
            for cid in sorted(targets[v]):
                u = self.decide(v, targets[v][cid], tag)
                if u is None:
                    queue.append(Message(tag, (cid, None), 2 * self.id_bits))
                else:
                    queue.append(Message(tag, (cid, (u, targets[v][cid][u])),
                                         2 * self.id_bits + self.weight_bits))
            if queue:
                queues[v] = queue

        slot = 0
        with self.net.phase('spanner.' + tag):
            while any(slot < len(q) for q in queues.values()):
                inbox = self.net.broadcast({v: q[slot] for v, q in queues.items() if slot < len(q)})
                for u, received in inbox.items():
                    own_cid = self.clusters.center[u]
                    for v, message in received:
                        if v not in self.adj[u] or v in self.f_minus_v[u]:
                            continue
                        cid, choice = message.value
                        if cid != own_cid:
                            continue
                        limit = math.inf if limits is None else limits[u].get(v, math.inf)
                        if self.adj[u][v] < limit:
                            self.reconstruct(u, v, choice)
                slot += 1

    def _targets(self, senders, eligible, limit=None):
        """Group the live candidates of each sender by eligible neighbouring cluster.
        """
        targets = {}
        for v in senders:
            bound = math.inf if limit is None else limit[v]
            groups = {}
            for u, w in self.live(v).items():
                cid = self.nbr_cluster[v].get(u)
                if cid is None or not eligible(v, cid) or not w < bound:
                    continue
                groups.setdefault(cid, {})[u] = w
            if groups:
                targets[v] = groups
        return targets

    def run_phase(self, phase):
        own = self.mark_clusters(phase)
        joins, limits = self.connect_to_marked(own)

        W = [math.inf] * self.n
        for v, (_, u) in joins.items():
            W[v] = self.adj[v][u]
        unmarked = [v for v in self.clusters.active() if not own[v]]
        centre = self.clusters.center

        def lower(v, cid):
            return cid < centre[v] and cid not in self.clusters.marked

        def higher(v, cid):
            return cid > centre[v] and cid not in self.clusters.marked

        self.connect_to_clusters(self._targets(unmarked, lower, W), limits, 'lower')
        self.connect_to_clusters(self._targets(unmarked, higher, W), limits, 'higher')

        # rebuild clusters and the neighbour views of the next phase
        for v in unmarked:
            if v in joins:
                cid, u = joins[v]
                self.clusters.center[v] = cid
                self.clusters.parent[v] = u
                self.clusters.depth[v] = self.clusters.depth[u] + 1
            else:
                self.clusters.center[v] = None
                self.clusters.parent[v] = None
        for v in range(self.n):
            kept = {u: c for u, c in self.nbr_cluster[v].items() if self.nbr_marked[v].get(u)}
            kept.update(self.heard_joins[v])
            self.nbr_cluster[v] = kept

    def final_step(self):
        """Connect every vertex to each neighbouring remaining cluster.
        """
        centre = self.clusters.center
        outside = [v for v in range(self.n) if centre[v] is None]
        inside = self.clusters.active()

        self.connect_to_clusters(self._targets(outside, lambda v, cid: True), None, 'final')
        self.connect_to_clusters(self._targets(inside, lambda v, cid: cid < centre[v]), None, 'final_lower')
        self.connect_to_clusters(self._targets(inside, lambda v, cid: cid > centre[v]), None, 'final_higher')

    def run(self):
        """Compute the spanner and return the local views and the global edge sets.
        """
        start = self.net.round_counter
        for phase in range(1, self.k):
            self.run_phase(phase)
        self.final_step()
        result = SpannerResult(f_plus=set(self.f_plus),
                               f_minus=set(self.f_minus),
                               orientation=dict(self.orientation),
                               views=[(frozenset(a), frozenset(b)) for a, b in zip(self.f_plus_v, self.f_minus_v)],
                               rounds=self.net.round_counter - start,
                               clusters=self.clusters,
                               )
        log.info('spanner k=%d: |F+|=%d |F-|=%d in %d rounds',
                 self.k, len(result.f_plus), len(result.f_minus), result.rounds)
        return result


def spanner(G, k, net=None, seed=0, marking_key=(0,), epsilon=1.0):
    """(2k-1)-spanner of a probabilistic graph, computed in Broadcast CONGEST.
    """
    return ProbabilisticSpanner(G, k, net=net, seed=seed, marking_key=marking_key, epsilon=epsilon).run()


@dataclass
class BundleResult:
    b: set
    c: set
    layers: list
    orientation: dict
    rounds: int

    def __iter__(self):
        yield self.b
        yield self.c


def bundle_spanner(G, k, t, net=None, seed=0, marking_key=(), epsilon=1.0, progress=False):
    """t-bundle of (2k-1)-spanners.

    Layer i is a spanner of the edges nothing earlier decided; it reads the
    marking stream (*marking_key, i). Stops early once every edge is decided.
    """
    G = G if isinstance(G, ProbWeightedGraph) else ProbWeightedGraph(G)
    if net is None:
        net = Network(G.n, mode=Mode.BROADCAST_CONGEST, topology=G.base.edges, seed=seed)
    start = net.round_counter

    remaining = list(range(G.m))
    b, c, layers, orientation = set(), set(), [], {}
    postfix = {'|B|': 0, 'undecided': len(remaining)}
    with tqdm(total=t, postfix=postfix, disable=not progress) as pbar:
        for i in range(t):
            if not remaining:
                break
            layer_graph = ProbWeightedGraph(G.base.subgraph(remaining), G.p[remaining])
            result = spanner(layer_graph, k, net=net, marking_key=(*marking_key, i), epsilon=epsilon)
            layers.append(result)
            b |= result.f_plus
            c |= result.f_minus
            orientation.update(result.orientation)
            decided = result.f_plus | result.f_minus
            remaining = [j for j in remaining if G.base.edges[j] not in decided]

            postfix['|B|'] = len(b)
            postfix['undecided'] = len(remaining)
            pbar.set_postfix(postfix)
            pbar.update(1)

    return BundleResult(b=b, c=c, layers=layers, orientation=orientation, rounds=net.round_counter - start)


def spanner_appendix_oracle(G, k, seed=0, marking_key=(0,), epsilon=1.0):
    """Centralized Baswana-Sen spanner reading the marking stream of `spanner`.
    """
    if isinstance(G, ProbWeightedGraph):
        G = G.base
    n = G.n
    wire_weights, _ = integer_weights(G.weights, n, epsilon)
    adj = [dict() for _ in range(n)]
    for (u, v), w in zip(G.edges, wire_weights):
        adj[u][v] = adj[v][u] = int(w)

    def lightest(v, center):
        best = {}
        for u, w in adj[v].items():
            cid = center[u]
            if cid is None or cid == center[v]:
                continue
            if cid not in best or (w, u) < best[cid]:
                best[cid] = (w, u)
        return best

    edges = set()
    center = list(range(n))
    for phase in range(1, k):
        marked = {cid for cid in set(center) - {None}
                  if is_marked(seed, marking_key, phase, cid, n, k)}
        next_center = list(center)
        for v in range(n):
            if center[v] is None or center[v] in marked:
                continue
            best = lightest(v, center)
            to_marked = [best[cid] for cid in best if cid in marked]
            if to_marked:
                w_join, u = min(to_marked)
                edges.add(_edge(v, u))
                next_center[v] = center[u]
            else:
                w_join = math.inf
                next_center[v] = None
            for cid, (w, u) in best.items():
                if cid not in marked and w < w_join:
                    edges.add(_edge(v, u))
        center = next_center

    for v in range(n):
        for w, u in lightest(v, center).values():
            edges.add(_edge(v, u))
    return edges


def spanner_round_bound(n, k, max_weight):
    """Per-phase (k-1) + 1 + n^{1/k} log n (1 + log W / log n), k-1 phases plus the final step.
    """
    log_n = math.log2(max(n, 2))
    per_message = 1 + math.log2(max(max_weight, 2)) / log_n
    load = n ** (1.0 / k) * log_n * per_message
    return (k - 1) * ((k - 1) + 1 + load) + load


def spanner_size_bound(n, k):
    return k * n ** (1 + 1.0 / k)

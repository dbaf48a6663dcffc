"""Exact minimum-cost maximum s-t flow through the interior point LP solver.

Costs are perturbed by random small multiples and scaled to integers so
that, with probability at least 1/2, the LP below has a unique optimum
which is also a min-cost max-flow of the original instance:

    min  q~^T x + lam (1^T y + 1^T z) - K F
    s.t. B x + y - z = F e_t,
         0 <= x <= c,  0 <= y, z <= Y,  0 <= F <= F_max,

with B the in-minus-out incidence matrix without the source row. An
approximate LP solution is then scaled down slightly and rounded; outside the
faithful profile a failed rounding first moves the LP point to a vertex of
the flow polytope along cycles that do not raise its cost.
"""
import heapq
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .config import Mode, ProfileConfig
from .exceptions import (DisconnectedGraph, LeftDomain, NoConvergence, RankDeficient, RetriesExhausted,
                         RoundingInfeasible)
from .graph import WeightedGraph, read_flow_lines
from .lpsolve import LPInstance, LPSolver
from .netsim import Message, Network

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


DEFAULT_RETRIES = 3
# salt of the cost perturbation stream
PERTURB_SALT = 2 ** 31 - 3
# LP values this close to an integer count as integral during purification
PURIFY_TOLERANCE = 1e-7
# LP solves that end an attempt without a flow
ATTEMPT_FAILURES = (LeftDomain, NoConvergence, RankDeficient, RoundingInfeasible)


class FlowInstance():
    """Directed graph with integral capacities and costs, and a source and a sink.
    """
    def __init__(self,
                 n,
                 arcs,
                 source,
                 sink,
                 ):
        # number of vertices
        self.n = n
        # (u, v, capacity, cost) per arc, in input order
        self.arcs = [(int(u), int(v), int(cap), int(cost)) for u, v, cap, cost in arcs]
        self.source = source
        self.sink = sink
        if source == sink:
            raise ValueError('source and sink coincide ({})'.format(source))
        for u, v, cap, _ in self.arcs:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError('arc ({}, {}) leaves the vertex range 0..{}'.format(u, v, n - 1))
            if cap < 0:
                raise ValueError('arc ({}, {}) has negative capacity {}'.format(u, v, cap))
        if not (0 <= source < n and 0 <= sink < n):
            raise ValueError('source {} or sink {} out of range'.format(source, sink))

    @classmethod
    def from_lines(cls, lines, source=None, sink=None):
        """Instance from 'u v cap cost' lines or a DIMACS min-cost-flow file.

        Explicit source and sink override the DIMACS node lines; a plain
        edge list defaults to source 0 and sink n - 1.
        """
        n, arcs, dimacs_source, dimacs_sink = read_flow_lines(lines)
        source = source if source is not None else (dimacs_source if dimacs_source is not None else 0)
        sink = sink if sink is not None else (dimacs_sink if dimacs_sink is not None else n - 1)
        return cls(n, arcs, source, sink)

    @classmethod
    def from_file(cls, path, source=None, sink=None):
        with open(path) as f:
            return cls.from_lines(f, source=source, sink=sink)

    @property
    def m(self):
        return len(self.arcs)

    @property
    def capacities(self):
        return np.array([a[2] for a in self.arcs], dtype=np.int64)

    @property
    def costs(self):
        return np.array([a[3] for a in self.arcs], dtype=np.int64)

    @property
    def M(self):
        """Largest capacity or absolute cost, at least 1.
        """
        return int(max([1] + [abs(a[2]) for a in self.arcs] + [abs(a[3]) for a in self.arcs]))

    def cost(self, flow):
        return int(np.dot(self.costs, flow))

    def value(self, flow):
        """Net outflow at the source.
        """
        out = sum(f for (u, v, _, _), f in zip(self.arcs, flow) if u == self.source)
        into = sum(f for (u, v, _, _), f in zip(self.arcs, flow) if v == self.source)
        return int(out - into)

    def excess(self, flow):
        """Inflow minus outflow at every vertex.
        """
        excess = np.zeros(self.n, dtype=np.int64)
        for (u, v, _, _), f in zip(self.arcs, flow):
            excess[u] -= f
            excess[v] += f
        return excess

    def is_feasible(self, flow):
        flow = np.asarray(flow)
        if np.any(flow < 0) or np.any(flow > self.capacities):
            return False
        excess = self.excess(flow)
        inner = [v for v in range(self.n) if v not in (self.source, self.sink)]
        return bool(np.all(excess[inner] == 0))

    def has_augmenting_path(self, flow):
        """BFS from the source in the residual graph.
        """
        adjacency = [[] for _ in range(self.n)]
        for (u, v, cap, _), f in zip(self.arcs, flow):
            if f < cap:
                adjacency[u].append(v)
            if f > 0:
                adjacency[v].append(u)
        seen = {self.source}
        queue = deque([self.source])
        while queue:
            u = queue.popleft()
            if u == self.sink:
                return True
            for v in adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return False

    def has_negative_cycle(self, flow, costs=None):
        """Bellman-Ford over the residual graph, started from every vertex at once.

        A feasible flow without a negative residual cycle has minimum cost
        among the flows of its value.
        """
        costs = self.costs if costs is None else costs
        residual = []
        for (u, v, cap, _), f, q in zip(self.arcs, flow, costs):
            if f < cap:
                residual.append((u, v, int(q)))
            if f > 0:
                residual.append((v, u, -int(q)))
        dist = [0] * self.n
        for _ in range(self.n):
            changed = False
            for u, v, q in residual:
                if dist[u] + q < dist[v]:
                    dist[v] = dist[u] + q
                    changed = True
            if not changed:
                return False
        return True

    def is_connected(self):
        """Connectivity of the underlying undirected graph of positive-capacity arcs.
        """
        graph = WeightedGraph(self.n, [(u, v) for u, v, cap, _ in self.arcs if cap > 0 and u != v])
        return graph.is_connected()


@dataclass
class IntegralFlow:
    flow: np.ndarray
    value: int
    cost: int
    rounds: int = 0
    retries: int = 0
    # LP trace of the successful attempt
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {
            'flow': [int(f) for f in self.flow],
            'value': int(self.value),
            'cost': int(self.cost),
            'rounds': int(self.rounds),
            'retries': int(self.retries),
        }


def _integral_flow(inst, flow, **kwargs):
    flow = np.asarray(flow, dtype=np.int64)
    return IntegralFlow(flow=flow, value=inst.value(flow), cost=inst.cost(flow), **kwargs)


def perturbation_scale(m, M):
    """4 m^2 M^2, the factor that makes the perturbed costs integral.
    """
    return 4 * m ** 2 * M ** 2


def perturb_costs(q, M, rng):
    """Integral perturbed costs q * 4m^2M^2 + r with r uniform in {1, ..., 2mM}.

    Returns (q~, scale).
    """
    q = np.asarray(q, dtype=np.int64)
    m = len(q)
    scale = perturbation_scale(m, M)
    r = rng.integers(1, 2 * m * M + 1, size=m)
    return q * scale + r, scale


def flow_constants(n_vertices, m, M, q_max, profile=None):
    """(M~, lam, K): the cost bound, the slack penalty and the reward per unit of F.

    The faithful constants are M~ = 8 m^2 M^3, lam = 440 m^4 M~^2 M^3 and
    K = 2 |V| M~ for the scaled instance. The practical profile takes the
    tight arc cost bound M~ = ||q~||_inf + 1, so that |V| M~ exceeds every
    simple path cost, with K = 2 |V| M~ and lam = 4 |V| M~.
    """
    profile = profile if profile is not None else ProfileConfig()
    if profile.faithful:
        M = max(M, q_max)
        M_tilde = 8 * m ** 2 * M ** 3
        return M_tilde, 440 * m ** 4 * M_tilde ** 2 * M ** 3, 2 * n_vertices * M_tilde
    M_tilde = q_max + 1
    return M_tilde, 4 * n_vertices * M_tilde, 2 * n_vertices * M_tilde


@dataclass
class FlowLP:
    """LP instance of a flow problem together with the data to map solutions back.
    """
    lp: LPInstance
    flow: FlowInstance
    # indices of the input arcs that became LP variables
    kept: np.ndarray
    # directed graph of the kept arcs, in LP row order
    graph: WeightedGraph
    q_tilde: np.ndarray
    scale: int
    M_tilde: int
    lam: int
    K: int
    # LP costs are the integral costs divided by cost_norm
    cost_norm: float
    # LP columns: vertices other than the source, in id order
    vertices: list
    profile: ProfileConfig = None

    def split(self, x):
        """(x, y, z, F) parts of an LP vector.
        """
        e, k = self.graph.m, len(self.vertices)
        return x[:e], x[e:e + k], x[e + k:e + 2 * k], float(x[-1])

    def arc_flow(self, x):
        """LP arc values mapped back onto every input arc (dropped arcs carry 0).
        """
        out = np.zeros(self.flow.m)
        out[self.kept] = self.split(x)[0]
        return out

    def circulation(self):
        """(tails, heads, costs) of the LP read as a circulation through the source.

        Row j of the LP is an arc: the kept input arcs, then y as s -> v,
        z as v -> s and F as the return arc t -> s. Costs are integral.
        """
        s, t = self.flow.source, self.flow.sink
        arcs = [self.flow.arcs[i] for i in self.kept]
        k = len(self.vertices)
        tails = np.array([a[0] for a in arcs] + [s] * k + self.vertices + [t], dtype=int)
        heads = np.array([a[1] for a in arcs] + self.vertices + [s] * k + [s], dtype=int)
        costs = np.concatenate([self.q_tilde[self.kept].astype(float), np.full(2 * k, float(self.lam)),
                                [-float(self.K)]])
        return tails, heads, costs

    def rounding_gap(self):
        """Integral cost by which every vertex that is not a min-cost max-flow exceeds the optimum.

        A flow that is suboptimal for the original costs loses at least
        scale / 2 after the perturbation; a flow of smaller value or one using
        y or z loses at least |V| M~.
        """
        return min(self.scale / 2.0, float(self.flow.n * self.M_tilde))


def build_flow_lp(inst, q_tilde=None, profile=None, scale=1):
    """Assemble the flow LP and its strictly interior starting point.

    Zero-capacity arcs and self-loops carry no flow and are left out.
    """
    if not inst.is_connected():
        errmsg = 'flow graph is disconnected'
        log.error(errmsg)
        raise DisconnectedGraph(errmsg)
    q_tilde = inst.costs if q_tilde is None else np.asarray(q_tilde, dtype=np.int64)
    kept = np.array([i for i, (u, v, cap, _) in enumerate(inst.arcs) if cap > 0 and u != v], dtype=int)
    arcs = [inst.arcs[i] for i in kept]
    graph = WeightedGraph(inst.n, [(u, v) for u, v, _, _ in arcs], directed=True)

    V, M = inst.n, inst.M
    s, t = inst.source, inst.sink
    vertices = [v for v in range(V) if v != s]
    position = {v: i for i, v in enumerate(vertices)}
    e, k = len(arcs), len(vertices)

    rows, cols, vals = [], [], []
    for j, (u, v, _, _) in enumerate(arcs):
        if v in position:
            rows.append(j)
            cols.append(position[v])
            vals.append(1.0)
        if u in position:
            rows.append(j)
            cols.append(position[u])
            vals.append(-1.0)
    for i in range(k):
        rows += [e + i, e + k + i]
        cols += [i, i]
        vals += [1.0, -1.0]
    rows.append(e + 2 * k)
    cols.append(position[t])
    vals.append(-1.0)
    a_matrix = sp.csr_matrix((vals, (rows, cols)), shape=(e + 2 * k + 1, k))

    cap = np.array([a[2] for a in arcs], dtype=float)
    q_kept = q_tilde[kept]
    M_tilde, lam, K = flow_constants(V, e, M, int(np.max(np.abs(q_kept), initial=0)), profile)

    # initial point: x = c/2, F = F_max/2, y and z absorb the imbalance of x
    out_of_source = sum(a[2] for a in arcs if a[0] == s)
    F_max = 2 * max(V * M, out_of_source)
    F0 = F_max / 2.0
    B = a_matrix[:e].T
    imbalance = B @ (cap / 2.0)
    base = 2.0 * V * M
    y0 = base + np.maximum(-imbalance, 0.0)
    y0[position[t]] += F0
    z0 = base + np.maximum(imbalance, 0.0)
    Y = max(4.0 * V * M, 2.0 * max(y0.max(), z0.max()) - base)
    x0 = np.concatenate([cap / 2.0, y0, z0, [F0]])

    c_int = np.concatenate([q_kept.astype(float), np.full(2 * k, float(lam)), [-float(K)]])
    cost_norm = float(np.max(np.abs(c_int)))
    lower = np.zeros(e + 2 * k + 1)
    upper = np.concatenate([cap, np.full(2 * k, Y), [F_max]])
    lp = LPInstance(a_matrix, np.zeros(k), c_int / cost_norm, lower, upper, x0)
    log.debug('flow LP: %d arcs, %d columns, lam=%d K=%d', e, k, lam, K)
    return FlowLP(lp=lp, flow=inst, kept=kept, graph=graph, q_tilde=q_tilde, scale=scale, M_tilde=M_tilde,
                  lam=lam, K=K, cost_norm=cost_norm, vertices=vertices, profile=profile)


def lp_target_epsilon(flow_lp):
    """Additive LP accuracy, in the normalized costs, at which rounding recovers the optimum.

    The faithful profile asks for min(1/(24M), m^-3) integral cost units.
    The practical profile purifies the LP point before rounding and only
    needs a quarter of the rounding gap.
    """
    if flow_lp.profile is not None and flow_lp.profile.faithful:
        m = flow_lp.lp.m
        return min(1.0 / (24.0 * flow_lp.flow.M), float(m) ** -3) / flow_lp.cost_norm
    return flow_lp.rounding_gap() / (4.0 * flow_lp.cost_norm)


def _snap(x, tol):
    near = np.rint(x)
    close = np.abs(x - near) <= tol
    x[close] = near[close]
    return x


def _forest_path(forest, start, end):
    """(arc, from, to) steps of the unique forest path from start to end.
    """
    prev = {start: None}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        if p == end:
            break
        for q, arc in forest[p]:
            if q not in prev:
                prev[q] = (p, arc)
                queue.append(q)
    path = []
    q = end
    while prev[q] is not None:
        p, arc = prev[q]
        path.append((arc, p, q))
        q = p
    return path[::-1]


def fractional_cycle(x, tails, heads, tol=PURIFY_TOLERANCE):
    """A cycle of the underlying undirected graph on arcs with fractional values.

    Returns (arcs, signs) with sign +1 for an arc traversed from tail to
    head, or None when the fractional arcs form a forest.
    """
    parent = {}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    forest = {}
    for j in np.flatnonzero(np.abs(x - np.rint(x)) > tol):
        u, v = int(tails[j]), int(heads[j])
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            forest.setdefault(u, []).append((v, j))
            forest.setdefault(v, []).append((u, j))
            continue
        # j runs u -> v, the forest path closes the cycle from v back to u
        path = _forest_path(forest, v, u)
        arcs = np.array([j] + [arc for arc, _, _ in path], dtype=int)
        signs = np.array([1.0] + [1.0 if tails[arc] == p else -1.0 for arc, p, _ in path])
        return arcs, signs
    return None


def purify_flow(x_lp, flow_lp, tol=PURIFY_TOLERANCE):
    """Move an LP point to an integral vertex of the flow polytope without raising its cost.

    While the fractional arcs of the circulation contain a cycle, flow is
    pushed around it in the direction of nonpositive cost until one of its
    arcs reaches an integer. Every step makes an arc integral and leaves the
    integral ones alone. The fractional arcs that remain form a forest and,
    by conservation, are integral up to the LP residual.
    """
    tails, heads, costs = flow_lp.circulation()
    x = _snap(np.clip(np.asarray(x_lp, dtype=float), flow_lp.lp.l, flow_lp.lp.u), tol)
    for _ in range(len(x)):
        cycle = fractional_cycle(x, tails, heads, tol)
        if cycle is None:
            break
        arcs, signs = cycle
        moves = signs if np.dot(signs, costs[arcs]) <= 0 else -signs
        values = x[arcs]
        room = np.where(moves > 0, np.ceil(values) - values, values - np.floor(values))
        x[arcs] = values + moves * room.min()
        x = _snap(x, tol)
    return np.rint(x)


def _certificate_error(inst, flow):
    if not inst.is_feasible(flow):
        return 'rounded flow violates capacity or conservation'
    if inst.has_augmenting_path(flow):
        return 'rounded flow admits an augmenting path'
    if inst.has_negative_cycle(flow):
        return 'rounded flow admits a negative-cost residual cycle'
    return None


def round_to_exact(x_apx, inst, flow_lp, check_oracle=False, purify=None):
    """Round an approximate LP solution to an integral min-cost max-flow.

    Scales x by (1 - 1/(40 m^2 M~ M)) and rounds every arc to the nearest
    integer, then checks capacities, conservation, maximality and the
    absence of negative residual cycles. When that fails and purify is on
    (the default outside the faithful profile), the whole LP point goes
    through purify_flow and is checked again.
    """
    if purify is None:
        purify = not (flow_lp.profile is not None and flow_lp.profile.faithful)
    x_apx = np.asarray(x_apx, dtype=float)
    x = flow_lp.arc_flow(x_apx)
    m = max(flow_lp.graph.m, 1)
    shrink = 1.0 / (40.0 * m ** 2 * flow_lp.M_tilde * inst.M)
    flow = np.rint((1.0 - shrink) * x).astype(np.int64)
    errmsg = _certificate_error(inst, flow)
    if errmsg is not None and purify:
        log.debug('%s, purifying the LP point', errmsg)
        flow = np.rint(flow_lp.arc_flow(purify_flow(x_apx, flow_lp))).astype(np.int64)
        errmsg = _certificate_error(inst, flow)
    if errmsg is not None:
        log.error(errmsg)
        raise RoundingInfeasible(errmsg)
    result = _integral_flow(inst, flow)
    if check_oracle:
        best = mcmf_oracle(inst)
        if (best.value, best.cost) != (result.value, result.cost):
            errmsg = 'rounded flow has value {} and cost {}, the optimum has {} and {}'.format(
                result.value, result.cost, best.value, best.cost)
            log.error(errmsg)
            raise RoundingInfeasible(errmsg)
    return result


def feasibility_round(net, inst, flow, vertices):
    """One broadcast round in which every vertex reports whether its constraints hold.
    """
    excess = inst.excess(flow)
    caps = inst.capacities
    ok = {}
    for i, v in enumerate(vertices):
        # a vertex checks its own conservation and the arcs it is the head of
        heads = [j for j, a in enumerate(inst.arcs) if a[1] == v]
        local = all(0 <= flow[j] <= caps[j] for j in heads)
        ok[i] = bool(local and (v == inst.sink or excess[v] == 0))
    with net.phase('mcmf.check'):
        net.run_round({i: Message('feasible', ok[i], 1) for i in ok})
    return all(ok.values())


def min_cost_max_flow(inst, seed=0, profile=None, backend='laplacian', retries=DEFAULT_RETRIES, boost=False,
                      epsilon=None, progress=False):
    """Min-cost max-flow by perturbation, the LP solver and rounding.

    Attempts use fresh perturbations until a rounded flow passes the
    feasibility check; with boost, every attempt runs and the flow of
    maximum value and then minimum cost is kept. An LP solve that leaves
    the domain, meets a singular system or does not converge counts as a
    failed attempt like a rounding failure.
    """
    profile = profile if profile is not None else ProfileConfig()
    if not any(cap > 0 and u != v for u, v, cap, _ in inst.arcs):
        return _integral_flow(inst, np.zeros(inst.m, dtype=np.int64))

    best = None
    rounds = 0
    failures = 0
    for attempt in range(retries + 1):
        rng = np.random.default_rng([seed, PERTURB_SALT, attempt])
        q_tilde, scale = perturb_costs(inst.costs, inst.M, rng)
        flow_lp = build_flow_lp(inst, q_tilde=q_tilde, profile=profile, scale=scale)
        target = epsilon if epsilon is not None else lp_target_epsilon(flow_lp)
        # the message log of a whole LP solve is not kept
        net = Network(flow_lp.lp.n, mode=Mode.BROADCAST_CONGESTED_CLIQUE, seed=seed + attempt, record=False)
        solver = LPSolver(flow_lp.lp,
                          epsilon=target,
                          profile=profile,
                          backend=backend,
                          net=net,
                          seed=seed + attempt,
                          progress=progress,
                          flow=(flow_lp.graph, inst.source, inst.sink),
                          )
        try:
            result = solver.run()
            flow = round_to_exact(result.x, inst, flow_lp)
        except ATTEMPT_FAILURES as err:
            # the vertices learn of the failure in the check round
            with net.phase('mcmf.check'):
                net.run_round({0: Message('feasible', False, 1)})
            rounds += net.round_counter
            failures += 1
            log.info('attempt %d failed: %s', attempt, err)
            continue
        feasibility_round(net, inst, flow.flow, flow_lp.vertices)
        rounds += net.round_counter
        flow.trace = result.trace
        if best is None or (flow.value, -flow.cost) > (best.value, -best.cost):
            best = flow
        if not boost:
            break

    if best is None:
        errmsg = 'no feasible flow after {} attempts'.format(retries + 1)
        log.error(errmsg)
        raise RetriesExhausted(errmsg)
    best.rounds = rounds
    best.retries = failures
    log.info('min cost max flow: value %d, cost %d, %d rounds, %d retries', best.value, best.cost, rounds, failures)
    return best


# oracles

def _bellman_ford(n, residual, source):
    dist = [math.inf] * n
    dist[source] = 0
    for _ in range(n - 1):
        changed = False
        for u in range(n):
            if dist[u] == math.inf:
                continue
            for v, cap, cost, _ in residual[u]:
                if cap > 0 and dist[u] + cost < dist[v]:
                    dist[v] = dist[u] + cost
                    changed = True
        if not changed:
            break
    return dist


def mcmf_oracle(inst):
    """Successive shortest augmenting paths with Dijkstra on reduced costs.

    Bellman-Ford sets the initial potentials, so negative arc costs are fine
    as long as there is no negative cycle.
    """
    n = inst.n
    # residual[u] holds [v, capacity, cost, index of the reverse entry in residual[v]]
    residual = [[] for _ in range(n)]
    handles = []
    for u, v, cap, cost in inst.arcs:
        if u == v or cap == 0:
            handles.append(None)
            continue
        residual[u].append([v, cap, cost, len(residual[v])])
        residual[v].append([u, 0, -cost, len(residual[u]) - 1])
        handles.append((u, len(residual[u]) - 1))

    s, t = inst.source, inst.sink
    potential = _bellman_ford(n, residual, s)
    potential = [p if p != math.inf else 0 for p in potential]
    while True:
        dist = [math.inf] * n
        parent = [None] * n
        dist[s] = 0
        heap = [(0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for i, (v, cap, cost, _) in enumerate(residual[u]):
                if cap <= 0:
                    continue
                nd = d + cost + potential[u] - potential[v]
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = (u, i)
                    heapq.heappush(heap, (nd, v))
        if dist[t] == math.inf:
            break
        for v in range(n):
            if dist[v] < math.inf:
                potential[v] += dist[v]

        push = math.inf
        v = t
        while v != s:
            u, i = parent[v]
            push = min(push, residual[u][i][1])
            v = u
        v = t
        while v != s:
            u, i = parent[v]
            edge = residual[u][i]
            edge[1] -= push
            residual[v][edge[3]][1] += push
            v = u

    flow = np.zeros(inst.m, dtype=np.int64)
    for j, handle in enumerate(handles):
        if handle is not None:
            u, i = handle
            flow[j] = inst.arcs[j][2] - residual[u][i][1]
    return _integral_flow(inst, flow)


def enumerate_flows(inst):
    """Every feasible integral flow; only for a handful of small-capacity arcs.
    """
    for flow in itertools.product(*(range(cap + 1) for _, _, cap, _ in inst.arcs)):
        flow = np.array(flow, dtype=np.int64)
        if inst.is_feasible(flow):
            yield flow


def brute_force_mcmf(inst, costs=None):
    """(best IntegralFlow, number of optimal flows) by exhaustive enumeration.

    costs replaces the instance costs when ranking flows of maximum value.
    """
    costs = inst.costs if costs is None else np.asarray(costs)
    best_key, optima = None, []
    for flow in enumerate_flows(inst):
        key = (inst.value(flow), -int(np.dot(costs, flow)))
        if best_key is None or key > best_key:
            best_key, optima = key, [flow]
        elif key == best_key:
            optima.append(flow)
    return _integral_flow(inst, optima[0]), len(optima)


# test fixtures

def random_flow_instance(n, M=5, density=0.4, seed=None, negative_costs=False):
    """Random connected flow network on n vertices, source 0 and sink n - 1.

    A random path 0 -> ... -> n-1 keeps the sink reachable; every other
    ordered pair is an arc with probability density. Costs are drawn from
    [0, M]; with negative_costs they are r + pi(v) - pi(u) for a random
    potential pi, so some arcs are negative but no cycle is.
    """
    rng = np.random.default_rng(seed)
    order = np.concatenate([[0], 1 + rng.permutation(n - 2), [n - 1]]) if n > 2 else np.arange(n)
    pairs = set(zip(order[:-1].tolist(), order[1:].tolist()))
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < density:
                pairs.add((u, v))
    potential = rng.integers(0, M // 2 + 1, size=n) if negative_costs else np.zeros(n, dtype=int)
    top = M - M // 2 if negative_costs else M
    arcs = []
    for u, v in sorted(pairs):
        cap = int(rng.integers(1, M + 1))
        cost = int(rng.integers(0, top + 1)) + int(potential[v] - potential[u])
        arcs.append((u, v, cap, cost))
    return FlowInstance(n, arcs, 0, n - 1)

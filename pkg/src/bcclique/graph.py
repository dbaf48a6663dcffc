"""Weighted graphs and the matrices built from them.

Vertex ids are 0..n-1. Undirected edges are stored as (u, v) with u < v;
ties anywhere in the package break toward the smaller id.
"""
import logging

import networkx as nx
import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .exceptions import DimensionMismatch, NegativeWeight

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


class WeightedGraph():
    """Weighted graph on vertices 0..n-1.

    Undirected graphs merge parallel edges by adding their weights.
    Directed graphs (flow inputs) keep every arc, in input order.
    """
    def __init__(self,
                 n,
                 edges=(),
                 weights=None,
                 directed=False,
                 ):
        # number of vertices
        self.n = n
        # arcs keep their orientation, undirected edges are normalized to u < v
        self.directed = directed

        edges = [tuple(int(x) for x in e[:2]) for e in edges]
        if weights is None:
            weights = np.ones(len(edges))
        weights = np.asarray(weights, dtype=float)
        if len(weights) != len(edges):
            errmsg = 'got {} weights for {} edges'.format(len(weights), len(edges))
            log.error(errmsg)
            raise DimensionMismatch(errmsg)
        if np.any(weights <= 0):
            errmsg = 'edge weights must be positive, min is {}'.format(weights.min())
            log.error(errmsg)
            raise NegativeWeight(errmsg)

        if directed:
            kept = [(e, w) for e, w in zip(edges, weights) if e[0] != e[1]]
        else:
            merged = {}
            for (u, v), w in zip(edges, weights):
                if u == v:
                    continue
                key = (min(u, v), max(u, v))
                merged[key] = merged.get(key, 0.0) + w
            kept = sorted(merged.items())

        self.edges = [e for e, _ in kept]
        self.weights = np.array([w for _, w in kept], dtype=float)
        self.index = {e: i for i, e in enumerate(self.edges)}

    @classmethod
    def from_triples(cls, n, triples, directed=False):
        triples = list(triples)
        return cls(n, [(u, v) for u, v, _ in triples], [w for _, _, w in triples], directed=directed)

    @property
    def m(self):
        return len(self.edges)

    @property
    def U(self):
        """Largest weight, tracked for encoding decisions.
        """
        return float(self.weights.max()) if self.m else 0.0

    def triples(self):
        return [(u, v, w) for (u, v), w in zip(self.edges, self.weights)]

    def weight(self, u, v):
        key = (u, v) if self.directed else (min(u, v), max(u, v))
        return self.weights[self.index[key]]

    def adjacency(self):
        """Per-vertex dict neighbour -> weight (both directions for arcs).
        """
        adj = [dict() for _ in range(self.n)]
        for (u, v), w in zip(self.edges, self.weights):
            adj[u][v] = w
            adj[v][u] = w
        return adj

    def incidence_matrix(self):
        """m x n sparse matrix, row e has +1 at its head and -1 at its tail.

        For an arc (u, v) the head is v; an undirected edge (u, v), u < v,
        is read as the arc u -> v.
        """
        rows = np.repeat(np.arange(self.m), 2)
        cols = np.array([x for u, v in self.edges for x in (v, u)], dtype=int)
        vals = np.tile([1.0, -1.0], self.m)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.m, self.n))

    def laplacian(self):
        return laplacian(self)

    def scipy_adjacency(self):
        """Symmetric sparse weighted adjacency matrix.
        """
        if not self.m:
            return sp.csr_matrix((self.n, self.n))
        u, v = np.array(self.edges).T
        A = sp.coo_matrix((self.weights, (u, v)), shape=(self.n, self.n))
        return (A + A.T).tocsr()

    def components(self):
        """Component label per vertex.
        """
        _, labels = connected_components(self.scipy_adjacency(), directed=False)
        return labels

    def is_connected(self):
        return self.n <= 1 or len(set(self.components())) == 1

    def subgraph(self, edge_ids, weights=None):
        """Graph on the same vertices restricted to the given edge ids.
        """
        edge_ids = list(edge_ids)
        if weights is None:
            weights = self.weights[edge_ids]
        return WeightedGraph(self.n, [self.edges[i] for i in edge_ids], weights, directed=self.directed)

    def union(self, other):
        """Edge-wise sum of two graphs on the same vertex set.
        """
        return WeightedGraph(self.n, self.edges + other.edges,
                             np.concatenate([self.weights, other.weights]))

    def to_networkx(self):
        G = nx.DiGraph() if self.directed else nx.Graph()
        G.add_nodes_from(range(self.n))
        G.add_weighted_edges_from(self.triples())
        return G

    def __repr__(self):
        return 'WeightedGraph(n={}, m={}, directed={})'.format(self.n, self.m, self.directed)


class ProbWeightedGraph():
    """Weighted graph whose edges exist independently with probability p_e.
    """
    def __init__(self, base, p=None):
        # underlying weighted graph
        self.base = base
        # per-edge survival probability, p == 1 is the deterministic graph
        self.p = np.ones(base.m) if p is None else np.asarray(p, dtype=float)
        if len(self.p) != base.m:
            raise DimensionMismatch('got {} probabilities for {} edges'.format(len(self.p), base.m))
        if np.any((self.p < 0) | (self.p > 1)):
            raise ValueError('edge probabilities must lie in [0, 1]')

    @property
    def n(self):
        return self.base.n

    @property
    def m(self):
        return self.base.m


class LaplacianRep():
    """Laplacian in factored form L = B^T W B, with the explicit matrix on demand.
    """
    def __init__(self, incidence, weights, matrix=None):
        # m x n incidence matrix
        self.B = incidence
        # edge weights, the diagonal of W
        self.w = np.asarray(weights, dtype=float)
        self._matrix = matrix

    @classmethod
    def from_matrix(cls, L):
        """Factor an explicit Laplacian matrix into incidence and weights.
        """
        L = sp.csr_matrix(L)
        graph = graph_from_laplacian(L)
        return cls(graph.incidence_matrix(), graph.weights, matrix=L)

    @property
    def n(self):
        return self.B.shape[1]

    def matrix(self):
        if self._matrix is None:
            self._matrix = (self.B.T @ sp.diags(self.w) @ self.B).tocsr()
        return self._matrix

    def dense(self):
        return self.matrix().toarray()

    def apply(self, x):
        return self.matrix() @ x

    def quadratic_form(self, x):
        return quadratic_form(self, x)


def laplacian(G):
    """L = B^T W B: off-diagonals -w(u,v), diagonal the weighted degree.
    """
    return LaplacianRep(G.incidence_matrix(), G.weights)


def graph_from_laplacian(L):
    """Weighted graph whose Laplacian is L (negative off-diagonals become edges).
    """
    L = sp.csr_matrix(L)
    upper = sp.triu(L, k=1).tocoo()
    mask = upper.data < 0
    edges = list(zip(upper.row[mask], upper.col[mask]))
    return WeightedGraph(L.shape[0], edges, -upper.data[mask])


def quadratic_form(L, x):
    """x^T L x computed edge-wise as sum_e w_e (x_head - x_tail)^2.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (L.n,):
        errmsg = 'vector of shape {} for a Laplacian on {} vertices'.format(x.shape, L.n)
        log.error(errmsg)
        raise DimensionMismatch(errmsg)
    diffs = L.B @ x
    return float(np.dot(L.w, diffs ** 2))


def integer_weights(weights, n, epsilon=1.0):
    """Integral weights for the wire.

    Integral inputs are kept; anything else is multiplied by n^3 / epsilon
    and rounded, never below 1. Returns (int array, scale).
    """
    weights = np.asarray(weights, dtype=float)
    if np.all(weights == np.round(weights)):
        return weights.astype(np.int64), 1.0
    scale = float(n) ** 3 / epsilon
    return np.maximum(1, np.round(weights * scale)).astype(np.int64), scale


def all_pairs_distances(G):
    """Exact shortest-path distances, +inf between components.
    """
    if G.m and G.weights.min() < 0:
        errmsg = 'negative edge weight {}'.format(G.weights.min())
        log.error(errmsg)
        raise NegativeWeight(errmsg)
    if not G.m:
        D = np.full((G.n, G.n), np.inf)
        np.fill_diagonal(D, 0.0)
        return D
    return dijkstra(G.scipy_adjacency(), directed=False)


def min_plus_distances(G):
    """Distances by repeated min-plus squaring, an independent oracle.
    """
    D = np.full((G.n, G.n), np.inf)
    np.fill_diagonal(D, 0.0)
    for (u, v), w in zip(G.edges, G.weights):
        D[u, v] = min(D[u, v], w)
        D[v, u] = min(D[v, u], w)
    steps = 1
    while steps < G.n:
        D = np.min(D[:, :, None] + D[None, :, :], axis=1)
        steps *= 2
    return D


def spanner_stretch(G, edge_ids):
    """Largest ratio d_S(u,v) / d_G(u,v) over connected pairs of G.
    """
    d_G = all_pairs_distances(G)
    d_S = all_pairs_distances(G.subgraph(sorted(edge_ids)))
    mask = np.isfinite(d_G) & (d_G > 0)
    if not mask.any():
        return 1.0
    return float(np.max(d_S[mask] / d_G[mask]))


# dense oracles

def pinv_laplacian(L, tol=1e-10):
    """Moore-Penrose pseudo-inverse through the eigendecomposition.
    """
    M = L.dense() if isinstance(L, LaplacianRep) else np.asarray(L)
    vals, vecs = scipy.linalg.eigh(M)
    cutoff = tol * max(1.0, np.abs(vals).max())
    inv = np.array([1.0 / v if v > cutoff else 0.0 for v in vals])
    return (vecs * inv) @ vecs.T


def ldl_factor(M):
    """LDL^T factors of a symmetric matrix with diagonal pivoting.
    """
    M = np.asarray(M, dtype=float)
    lu, d, perm = scipy.linalg.ldl(M, lower=True)
    return lu, d, perm


def ldl_apply(factor, b):
    """Solve with factors from ldl_factor.
    """
    lu, d, perm = factor
    # M = lu d lu^T, lu[perm] is triangular
    y = scipy.linalg.solve_triangular(lu[perm], np.asarray(b, dtype=float)[perm], lower=True, unit_diagonal=True)
    z = np.linalg.solve(d, y)
    x = np.empty_like(z)
    x[perm] = scipy.linalg.solve_triangular(lu[perm].T, z, lower=False, unit_diagonal=True)
    return x


def ldl_solve(M, b):
    """Solve M x = b for symmetric (SDD) M by LDL^T with diagonal pivoting.
    """
    return ldl_apply(ldl_factor(M), b)


def grounded_solve(L, b, labels=None):
    """Solve a Laplacian system by fixing one vertex per component to zero.

    The reduced systems are solved by LDL^T and every component of the
    result is re-centred to mean zero.
    """
    M = L.dense() if isinstance(L, LaplacianRep) else np.asarray(L)
    b = np.asarray(b, dtype=float)
    if labels is None:
        _, labels = connected_components(sp.csr_matrix(np.abs(M) > 0), directed=False)
    x = np.zeros_like(b)
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        if len(members) > 1:
            rest = members[1:]
            x[rest] = ldl_solve(M[np.ix_(rest, rest)], b[rest])
        x[members] -= x[members].mean()
    return x


def project_out_kernel(b, labels):
    """Subtract the per-component mean so that b sums to zero on every component.
    """
    b = np.array(b, dtype=float)
    for label in np.unique(labels):
        members = labels == label
        b[members] -= b[members].mean()
    return b


def lnorm(L, x):
    """||x||_L = sqrt(x^T L x).
    """
    return np.sqrt(max(quadratic_form(L, x), 0.0))


# test fixtures

def erdos_renyi(n, p, seed=None, weight_range=(1.0, 1.0), integer=False, connected=False):
    """G(n, p) with uniform random weights.

    With connected=True a random Hamiltonian path is added first, so the
    result is always connected.
    """
    rng = np.random.default_rng(seed)
    G = nx.gnp_random_graph(n, p, seed=int(rng.integers(2 ** 31)))
    edges = set((min(u, v), max(u, v)) for u, v in G.edges())
    if connected and n > 1:
        order = rng.permutation(n)
        edges.update((min(a, b), max(a, b)) for a, b in zip(order[:-1], order[1:]))
    edges = sorted(edges)
    return WeightedGraph(n, edges, _weights(rng, len(edges), weight_range, integer))


def random_geometric(n, radius, seed=None, weight_range=(1.0, 1.0), integer=False):
    rng = np.random.default_rng(seed)
    G = nx.random_geometric_graph(n, radius, seed=int(rng.integers(2 ** 31)))
    edges = sorted((min(u, v), max(u, v)) for u, v in G.edges())
    return WeightedGraph(n, edges, _weights(rng, len(edges), weight_range, integer))


def grid(rows, cols, weight=1.0):
    G = nx.convert_node_labels_to_integers(nx.grid_2d_graph(rows, cols), ordering='sorted')
    edges = sorted((min(u, v), max(u, v)) for u, v in G.edges())
    return WeightedGraph(rows * cols, edges, np.full(len(edges), weight))


def random_tree(n, seed=None, weight_range=(1.0, 1.0), integer=False):
    rng = np.random.default_rng(seed)
    edges = [(int(rng.integers(v)), v) for v in range(1, n)]
    return WeightedGraph(n, edges, _weights(rng, len(edges), weight_range, integer))


def complete_graph(n, weight=1.0):
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return WeightedGraph(n, edges, np.full(len(edges), weight))


def _weights(rng, m, weight_range, integer):
    lo, hi = weight_range
    if integer:
        return rng.integers(int(lo), int(hi) + 1, size=m).astype(float)
    if lo == hi:
        return np.full(m, float(lo))
    return rng.uniform(lo, hi, size=m)


# ingestion

def read_edge_list(lines, directed=False):
    """Parse 'u v w' lines ('#' comments, blank lines skipped).
    """
    triples = []
    for line in _data_lines(lines):
        parts = line.split()
        w = float(parts[2]) if len(parts) > 2 else 1.0
        triples.append((int(parts[0]), int(parts[1]), w))
    n = 1 + max((max(u, v) for u, v, _ in triples), default=-1)
    return WeightedGraph.from_triples(n, triples, directed=directed)


def read_flow_lines(lines):
    """Parse 'u v cap cost' lines, or DIMACS min-cost-flow format.

    Returns (n, arcs, source, sink) with arcs as (u, v, cap, cost) and
    0-based vertices; source and sink are None for plain edge lists.
    """
    lines = list(_data_lines(lines))
    if lines and lines[0].split()[0] == 'p':
        return _parse_dimacs(lines)
    arcs = []
    for line in lines:
        u, v, cap, cost = line.split()[:4]
        arcs.append((int(u), int(v), int(cap), int(cost)))
    n = 1 + max((max(u, v) for u, v, _, _ in arcs), default=-1)
    return n, arcs, None, None


def _parse_dimacs(lines):
    n, arcs, source, sink = 0, [], None, None
    for line in lines:
        parts = line.split()
        if parts[0] == 'p':
            n = int(parts[2])
        elif parts[0] == 'n':
            # the role is either s / t or a signed supply
            vertex, role = int(parts[1]) - 1, parts[2]
            if role == 's' or (role != 't' and int(role) > 0):
                source = vertex
            else:
                sink = vertex
        elif parts[0] == 'a':
            # a <from> <to> <low> <cap> <cost>; lower bounds must be zero
            u, v = int(parts[1]) - 1, int(parts[2]) - 1
            cap, cost = int(parts[4]), int(parts[5])
            arcs.append((u, v, cap, cost))
    return n, arcs, source, sink


def _data_lines(lines):
    for line in lines:
        line = line.strip()
        if line and not line.startswith('#') and line.split()[0] != 'c':
            yield line

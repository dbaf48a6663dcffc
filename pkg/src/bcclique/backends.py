"""Solvers for the normal equations (A^T D A) X = Y of the interior point method.

A backend owns the constraint matrix and charges its rounds to a Network.
Vertex i of the network is column i of A: it knows every row j of A with
A[j, i] != 0 and hence its own row of A^T D A.
"""
import abc
import logging

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .exceptions import DimensionMismatch, RankDeficient
from .lapsolve import FlowNormalEquations

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


DEFAULT_WIDTH = 64
# diagonal shifts of the unit-diagonal normal matrix tried when Cholesky breaks down
RIDGES = (1e-12, 1e-10, 1e-8)


class NormalEquationsSolver(abc.ABC):
    """(A^T D A)^{-1} applied to one or several right-hand sides.
    """
    def __init__(self,
                 a_matrix,
                 net=None,
                 width=DEFAULT_WIDTH,
                 ):
        self.A = sp.csr_matrix(a_matrix, dtype=float)
        # network whose vertices are the columns of A; None runs without accounting
        self.net = net
        # fixed-point width of a broadcast value
        self.width = width
        self.reset()

    def reset(self):
        self.calls = 0
        self.rounds = 0

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    def gram(self, d):
        return (self.A.T @ sp.diags(d) @ self.A).tocsr()

    def solve(self, d, rhs):
        """X with (A^T diag(d) A) X = rhs; rhs is an n-vector or an n x k matrix.
        """
        d = np.asarray(d, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        if d.shape != (self.m,) or rhs.shape[0] != self.n:
            errmsg = 'diagonal of shape {} and right-hand side of shape {} for A of shape {}'.format(
                d.shape, rhs.shape, self.A.shape)
            log.error(errmsg)
            raise DimensionMismatch(errmsg)
        if np.any(d <= 0):
            raise ValueError('D must be positive, min is {}'.format(d.min()))
        start = self.net.round_counter if self.net is not None else 0
        vector = rhs.ndim == 1
        X = self._solve(d, rhs[:, None] if vector else rhs)
        self.calls += 1
        if self.net is not None:
            self.rounds += self.net.round_counter - start
        return X[:, 0] if vector else X

    @abc.abstractmethod
    def _solve(self, d, rhs):
        """Solve for an n x k right-hand side.
        """
        pass


class DenseSolver(NormalEquationsSolver):
    """Every vertex broadcasts its row of A^T D A and its right-hand side entries,
    then solves the whole system internally by Cholesky.
    """
    def _solve(self, d, rhs):
        if self.net is not None:
            with self.net.phase('lp.solve'):
                self.net.broadcast_all('normal_row', (self.n + rhs.shape[1]) * self.width)

        G = self.gram(d).toarray()
        diag = np.diag(G).copy()
        if np.any(diag <= 0):
            errmsg = 'column {} of A is zero'.format(int(np.argmin(diag)))
            log.error(errmsg)
            raise RankDeficient(errmsg)
        # symmetric diagonal scaling keeps the entries of A^T D A comparable
        s = 1.0 / np.sqrt(diag)
        scaled = G * s[:, None] * s[None, :]
        for ridge in (0.0,) + RIDGES:
            try:
                factor = scipy.linalg.cho_factor(scaled + ridge * np.eye(self.n), lower=True)
                break
            except np.linalg.LinAlgError as err:
                error = err
                log.debug('cholesky failed with ridge %.0e', ridge)
        else:
            errmsg = 'A^T D A is singular: {}'.format(error)
            log.error(errmsg)
            raise RankDeficient(errmsg) from error
        return s[:, None] * scipy.linalg.cho_solve(factor, s[:, None] * rhs)


class FlowLaplacianSolver(NormalEquationsSolver):
    """Normal equations of the flow LP, solved through the SDD-to-Laplacian reduction.

    Rows of A are ordered x (one per arc), y, z (one per vertex other than
    the source) and F; columns are the vertices other than the source.
    """
    def __init__(self,
                 a_matrix,
                 graph,
                 source,
                 target,
                 net=None,
                 width=DEFAULT_WIDTH,
                 epsilon=None,
                 seed=0,
                 bundle_constant=1.0,
                 ):
        super().__init__(a_matrix, net=net, width=width)
        self.graph = graph
        self.source = source
        self.target = target
        # relative precision of every inner Laplacian solve, m^-10 by default
        self.epsilon = epsilon if epsilon is not None else max(1e-12, float(self.m) ** -10)
        self.seed = seed
        self.bundle_constant = bundle_constant
        self.n_flow_vertices = graph.n - 1
        if self.m != graph.m + 2 * self.n_flow_vertices + 1:
            raise DimensionMismatch('A has {} rows, the flow LP of this graph has {}'.format(
                self.m, graph.m + 2 * self.n_flow_vertices + 1))

    def split(self, d):
        e, k = self.graph.m, self.n_flow_vertices
        return d[:e], d[e:e + k], d[e + k:e + 2 * k], float(d[-1])

    def _solve(self, d, rhs):
        d1, d2, d3, d4 = self.split(d)
        system = FlowNormalEquations(self.graph, d1, d2, d3, d4, self.source, self.target,
                                     seed=self.seed + self.calls, bundle_constant=self.bundle_constant)
        X = np.zeros_like(rhs)
        rounds = 0
        for j in range(rhs.shape[1]):
            result = system.solve(rhs[:, j], epsilon=self.epsilon, full_output=True)
            X[:, j] = result.x
            rounds += result.rounds
        if self.net is not None:
            with self.net.phase('lp.solve'):
                self.net.absorb(system.preprocessing_rounds + rounds)
                # every vertex shares its entries of the solutions
                self.net.broadcast_all('solution', rhs.shape[1] * self.width)
        return X


def make_solver(backend, a_matrix, net=None, width=DEFAULT_WIDTH, flow=None, seed=0):
    """Backend by name: 'dense' or 'laplacian' (flow LPs only; flow = (graph, source, target)).
    """
    if backend == 'dense':
        return DenseSolver(a_matrix, net=net, width=width)
    if backend == 'laplacian':
        if flow is None:
            raise ValueError('the laplacian backend needs the flow graph, source and target')
        graph, source, target = flow
        return FlowLaplacianSolver(a_matrix, graph, source, target, net=net, width=width, seed=seed)
    raise ValueError('unknown backend {!r}'.format(backend))


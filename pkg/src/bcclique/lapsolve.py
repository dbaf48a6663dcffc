"""Laplacian and SDD solvers built on preconditioned Chebyshev iteration.

The preconditioner is a (1 +- 1/2)-spectral sparsifier H of G, which after
preprocessing in the Broadcast Congested Clique every vertex knows in full.
Each iteration then costs one broadcast of the vertices' entries of L_G d
and a solve in L_H that every vertex does on its own.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .config import Mode
from .encoding import FixedPointCodec
from .exceptions import (BadDemand, BadPreconditioner, DimensionMismatch,
                         NoConvergence, NotInRange, NotSDD, NullSpaceMismatch)
from .graph import (LaplacianRep, graph_from_laplacian,
                    ldl_apply, ldl_factor, project_out_kernel)
from .netsim import Message, Network
from .sparsifier import spectral_sparsify, verify_sparsifier

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


PRECONDITIONER_EPSILON = 0.5
# (1 + 1/2) / (1 - 1/2)
KAPPA = 3.0
KERNEL_TOLERANCE = 1e-10
ITERATION_CAP_FACTOR = 10


def theoretical_iterations(kappa, epsilon):
    """Chebyshev steps after which the preconditioned residual has shrunk by epsilon / sqrt(kappa).

    The residual after k steps is at most 2 rho^k times the initial one,
    rho = (sqrt(kappa) - 1) / (sqrt(kappa) + 1).
    """
    if kappa <= 1.0:
        return 1
    root = math.sqrt(kappa)
    rho = (root - 1.0) / (root + 1.0)
    return max(1, math.ceil(math.log(2.0 * root / epsilon) / math.log(1.0 / rho)))


@dataclass
class SolveResult:
    y: np.ndarray
    iterations: int
    # preconditioned residual norm sqrt(r^T B^+ r) after every iteration
    residuals: list = field(default_factory=list)
    rounds: int = 0
    initial_residual: float = 0.0


def _as_apply(A):
    if callable(A):
        return A
    if hasattr(A, 'apply'):
        return A.apply
    return lambda v: A @ v


def chebyshev_solve(A, B_solve, b, epsilon, kappa, kernel=None, mu=1.0, full_output=False):
    """Preconditioned Chebyshev iteration for A y = b with A <= B <= kappa A.

    A is a matrix or a matrix-vector product, B_solve applies B^+. The
    eigenvalues of B^+ A are taken from [mu / kappa, mu]. kernel is an
    orthonormal basis of ker(A); b must be orthogonal to it.
    Returns y, or a SolveResult with full_output.
    """
    apply_A = _as_apply(A)
    b = np.asarray(b, dtype=float)
    norm_b = np.linalg.norm(b)
    if kernel is not None and norm_b > 0:
        leak = np.linalg.norm(kernel.T @ b)
        if leak > KERNEL_TOLERANCE * norm_b:
            errmsg = 'right-hand side has a component of norm {:.3e} in the kernel'.format(leak)
            log.error(errmsg)
            raise NotInRange(errmsg)
        b = b - kernel @ (kernel.T @ b)

    result = SolveResult(y=np.zeros_like(b), iterations=0)
    if norm_b == 0:
        return result if full_output else result.y

    lo, hi = mu / kappa, mu
    theta = (hi + lo) / 2.0
    delta = (hi - lo) / 2.0

    y = np.zeros_like(b)
    r = b.copy()
    z = B_solve(r)
    initial = math.sqrt(max(float(r @ z), 0.0))
    result.initial_residual = initial
    d = z / theta
    rho = delta / theta

    target = epsilon / math.sqrt(kappa) * initial
    cap = ITERATION_CAP_FACTOR * theoretical_iterations(kappa, epsilon)
    for it in range(1, cap + 1):
        y = y + d
        r = r - apply_A(d)
        z = B_solve(r)
        residual = math.sqrt(max(float(r @ z), 0.0))
        result.residuals.append(residual)
        if residual <= target:
            result.y, result.iterations = y, it
            return result if full_output else y
        denom = 2.0 * theta - delta * rho
        rho_next = delta / denom
        d = rho_next * rho * d + (2.0 / denom) * z
        rho = rho_next

    errmsg = 'Chebyshev iteration did not reach {:.1e} within {} iterations (residual {:.3e})'.format(
        epsilon, cap, result.residuals[-1] / initial)
    log.error(errmsg)
    raise NoConvergence(errmsg)


class GroundedFactor():
    """Dense LDL^T factors of a Laplacian grounded at one vertex per component.
    """
    def __init__(self, M, labels):
        M = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        self.n = M.shape[0]
        self.blocks = []
        for label in np.unique(labels):
            members = np.flatnonzero(labels == label)
            rest = members[1:]
            factor = ldl_factor(M[np.ix_(rest, rest)]) if len(rest) else None
            self.blocks.append((members, rest, factor))

    def solve(self, b):
        """Pseudo-inverse solution for b summing to zero on every component.
        """
        x = np.zeros(self.n)
        for members, rest, factor in self.blocks:
            if factor is not None:
                x[rest] = ldl_apply(factor, b[rest])
            x[members] -= x[members].mean()
        return x


class SolverHandle():
    """Graph plus its globally known (1 +- 1/2) sparsifier, ready for repeated solves.
    """
    def __init__(self,
                 g,
                 h,
                 kappa=KAPPA,
                 preprocessing_rounds=0,
                 net=None,
                 ):
        # graph whose Laplacian systems are solved
        self.g = g
        # SparsifierOutput with epsilon = 1/2
        self.h = h
        self.kappa = kappa
        self.preprocessing_rounds = preprocessing_rounds
        # clique network the per-instance rounds are charged to
        if net is None:
            net = Network(g.n, mode=Mode.BROADCAST_CONGESTED_CLIQUE, topology=g.edges)
        self.net = net

        try:
            lo, hi, ok = verify_sparsifier(g, h.h, PRECONDITIONER_EPSILON)
        except NullSpaceMismatch as err:
            raise BadPreconditioner(str(err)) from err
        if not ok:
            errmsg = 'preconditioner has relative spectrum [{:.4f}, {:.4f}], outside [1/2, 3/2]'.format(lo, hi)
            log.error(errmsg)
            raise BadPreconditioner(errmsg)
        self.spectrum = (lo, hi)

        self.labels = g.components()
        self.L_G = g.laplacian()
        # B = (1 + 1/2) L_H
        self.factor = GroundedFactor((1.0 + PRECONDITIONER_EPSILON) * h.h.laplacian().dense(), self.labels)

    @classmethod
    def build(cls, g, seed=0, bundle_constant=1.0, retries=3, profile=None, progress=False):
        """Preprocess g: compute and verify the sparsifier in the clique model.
        """
        h = spectral_sparsify(g,
                              epsilon=PRECONDITIONER_EPSILON,
                              seed=seed,
                              bundle_constant=bundle_constant,
                              retries=retries,
                              verify=True,
                              strict=True,
                              profile=profile,
                              mode=Mode.BROADCAST_CONGESTED_CLIQUE,
                              progress=progress,
                              )
        net = Network(g.n, mode=Mode.BROADCAST_CONGESTED_CLIQUE, topology=g.edges, seed=seed)
        return cls(g, h, preprocessing_rounds=h.rounds_used, net=net)

    @property
    def n(self):
        return self.g.n

    def precondition(self, r):
        return self.factor.solve(r)

    def codec(self, epsilon, scale):
        return FixedPointCodec(self.n, U=max(self.g.U, 1.0), epsilon=epsilon, scale=scale)


def check_demand(b, labels):
    """Project b onto the range of the Laplacian, refusing b with non-zero component sums.
    """
    norm_b = np.linalg.norm(b)
    for label in np.unique(labels):
        total = b[labels == label].sum()
        if abs(total) > KERNEL_TOLERANCE * max(norm_b, 1e-300):
            errmsg = 'demand sums to {:.3e} on component {}'.format(total, label)
            log.error(errmsg)
            raise BadDemand(errmsg)
    return project_out_kernel(b, labels)


def laplacian_solve(handle, b, epsilon, distributed=True, full_output=False):
    """y with ||x - y||_{L_G} <= epsilon ||x||_{L_G} for some x with L_G x = b.

    In the distributed path every vertex first broadcasts its entry of b,
    then per iteration its entry of L_G d, in fixed point; everything else
    is computed locally by every vertex.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (handle.n,):
        errmsg = 'right-hand side of shape {} for {} vertices'.format(b.shape, handle.n)
        log.error(errmsg)
        raise DimensionMismatch(errmsg)
    if not 0 < epsilon <= 0.5:
        raise ValueError('epsilon must lie in (0, 1/2], got {}'.format(epsilon))
    b = check_demand(b, handle.labels)

    net = handle.net
    start = net.round_counter
    apply_A = handle.L_G.apply
    if distributed:
        codec = handle.codec(epsilon, scale=float(np.abs(b).max()) if b.any() else 1.0)
        width = codec.width

        def share(values, tag):
            values = codec.quantize(values)
            with net.phase('lapsolve.' + tag):
                net.broadcast({v: Message(tag, float(values[v]), width) for v in range(handle.n)})
            return values

        b = share(b, 'rhs')

        def apply_A(d):
            return share(handle.L_G.apply(d), 'multiply')

    result = chebyshev_solve(apply_A, handle.precondition, b, epsilon, handle.kappa, full_output=True)
    result.y = project_out_kernel(result.y, handle.labels)
    result.rounds = net.round_counter - start
    log.info('laplacian solve: %d iterations, %d rounds', result.iterations, result.rounds)
    return result if full_output else result.y


class SDDSystem():
    """Symmetric diagonally dominant matrix split as M = M_n + M_p + C_1 + C_2.

    M_n and M_p hold the negative and positive off-diagonals, C_1 the
    absolute off-diagonal row sums and C_2 the remaining non-negative
    diagonal excess.
    """
    def __init__(self, m_matrix, tol=1e-12):
        M = sp.csr_matrix(m_matrix, dtype=float)
        if M.shape[0] != M.shape[1]:
            raise DimensionMismatch('SDD matrix must be square, got {}'.format(M.shape))
        scale = max(1.0, abs(M).max()) if M.nnz else 1.0
        asymmetry = abs(M - M.T).max() if M.nnz else 0.0
        if asymmetry > tol * scale:
            errmsg = 'matrix is not symmetric'
            log.error(errmsg)
            raise NotSDD(errmsg)
        off = M - sp.diags(M.diagonal())
        off_abs = np.asarray(abs(off).sum(axis=1)).ravel()
        excess = M.diagonal() - off_abs
        if np.any(excess < -tol * scale):
            row = int(np.argmin(excess))
            errmsg = 'row {} is not diagonally dominant: diagonal {} < {}'.format(row, M.diagonal()[row], off_abs[row])
            log.error(errmsg)
            raise NotSDD(errmsg)

        self.m_matrix = M
        self.M_n = off.multiply(off < 0).tocsr()
        self.M_p = off.multiply(off > 0).tocsr()
        self.C1 = sp.diags(off_abs).tocsr()
        self.C2 = sp.diags(np.maximum(excess, 0.0)).tocsr()

    @property
    def n(self):
        return self.m_matrix.shape[0]


def sdd_to_laplacian(S):
    """Laplacian on 2n vertices whose solutions give solutions of M x = y.

    L = [[C_1 + C_2/2 + M_n, -C_2/2 - M_p], [-C_2/2 - M_p, C_1 + C_2/2 + M_n]].
    Returns (L, embed, extract): embed(y) = [y; -y] and
    extract([x_1; x_2]) = (x_1 - x_2) / 2.
    """
    if not isinstance(S, SDDSystem):
        S = SDDSystem(S)
    n = S.n
    diagonal = S.C1 + S.C2 / 2.0 + S.M_n
    cross = -S.C2 / 2.0 - S.M_p
    L = sp.bmat([[diagonal, cross], [cross, diagonal]]).tocsr()

    def embed(y):
        y = np.asarray(y, dtype=float)
        return np.concatenate([y, -y])

    def extract(x):
        return (x[:n] - x[n:]) / 2.0

    return LaplacianRep.from_matrix(L), embed, extract


def flow_matrix(G, d1, d2, d3, d4, source, target):
    """M = B D_1 B^T + D_2 + D_3 + d_4 e_t e_t^T with the source row of B dropped.

    Each vertex assembles its own row from its incident arcs: the
    off-diagonal (u, v) is minus the D_1 weight of the arcs (u, v) and
    (v, u), the diagonal the D_1 weight of every incident arc.
    Returns the sparse matrix and the vertex ids of its rows.
    """
    vertices = [v for v in range(G.n) if v != source]
    position = {v: i for i, v in enumerate(vertices)}
    d1 = np.asarray(d1, dtype=float)
    rows, cols, vals = [], [], []
    for u in vertices:
        i = position[u]
        diagonal = d2[i] + d3[i] + (d4 if u == target else 0.0)
        for e, (a, b) in enumerate(G.edges):
            if u not in (a, b):
                continue
            diagonal += d1[e]
            other = b if u == a else a
            if other in position:
                rows.append(i)
                cols.append(position[other])
                vals.append(-d1[e])
        rows.append(i)
        cols.append(i)
        vals.append(diagonal)
    n = len(vertices)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n)), vertices


@dataclass
class FlowSolveResult:
    x: np.ndarray
    iterations: int
    rounds: int
    preprocessing_rounds: int


class FlowNormalEquations():
    """Preprocessed flow normal equations, solvable for many right-hand sides.

    Every real vertex u != s simulates the virtual vertices u and u + |V| - 1
    of the doubled graph, two real rounds per virtual round.
    """
    def __init__(self,
                 G,
                 d1,
                 d2,
                 d3,
                 d4,
                 source,
                 target,
                 seed=0,
                 bundle_constant=1.0,
                 ):
        self.M, self.vertices = flow_matrix(G, d1, d2, d3, d4, source, target)
        self.L, self.embed, self.extract = sdd_to_laplacian(SDDSystem(self.M))
        # sparsifier of the virtual graph, built on first use
        self.seed = seed
        self.bundle_constant = bundle_constant
        self.handle = None

    @property
    def size(self):
        return self.M.shape[0]

    @property
    def preprocessing_rounds(self):
        return 0 if self.handle is None else 2 * self.handle.preprocessing_rounds

    def prepare(self):
        if self.handle is None:
            virtual = graph_from_laplacian(self.L.matrix())
            self.handle = SolverHandle.build(virtual, seed=self.seed, bundle_constant=self.bundle_constant)
        return self.handle

    def solve(self, y, epsilon=1e-10, full_output=False):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.size,):
            errmsg = 'right-hand side of shape {} for {} rows'.format(y.shape, self.size)
            log.error(errmsg)
            raise DimensionMismatch(errmsg)
        if not y.any():
            out = FlowSolveResult(x=np.zeros_like(y), iterations=0, rounds=0,
                                  preprocessing_rounds=self.preprocessing_rounds)
            return out if full_output else out.x

        handle = self.prepare()
        result = laplacian_solve(handle, self.embed(y), min(epsilon, 0.5), full_output=True)
        out = FlowSolveResult(x=self.extract(result.y),
                              iterations=result.iterations,
                              rounds=2 * result.rounds,
                              preprocessing_rounds=self.preprocessing_rounds,
                              )
        return out if full_output else out.x


def flow_normal_equations_solve(G, d1, d2, d3, d4, y, source, target,
                                epsilon=1e-10, seed=0, bundle_constant=1.0, full_output=False):
    """Solve (B D_1 B^T + D_2 + D_3 + d_4 e_t e_t^T) x = y through the doubled Laplacian.
    """
    system = FlowNormalEquations(G, d1, d2, d3, d4, source, target, seed=seed, bundle_constant=bundle_constant)
    return system.solve(y, epsilon=epsilon, full_output=full_output)


def dense_sdd_solve(M, y):
    """Reference solve of an SDD system by LDL^T.
    """
    M = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    return ldl_apply(ldl_factor(M), y)

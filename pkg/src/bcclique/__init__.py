__version__ = '0.2.0'

from .config import Mode, NetworkConfig, Profile, ProfileConfig, SparsifyConfig, SweepConfig, default_seed
from .exceptions import *
from .netsim import Message, Network, VertexState
from .graph import LaplacianRep, ProbWeightedGraph, WeightedGraph
from .spanner import SpannerResult, bundle_spanner, spanner_appendix_oracle
from .sparsifier import SparsifierOutput, spectral_sparsify, spectral_sparsify_apriori, verify_sparsifier
from .lapsolve import SDDSystem, SolverHandle, flow_normal_equations_solve, laplacian_solve, sdd_to_laplacian
from .barriers import BarrierSet, barrier_eval
from .sketching import JLSketch, jl_sketch_build
from .weights import compute_apx_weights, compute_initial_weights, compute_leverage_scores
from .mixedball import project_mixed_ball
from .lpsolve import LPInstance, LPResult, LPSolver, lp_oracle, lp_solve
from .mcmf import FlowInstance, IntegralFlow, build_flow_lp, mcmf_oracle, min_cost_max_flow, round_to_exact

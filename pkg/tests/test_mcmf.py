"""Tests for exact min-cost max-flow."""
import networkx as nx
import numpy as np
import pytest

from bcclique.config import Profile, ProfileConfig
from bcclique.exceptions import (DisconnectedGraph, LeftDomain, NoConvergence, RankDeficient, RetriesExhausted,
                                 RoundingInfeasible)
from bcclique.lapsolve import flow_matrix
from bcclique.lpsolve import LPSolver
from bcclique.mcmf import (FlowInstance, brute_force_mcmf, build_flow_lp, enumerate_flows, flow_constants,
                           fractional_cycle, lp_target_epsilon, mcmf_oracle, min_cost_max_flow, perturb_costs,
                           perturbation_scale, purify_flow, random_flow_instance, round_to_exact)


def _single_edge():
    return FlowInstance(2, [(0, 1, 3, 2)], 0, 1)


def _parallel_paths():
    return FlowInstance(4, [(0, 1, 1, 1), (1, 3, 1, 2), (0, 2, 1, 3), (2, 3, 1, 5)], 0, 3)


def _diamond():
    """One unit from s through either a or b at equal cost."""
    return FlowInstance(5, [(0, 1, 1, 0), (1, 2, 1, 1), (1, 3, 1, 1), (2, 4, 1, 1), (3, 4, 1, 1)], 0, 4)


def _uneven_diamond():
    """One unit from s through a (cost 2) or b (cost 6)."""
    return FlowInstance(5, [(0, 1, 1, 0), (1, 2, 1, 1), (1, 3, 1, 3), (2, 4, 1, 1), (3, 4, 1, 3)], 0, 4)


def _lp_point(flow_lp, arcs, F):
    x = np.zeros(flow_lp.lp.m)
    x[:len(arcs)] = arcs
    x[-1] = F
    return x


class TestFlowInstance:
    def test_properties(self):
        inst = _parallel_paths()
        flow = np.array([1, 1, 1, 1])

        assert inst.M == 5
        assert inst.value(flow) == 2
        assert inst.cost(flow) == 11
        assert inst.is_feasible(flow)
        assert not inst.has_augmenting_path(flow)
        assert inst.has_augmenting_path(np.array([1, 1, 0, 0]))

    def test_negative_cycle(self):
        inst = _uneven_diamond()

        assert not inst.has_negative_cycle(np.array([1, 1, 0, 1, 0]))
        assert inst.has_negative_cycle(np.array([1, 0, 1, 0, 1]))
        # the same flows priced by other costs
        assert not inst.has_negative_cycle(np.array([1, 0, 1, 0, 1]), costs=[0, 3, 1, 3, 1])

    def test_conservation(self):
        inst = _parallel_paths()

        assert not inst.is_feasible(np.array([1, 0, 0, 0]))
        assert not inst.is_feasible(np.array([2, 2, 0, 0]))

    def test_validation(self):
        with pytest.raises(ValueError):
            FlowInstance(2, [(0, 1, 1, 1)], 0, 0)
        with pytest.raises(ValueError):
            FlowInstance(2, [(0, 2, 1, 1)], 0, 1)
        with pytest.raises(ValueError):
            FlowInstance(2, [(0, 1, -1, 1)], 0, 1)

    def test_from_lines(self):
        inst = FlowInstance.from_lines(['p min 3 2', 'n 1 s', 'n 3 t', 'a 1 2 0 4 1', 'a 2 3 0 2 5'])

        assert (inst.n, inst.source, inst.sink) == (3, 0, 2)
        assert inst.arcs == [(0, 1, 4, 1), (1, 2, 2, 5)]

    def test_edge_list_defaults(self):
        inst = FlowInstance.from_lines(['0 1 2 1', '1 2 2 1'])

        assert (inst.source, inst.sink) == (0, 2)


class TestPerturbation:
    def test_bounds(self):
        q = np.array([0, 3, -2, 5])
        q_tilde, scale = perturb_costs(q, 5, np.random.default_rng(0))
        r = q_tilde - q * scale

        assert scale == perturbation_scale(4, 5) == 4 * 16 * 25
        assert np.all((1 <= r) & (r <= 2 * 4 * 5))

    def test_order_is_kept(self):
        q = np.array([1, 2, 3])
        q_tilde, _ = perturb_costs(q, 3, np.random.default_rng(1))

        assert list(np.argsort(q_tilde)) == [0, 1, 2]

    def test_unique_optimum_rate(self):
        inst = _diamond()
        unique = 0
        for seed in range(20):
            q_tilde, _ = perturb_costs(inst.costs, inst.M, np.random.default_rng(seed))
            best, n_optima = brute_force_mcmf(inst, costs=q_tilde)
            unique += n_optima == 1
            # the perturbed optimum is optimal for the original costs
            assert (best.value, best.cost) == (1, 2)

        assert brute_force_mcmf(inst)[1] == 2
        assert unique >= 10

    def test_constants(self):
        M_tilde, lam, K = flow_constants(5, 8, 3, 100)
        assert (M_tilde, lam, K) == (101, 4 * 5 * 101, 2 * 5 * 101)
        assert lam > K > M_tilde

        M_tilde, lam, K = flow_constants(5, 8, 3, 100, ProfileConfig(profile=Profile.FAITHFUL))
        assert M_tilde == 8 * 64 * 100 ** 3
        assert K == 2 * 5 * M_tilde
        assert lam == 440 * 8 ** 4 * M_tilde ** 2 * 100 ** 3


class TestFlowLP:
    def test_layout(self):
        inst = _parallel_paths()
        flow_lp = build_flow_lp(inst)
        lp = flow_lp.lp

        assert flow_lp.vertices == [1, 2, 3]
        assert (lp.m, lp.n) == (4 + 2 * 3 + 1, 3)
        assert lp.residual(lp.x0) == pytest.approx(0.0, abs=1e-9)
        assert lp.barriers.interior(lp.x0).all()
        assert np.max(np.abs(lp.c)) == pytest.approx(1.0)

    def test_arc_flow_identity(self):
        inst = _parallel_paths()
        flow_lp = build_flow_lp(inst)
        x, y, z, F = flow_lp.split(flow_lp.lp.x0)
        B = flow_lp.lp.a_matrix[:inst.m].T.toarray()
        e_t = np.zeros(3)
        e_t[flow_lp.vertices.index(inst.sink)] = 1.0

        assert np.allclose(B @ x + y - z, F * e_t)
        assert np.allclose(flow_lp.arc_flow(flow_lp.lp.x0), x)

    def test_normal_matrix_is_the_flow_matrix(self):
        inst = random_flow_instance(5, seed=3)
        flow_lp = build_flow_lp(inst)
        A = flow_lp.lp.a_matrix.toarray()
        d = np.random.default_rng(0).uniform(0.5, 2.0, A.shape[0])
        e, k = flow_lp.graph.m, len(flow_lp.vertices)
        M, vertices = flow_matrix(flow_lp.graph, d[:e], d[e:e + k], d[e + k:e + 2 * k], d[-1],
                                  inst.source, inst.sink)

        assert vertices == flow_lp.vertices
        assert np.allclose((A.T @ np.diag(d) @ A), M.toarray())

    def test_dropped_arcs(self):
        inst = FlowInstance(3, [(0, 1, 2, 1), (1, 1, 5, 1), (1, 2, 0, 1), (1, 2, 2, 3)], 0, 2)
        flow_lp = build_flow_lp(inst)

        assert list(flow_lp.kept) == [0, 3]
        assert flow_lp.arc_flow(flow_lp.lp.x0)[[1, 2]].tolist() == [0.0, 0.0]

    def test_disconnected(self):
        inst = FlowInstance(4, [(0, 1, 1, 1), (2, 3, 1, 1)], 0, 3)

        with pytest.raises(DisconnectedGraph):
            build_flow_lp(inst)

    def test_target_epsilon(self):
        flow_lp = build_flow_lp(_single_edge(), profile=ProfileConfig(profile=Profile.FAITHFUL))
        m = flow_lp.lp.m

        assert lp_target_epsilon(flow_lp) == pytest.approx(min(1 / 72, m ** -3) / flow_lp.cost_norm)

    def test_practical_target_is_a_quarter_of_the_gap(self):
        inst = random_flow_instance(5, M=10, seed=0)
        q_tilde, scale = perturb_costs(inst.costs, inst.M, np.random.default_rng(0))
        flow_lp = build_flow_lp(inst, q_tilde=q_tilde, scale=scale)

        gap = min(scale / 2, inst.n * flow_lp.M_tilde)
        assert flow_lp.rounding_gap() == gap
        assert lp_target_epsilon(flow_lp) == pytest.approx(gap / (4 * flow_lp.cost_norm))
        # far coarser than the faithful target
        assert lp_target_epsilon(flow_lp) > 1e-5


class TestRounding:
    def test_optimal_integral_input_is_kept(self):
        inst = _parallel_paths()
        flow_lp = build_flow_lp(inst)
        x = flow_lp.lp.x0.copy()
        x[:inst.m] = [1, 1, 1, 1]
        flow = round_to_exact(x, inst, flow_lp, check_oracle=True)

        assert flow.flow.tolist() == [1, 1, 1, 1]
        assert (flow.value, flow.cost) == (2, 11)

    def test_nearly_integral_input(self):
        inst = _single_edge()
        flow_lp = build_flow_lp(inst)
        x = flow_lp.lp.x0.copy()
        x[0] = 3.0 - 1e-3

        assert round_to_exact(x, inst, flow_lp).flow.tolist() == [3]

    def test_non_maximal_flow_is_rejected(self):
        inst = _parallel_paths()
        flow_lp = build_flow_lp(inst)
        x = flow_lp.lp.x0.copy()
        x[:inst.m] = [1, 1, 0, 0]

        with pytest.raises(RoundingInfeasible):
            round_to_exact(x, inst, flow_lp)

    def test_violated_conservation_is_rejected(self):
        inst = _parallel_paths()
        flow_lp = build_flow_lp(inst)
        x = flow_lp.lp.x0.copy()
        x[:inst.m] = [1, 0, 1, 1]

        with pytest.raises(RoundingInfeasible):
            round_to_exact(x, inst, flow_lp)


class TestPurification:
    def test_split_flow_moves_to_the_cheap_path(self):
        inst = _uneven_diamond()
        flow_lp = build_flow_lp(inst)
        x = _lp_point(flow_lp, [1, .5, .5, .5, .5], 1)
        purified = purify_flow(x, flow_lp)

        assert purified[:inst.m].tolist() == [1, 1, 0, 1, 0]
        assert purified[inst.m:].tolist() == x[inst.m:].tolist()
        assert flow_lp.lp.c @ purified <= flow_lp.lp.c @ x

    def test_rounding_falls_back_to_purification(self):
        inst = _uneven_diamond()
        flow_lp = build_flow_lp(inst)
        x = _lp_point(flow_lp, [1, .5, .5, .5, .5], 1)

        with pytest.raises(RoundingInfeasible):
            round_to_exact(x, inst, flow_lp, purify=False)
        flow = round_to_exact(x, inst, flow_lp, check_oracle=True)
        assert (flow.value, flow.cost) == (1, 2)

    def test_faithful_profile_does_not_purify(self):
        inst = _uneven_diamond()
        flow_lp = build_flow_lp(inst, profile=ProfileConfig(profile=Profile.FAITHFUL))
        x = _lp_point(flow_lp, [1, .5, .5, .5, .5], 1)

        with pytest.raises(RoundingInfeasible):
            round_to_exact(x, inst, flow_lp)

    def test_integral_point_is_kept(self):
        inst = _uneven_diamond()
        flow_lp = build_flow_lp(inst)
        x = _lp_point(flow_lp, [1, 0, 1, 0, 1], 1)
        tails, heads, _ = flow_lp.circulation()

        assert fractional_cycle(x, tails, heads) is None
        assert purify_flow(x, flow_lp).tolist() == x.tolist()

    def test_slack_cycle_is_drained(self):
        inst = _single_edge()
        flow_lp = build_flow_lp(inst)
        # x = 3 with F = 2.5 and y, z carrying half a unit through the sink
        x = _lp_point(flow_lp, [3], 2.5)
        x[1:3] = [0, 0.5]
        purified = purify_flow(x, flow_lp)
        _, y, z, F = flow_lp.split(purified)

        assert (y.tolist(), z.tolist(), F) == ([0.0], [0.0], 3.0)

    @pytest.mark.parametrize('seed', range(4))
    def test_mixture_of_max_flows(self, seed):
        """A convex combination of the optimum and another max flow purifies to an optimum."""
        inst = random_flow_instance(4, M=2, density=0.3, seed=seed)
        flow_lp = build_flow_lp(inst)
        best = mcmf_oracle(inst)
        others = [f for f in enumerate_flows(inst) if inst.value(f) == best.value and inst.cost(f) > best.cost]
        if not others:
            pytest.skip('every max flow is optimal')
        other = max(others, key=inst.cost)
        # the mixture costs less than one unit above the optimum
        share = min(0.5, 0.9 / (inst.cost(other) - best.cost))
        mixed = (1 - share) * best.flow + share * other
        x = _lp_point(flow_lp, mixed[flow_lp.kept], best.value)
        purified = flow_lp.arc_flow(purify_flow(x, flow_lp)).astype(np.int64)

        assert inst.is_feasible(purified)
        assert (inst.value(purified), inst.cost(purified)) == (best.value, best.cost)
        flow = round_to_exact(x, inst, flow_lp)
        assert (flow.value, flow.cost) == (best.value, best.cost)


class TestOracle:
    def test_small_instances(self):
        assert mcmf_oracle(_single_edge()).flow.tolist() == [3]
        best = mcmf_oracle(_parallel_paths())
        assert (best.value, best.cost) == (2, 11)

    @pytest.mark.parametrize('seed', range(5))
    def test_against_brute_force(self, seed):
        inst = random_flow_instance(4, M=2, density=0.3, seed=seed)
        best = mcmf_oracle(inst)
        brute, _ = brute_force_mcmf(inst)

        assert (best.value, best.cost) == (brute.value, brute.cost)
        assert inst.is_feasible(best.flow)

    @pytest.mark.parametrize('seed', range(5))
    def test_against_networkx(self, seed):
        inst = random_flow_instance(8, M=10, density=0.3, seed=seed)
        G = nx.DiGraph()
        for u, v, cap, cost in inst.arcs:
            G.add_edge(u, v, capacity=cap, weight=cost)
        flow_dict = nx.max_flow_min_cost(G, inst.source, inst.sink)
        best = mcmf_oracle(inst)

        inflow = sum(flow_dict[u][inst.source] for u in G.predecessors(inst.source))
        assert best.value == sum(flow_dict[inst.source].values()) - inflow
        assert best.cost == nx.cost_of_flow(G, flow_dict)

    def test_negative_costs(self):
        for seed in range(3):
            inst = random_flow_instance(4, M=2, density=0.3, seed=seed, negative_costs=True)
            best = mcmf_oracle(inst)
            brute, _ = brute_force_mcmf(inst)

            assert (best.value, best.cost) == (brute.value, brute.cost)


class TestMinCostMaxFlow:
    def test_single_edge(self):
        flow = min_cost_max_flow(_single_edge(), backend='dense')

        assert (flow.value, flow.cost) == (3, 6)
        assert flow.rounds > 0

    def test_parallel_paths(self):
        flow = min_cost_max_flow(_parallel_paths(), seed=1, backend='dense')

        assert (flow.value, flow.cost) == (2, 11)
        assert flow.to_dict()['flow'] == [1, 1, 1, 1]

    @pytest.mark.parametrize('seed', range(3))
    def test_random_instances(self, seed):
        inst = random_flow_instance(4, M=3, density=0.4, seed=seed)
        flow = min_cost_max_flow(inst, seed=seed, backend='dense')
        best = mcmf_oracle(inst)

        assert (flow.value, flow.cost) == (best.value, best.cost)
        assert flow.retries <= 3

    def test_boost(self):
        inst = _diamond()
        flow = min_cost_max_flow(inst, seed=2, backend='dense', retries=1, boost=True)

        assert (flow.value, flow.cost) == (1, 2)

    def test_laplacian_backend(self):
        flow = min_cost_max_flow(_single_edge(), backend='laplacian')

        assert (flow.value, flow.cost) == (3, 6)

    def test_no_usable_arcs(self):
        inst = FlowInstance(2, [(0, 1, 0, 4)], 0, 1)
        flow = min_cost_max_flow(inst)

        assert flow.value == 0 and flow.flow.tolist() == [0]

    def test_solver_failure_counts_as_a_retry(self, monkeypatch):
        run = LPSolver.run
        calls = []

        def fail_first(solver):
            calls.append(solver.net.seed)
            if len(calls) == 1:
                raise LeftDomain('Newton step left the domain')
            return run(solver)

        monkeypatch.setattr(LPSolver, 'run', fail_first)
        flow = min_cost_max_flow(_single_edge(), backend='dense', retries=2)

        assert (flow.value, flow.cost) == (3, 6)
        assert flow.retries == 1
        # each attempt runs on its own network
        assert calls == [0, 1]

    @pytest.mark.parametrize('error', [LeftDomain, RankDeficient, NoConvergence, RoundingInfeasible])
    def test_retries_exhausted(self, monkeypatch, error):
        def fail(solver):
            raise error('attempt failed')

        monkeypatch.setattr(LPSolver, 'run', fail)
        with pytest.raises(RetriesExhausted):
            min_cost_max_flow(_single_edge(), backend='dense', retries=1)

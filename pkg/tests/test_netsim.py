"""Tests for the round-synchronous broadcast simulator."""
import json

import pytest

from bcclique.config import Mode, NetworkConfig
from bcclique.encoding import FixedPointCodec, default_bandwidth, fixed_point_width, id_bits, weight_bits
from bcclique.exceptions import DuplicateBroadcast, PayloadTooLarge
from bcclique.netsim import Message, Network


class TestRunRound:
    def test_clique_delivers_to_everyone(self):
        net = Network(3)
        inbox = net.run_round({0: Message('x', 'x', 1)})

        for v in range(3):
            assert [(s, m.value) for s, m in inbox[v]] == [(0, 'x')]
        assert net.round_counter == 1

    def test_congest_delivers_to_neighbours_only(self):
        net = Network(3, mode=Mode.BROADCAST_CONGEST, topology=[(0, 1), (1, 2)])
        inbox = net.run_round({0: Message('x', 'x', 1)})

        assert [s for s, _ in inbox[1]] == [0]
        assert inbox[0] == []
        assert inbox[2] == []

    def test_payload_too_large(self):
        net = Network(3, bandwidth_bits=8)

        with pytest.raises(PayloadTooLarge):
            net.run_round({0: Message('x', None, 16)})
        assert net.round_counter == 0

    def test_second_payload_in_one_round_is_rejected(self):
        net = Network(3)

        with pytest.raises(DuplicateBroadcast):
            net.run_round([(0, Message('a', 1, 1)), (0, Message('b', 2, 1))])

    def test_senders_ascending(self):
        net = Network(4)
        inbox = net.run_round({3: Message('x', 3, 1), 1: Message('x', 1, 1), 2: Message('x', 2, 1)})

        assert [s for s, _ in inbox[0]] == [1, 2, 3]


class TestChargeBits:
    @pytest.mark.parametrize('bits, rounds', [(0, 0), (32, 1), (100, 4), (33, 2)])
    def test_ceiling(self, bits, rounds):
        net = Network(4, bandwidth_bits=32)

        assert net.charge_bits(bits) == rounds
        assert net.charge_bits(bits) == -(-bits // 32)

    def test_negative_bits(self):
        with pytest.raises(ValueError):
            Network(4).charge_bits(-1)

    def test_broadcast_splits_long_messages(self):
        net = Network(4, bandwidth_bits=8)
        inbox = net.broadcast({0: Message('w', 42, 20), 1: Message('w', 7, 8)})

        assert net.round_counter == 3
        assert [(s, m.value) for s, m in inbox[2]] == [(0, 42), (1, 7)]

    def test_broadcast_all_returns_rounds(self):
        net = Network(5, bandwidth_bits=8)

        assert net.broadcast_all('v', 17) == 3
        assert net.round_counter == 3


class TestElectLeader:
    def test_clique_one_round(self):
        net = Network(6)

        assert net.elect_leader() == 5
        assert net.round_counter == 1
        assert all(s.local_store['leader'] == 5 for s in net.vertices)

    def test_singleton(self):
        net = Network(1)

        assert net.elect_leader() == 0

    def test_congest_path_floods(self):
        net = Network(4, mode=Mode.BROADCAST_CONGEST, topology=[(0, 1), (1, 2), (2, 3)])

        assert net.elect_leader() == 3
        assert all(s.local_store['leader'] == 3 for s in net.vertices)
        assert net.round_counter >= 3


class TestAccounting:
    def test_phase_ledger(self):
        net = Network(3)
        with net.phase('a'):
            net.broadcast_all('x', 1)
        net.broadcast_all('y', 1)

        assert net.round_ledger == {'a': 1, 'unlabeled': 1}
        assert sum(net.round_ledger.values()) == net.round_counter

    def test_absorb(self):
        net = Network(3)
        net.absorb(4, label='nested')

        assert net.round_counter == 4
        assert net.round_ledger['nested'] == 4
        assert len(net.message_log) == 4

    def test_local_computation_is_free(self):
        net = Network(3)
        for state in net.vertices:
            state.local_store['x'] = state.rng.random()

        assert net.round_counter == 0

    def test_determinism(self, tmp_path):
        def run(path):
            net = Network(5, seed=11)
            values = {v: net.vertices[v].rng.integers(100) for v in range(5)}
            net.broadcast({v: Message('r', int(x), 10) for v, x in values.items()})
            net.export_log(path)
            return path.read_text(), net.round_counter

        assert run(tmp_path / 'a.jsonl') == run(tmp_path / 'b.jsonl')

    def test_export_log_fields(self, tmp_path):
        net = Network(2)
        net.run_round({1: Message('hello', None, 3)})
        net.export_log(tmp_path / 'log.jsonl')

        record = json.loads((tmp_path / 'log.jsonl').read_text().splitlines()[0])
        assert record == {'round': 0, 'sender': 1, 'bits': 3, 'tag': 'hello'}

    def test_vertex_streams_differ(self):
        net = Network(2, seed=3)

        assert net.vertices[0].rng.random() != net.vertices[1].rng.random()

    def test_from_config(self):
        net = Network.from_config({'mode': 'BroadcastCongest', 'n': 4, 'seed': 2}, topology=[(0, 1)])

        assert net.mode == Mode.BROADCAST_CONGEST
        assert net.bandwidth_bits == default_bandwidth(4)
        assert net.seed == 2
        assert NetworkConfig(n=4).mode == Mode.BROADCAST_CONGESTED_CLIQUE


class TestEncoding:
    def test_bandwidth(self):
        assert id_bits(1) == 1
        assert id_bits(7) == 3
        assert id_bits(8) == 4
        assert default_bandwidth(8) == 8

    def test_weight_bits_reserve_infinity(self):
        assert weight_bits(0) == 1
        assert weight_bits(1) == 2
        assert weight_bits(7) == 4

    def test_fixed_point_width(self):
        # sign + ceil(log2(8 * 1 / 2^-10)) + 16 guard bits
        assert fixed_point_width(8, 1.0, 2.0 ** -10) == 1 + 13 + 16

    def test_quantize_is_close(self):
        codec = FixedPointCodec(8, U=4.0, epsilon=1e-6)
        values = [0.1, -3.3, 2.0]

        assert max(abs(a - b) for a, b in zip(codec.quantize(values), values)) <= codec.resolution

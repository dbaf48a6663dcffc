"""Round-synchronous simulator of the Broadcast CONGEST and Broadcast
Congested Clique models.

Every vertex owns a single payload slot per round. Whatever it puts there is
delivered, unchanged, to every eligible receiver at the round boundary:
all vertices in clique mode, the topology neighbours in CONGEST mode.
Vertex-local computation is free and never touches the round counter.
"""
import contextlib
import json
import logging
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .config import Mode, NetworkConfig
from .encoding import default_bandwidth, id_bits
from .exceptions import DuplicateBroadcast, PayloadTooLarge

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class Message:
    """One broadcast payload: a tag, the carried value and its size on the wire.
    """
    tag: str
    value: object = None
    bits: int = 0


@dataclass
class VertexState:
    id: int
    rng: np.random.Generator
    local_store: dict = field(default_factory=dict)


class Network():
    """Simulated vertex set with a round ledger and a message log.
    """
    def __init__(self,
                 n,
                 mode=Mode.BROADCAST_CONGESTED_CLIQUE,
                 topology=None,
                 bandwidth_bits=None,
                 seed=0,
                 record=True,
                 ):
        # number of vertices, identified by 0..n-1
        self.n = n
        self.mode = Mode(mode)
        # bits per payload per round
        self.bandwidth_bits = bandwidth_bits if bandwidth_bits is not None else default_bandwidth(n)
        # global seed every random stream is derived from
        self.seed = seed
        # keep the per-round message log (switch off for long sweeps)
        self.record = record

        self.neighbors = [set() for _ in range(n)]
        if topology is not None:
            for u, v in topology:
                if u != v:
                    self.neighbors[u].add(v)
                    self.neighbors[v].add(u)

        self.reset()

    @classmethod
    def from_config(cls, config, topology=None, record=True):
        if not isinstance(config, NetworkConfig):
            config = NetworkConfig.model_validate(config)
        return cls(config.n,
                   mode=config.mode,
                   topology=topology,
                   bandwidth_bits=config.bandwidth_bits,
                   seed=config.seed,
                   record=record,
                   )

    def reset(self):
        """Zero the round counter, clear the logs and re-derive the vertex streams.
        """
        self._round_counter = 0
        self.message_log = []
        self.round_ledger = Counter()
        self.decisions = []
        self._labels = []
        self.vertices = [
            VertexState(id=v, rng=self.stream(v)) for v in range(self.n)
        ]

    @property
    def round_counter(self):
        return self._round_counter

    @property
    def is_clique(self):
        return self.mode == Mode.BROADCAST_CONGESTED_CLIQUE

    def stream(self, *key):
        """Counter-based random stream keyed by (seed, *key).

        Keys must be non-negative integers. Vertex v's private stream is
        stream(v); shared streams use keys no vertex id can collide with
        (see spanner.MARKING_SALT).
        """
        return np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, *key])))

    def receivers(self, sender):
        """Vertices that hear a broadcast of sender.
        """
        if self.is_clique:
            return range(self.n)
        return sorted(self.neighbors[sender])

    @contextlib.contextmanager
    def phase(self, label):
        """Attribute the rounds spent inside the block to label.
        """
        self._labels.append(label)
        try:
            yield self
        finally:
            self._labels.pop()

    def _payload_slots(self, broadcasts):
        if isinstance(broadcasts, Mapping):
            return dict(broadcasts)
        slots = {}
        for sender, message in broadcasts:
            if sender in slots:
                errmsg = 'vertex {} supplied two payloads in round {}'.format(sender, self._round_counter)
                log.error(errmsg)
                raise DuplicateBroadcast(errmsg)
            slots[sender] = message
        return slots

    def run_round(self, broadcasts):
        """Deliver one payload per sender and advance the clock by one round.

        Returns a map vertex -> list of (sender, message), senders ascending.
        """
        slots = self._payload_slots(broadcasts)
        self._advance(slots)
        return self._deliver(slots)

    def _advance(self, slots):
        """Check the payload sizes, log the round and tick the clock.
        """
        entries = []
        for sender in sorted(slots):
            message = slots[sender]
            if message.bits > self.bandwidth_bits:
                errmsg = 'payload of {} bits from vertex {} exceeds the bandwidth of {} bits'.format(
                    message.bits, sender, self.bandwidth_bits)
                log.error(errmsg)
                raise PayloadTooLarge(errmsg)
            entries.append((sender, message.bits, message.tag))

        if self.record:
            self.message_log.append(entries)
        self._round_counter += 1
        self.round_ledger[self._labels[-1] if self._labels else 'unlabeled'] += 1

    def _deliver(self, slots):
        inbox = {v: [] for v in range(self.n)}
        for sender in sorted(slots):
            for receiver in self.receivers(sender):
                inbox[receiver].append((sender, slots[sender]))
        return inbox

    def charge_bits(self, bits):
        """Rounds needed to put a value of the given bit length on the wire.
        """
        if bits < 0:
            raise ValueError('bits must be non-negative, got {}'.format(bits))
        return -(-int(bits) // self.bandwidth_bits)

    def broadcast(self, messages):
        """Broadcast messages of arbitrary length, split into bandwidth-sized fragments.

        Every sender transmits its fragments in consecutive rounds; the call
        costs max_v charge_bits(bits_v) rounds. Zero-bit messages are not sent.
        Returns a map vertex -> list of (sender, message) of complete messages.
        """
        pending = {v: m for v, m in self._payload_slots(messages).items() if m.bits > 0}
        if not pending:
            return {v: [] for v in range(self.n)}

        totals = {sender: self.charge_bits(m.bits) for sender, m in pending.items()}
        for r in range(max(totals.values())):
            fragments = {}
            for sender, message in pending.items():
                if r < totals[sender]:
                    bits = min(self.bandwidth_bits, message.bits - r * self.bandwidth_bits)
                    fragments[sender] = Message(message.tag, message.value if r == totals[sender] - 1 else None, bits)
            self._advance(fragments)
        # a message is complete once its last fragment is on the wire
        return self._deliver(pending)

    def broadcast_all(self, tag, bits, values=None):
        """Every vertex broadcasts one message of the given size.

        values, if given, maps vertex -> carried value. Returns the number of
        rounds spent, charge_bits(bits).
        """
        start = self._round_counter
        values = values if values is not None else {}
        self.broadcast({v: Message(tag, values.get(v), bits) for v in range(self.n)})
        return self._round_counter - start

    def absorb(self, rounds, label=None):
        """Charge rounds spent by a nested simulation run by these vertices.

        Used when the vertices simulate a virtual network (for instance two
        virtual vertices each) whose rounds were counted on its own Network.
        """
        if rounds < 0:
            raise ValueError('rounds must be non-negative, got {}'.format(rounds))
        label = label or (self._labels[-1] if self._labels else 'unlabeled')
        for _ in range(rounds):
            if self.record:
                self.message_log.append([])
        self._round_counter += rounds
        self.round_ledger[label] += rounds

    def elect_leader(self):
        """Every vertex learns the maximum vertex id.

        One round in clique mode; in CONGEST mode the maximum is flooded until
        no vertex learns anything new.
        """
        bits = id_bits(self.n)
        best = list(range(self.n))
        changed = set(range(self.n))
        with self.phase('elect_leader'):
            while changed:
                delivered = self.run_round({v: Message('leader', best[v], bits) for v in sorted(changed)})
                changed = set()
                for v, received in delivered.items():
                    heard = max((m.value for _, m in received), default=best[v])
                    if heard > best[v]:
                        best[v] = heard
                        changed.add(v)
                if self.is_clique:
                    break
        for state in self.vertices:
            state.local_store['leader'] = best[state.id]
        return best[0]

    def record_decision(self, edge, vertex, tag=''):
        """Note that vertex sampled the existence of edge.
        """
        self.decisions.append((tuple(sorted(edge)), vertex, tag))

    def export_log(self, path):
        """Write the message log as JSON lines {round, sender, bits, tag}.
        """
        with open(path, 'w') as f:
            for r, entries in enumerate(self.message_log):
                for sender, bits, tag in entries:
                    f.write(json.dumps({'round': r, 'sender': sender, 'bits': bits, 'tag': tag}) + '\n')

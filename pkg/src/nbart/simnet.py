"""Discrete-event simulation of reliable authenticated asynchronous channels.

Every message gets a delivery time drawn from a hash of (seed, policy, wire
bytes, duplicate index), so its timing does not depend on which other messages
happen to be in flight.  Two runs that differ only in a coalition's internal
behaviour therefore deliver every shared message at the same instant, which is
what makes observable-behaviour comparisons between runs meaningful.

Links are FIFO: a message never overtakes an earlier one on the same
(sender, receiver) link.  Without this a consumer's fresher report could be
overwritten at TO by a stale one delivered later.
"""

from __future__ import annotations

import hashlib
import heapq
import struct
from collections import Counter
from dataclasses import dataclass, field
from typing import Collection, Dict, Iterable, List, Mapping, NamedTuple, Optional

from .agents import Agent, Send, Share
from .codec import ValuePayload
from .crypto import TO, Node, hash_bytes
from .errors import InvalidParams, NonQuiescent
from .protocol import Certify, Consume, Drop, Encode, HashVector, Produce, ProtocolMessage, Setup, serialize

FIFO_GAP = 1e-6

POLICIES = ("uniform-random", "byzantine-favoring", "consumer-starving", "fifo")


class SimEvent(NamedTuple):
    seq: int
    time: float
    kind: str  # send | deliver | share | produce | encode | consume | certify | drop
    actor: Node
    msg: Optional[ProtocolMessage] = None
    wire: Optional[bytes] = None
    payer: Optional[Node] = None
    detail: object = None


def _unit(*parts: bytes) -> float:
    h = hashlib.blake2b(b"\x1f".join(parts), digest_size=8).digest()
    return int.from_bytes(h, "big") / 2.0**64


class SchedulePolicy:
    """Deterministic, fair delivery-time assignment.  All delays are finite."""

    def __init__(self, policy: str, seed: int, byzantine: Collection[Node] = (), n_c: int = 1):
        if policy not in POLICIES:
            raise InvalidParams(f"unknown schedule policy {policy!r}")
        self.policy = policy
        self.seed = seed
        self._salt = f"{policy}/{seed}".encode()
        self.byzantine = frozenset(byzantine)
        self.victim = Node("C", int(_unit(self._salt, b"victim") * n_c))

    def start_time(self, node: Node) -> float:
        if self.policy == "fifo":
            return 0.0
        if self.policy == "byzantine-favoring" and node in self.byzantine:
            return 0.0
        base = 1.0 if self.policy == "byzantine-favoring" else 0.0
        return base + 5.0 * _unit(self._salt, b"start", str(node).encode())

    def delay(self, wire: bytes, msg: ProtocolMessage, dup: int, pos: int, batch: int) -> float:
        if self.policy == "fifo":
            return 1.0
        u = _unit(self._salt, wire, struct.pack(">I", dup))
        if self.policy == "byzantine-favoring":
            if msg.sender in self.byzantine:
                return 0.01 + 0.1 * u
            # later sends of a burst overtake earlier ones
            return 1.0 + 3.0 * (batch - 1 - pos) + 5.0 * u
        d = 0.1 + 10.0 * u
        if self.policy == "consumer-starving" and msg.receiver == self.victim:
            d += 100.0
        return d

    def tiebreak(self, wire: bytes, dup: int) -> float:
        if self.policy == "fifo":
            return 0.0
        return _unit(self._salt, b"tie", wire, struct.pack(">I", dup))


@dataclass
class Trace:
    events: List[SimEvent]
    final_states: Dict[Node, object]
    seed: int
    policy: str
    setup: Setup
    value: ValuePayload
    hv: HashVector
    byzantine: Dict[Node, str] = field(default_factory=dict)
    coalitions: tuple = ()

    def of_kind(self, *kinds: str) -> Iterable[SimEvent]:
        return (e for e in self.events if e.kind in kinds)

    @property
    def evidence(self):
        return self.final_states[TO]

    def consume_log(self, upto: Optional[int] = None) -> Dict[int, list]:
        log: Dict[int, list] = {}
        for e in self.events:
            if upto is not None and e.seq > upto:
                break
            if e.kind == "consume":
                log.setdefault(e.detail.consumer, []).append(e.detail.value)
        return log

    def produced(self, upto: Optional[int] = None) -> set:
        out = set()
        for e in self.events:
            if upto is not None and e.seq > upto:
                break
            if e.kind == "produce":
                out.add(e.detail.producer)
        return out

    @property
    def non_byzantine(self) -> List[Node]:
        pr = self.setup.params
        nodes = [Node("P", i) for i in range(pr.n_p)] + [Node("C", j) for j in range(pr.n_c)]
        return [n for n in nodes if n not in self.byzantine]


def execute(agents: Mapping[Node, Agent], policy: SchedulePolicy, max_events: int = 200_000) -> List[SimEvent]:
    """Run agents to quiescence and return the ordered event log."""
    events: List[SimEvent] = []
    queue: list = []
    qseq = 0
    dups: Counter = Counter()
    link_clock: Dict[tuple, float] = {}

    def record(kind, actor, msg=None, wire=None, payer=None, detail=None, time=0.0):
        events.append(SimEvent(len(events), time, kind, actor, msg, wire, payer, detail))
        if len(events) > max_events:
            raise NonQuiescent(f"more than {max_events} events; runaway behaviour?")

    def dispatch(actor: Node, actions: list, now: float) -> None:
        nonlocal qseq
        outgoing = [a for a in actions if isinstance(a, (Send, Share))]
        pos = 0
        for a in actions:
            if isinstance(a, (Send, Share)):
                msg = a.msg
                wire = serialize(msg)
                dup = dups[wire]
                dups[wire] += 1
                when = now + policy.delay(wire, msg, dup, pos, len(outgoing))
                if isinstance(a, Send):
                    when += a.extra_delay
                link = (msg.sender, msg.receiver)
                when = max(when, link_clock.get(link, -1.0) + FIFO_GAP)
                link_clock[link] = when
                if isinstance(a, Send):
                    record("send", msg.sender, msg, wire, a.payer or msg.sender, time=now)
                    kind = "deliver"
                else:
                    kind = "share"
                heapq.heappush(queue, (when, policy.tiebreak(wire, dup), qseq, kind, msg, wire))
                qseq += 1
                pos += 1
            else:
                record(_EVENT_KIND[type(a)], actor, detail=a, time=now)

    for node, agent in agents.items():
        if agent.has_start:
            heapq.heappush(queue, (policy.start_time(node), 0.0, qseq, "start", node, None))
            qseq += 1

    while queue:
        now, _, _, kind, item, wire = heapq.heappop(queue)
        if kind == "start":
            dispatch(item, agents[item].start(), now)
            continue
        msg: ProtocolMessage = item
        target = agents.get(msg.receiver)
        record(kind, msg.receiver, msg, wire, time=now)
        if target is not None:
            dispatch(msg.receiver, target.deliver(msg), now)
    return events


_EVENT_KIND = {Produce: "produce", Encode: "encode", Consume: "consume", Certify: "certify", Drop: "drop"}


def run(scenario, seed: int = 0, policy: str = "uniform-random", *, variant=None, max_events: int = 200_000) -> Trace:
    """Build the scenario's agents and execute one run."""
    from .behaviors import build_world

    world = build_world(scenario, variant=variant)
    sched = SchedulePolicy(policy, seed, world.byzantine, scenario.params.n_c)
    events = execute(world.agents, sched, max_events)
    return Trace(
        events=events,
        final_states={n: a.state for n, a in world.agents.items()},
        seed=seed,
        policy=policy,
        setup=world.setup,
        value=world.value,
        hv=world.hv,
        byzantine=dict(world.byzantine),
        coalitions=tuple(scenario.coalitions),
    )


def _digest8(data: bytes) -> str:
    return hash_bytes(data, 256)[:4].hex()


def _value_bytes(v: ValuePayload) -> bytes:
    return struct.pack(">I", v.bit_length) + v.data


def _evidence_bytes(evidence) -> bytes:
    from .protocol import report_bytes

    return b"".join(b"\x00" if e is None else b"\x01" + report_bytes(e.hashesvec, e.producers) for e in evidence)


def export_lines(trace: Trace) -> List[str]:
    """One line per event: ``seq kind sender receiver msgkind bytelen digest8``."""
    lines = []
    for e in trace.events:
        if e.msg is not None:
            m = e.msg
            lines.append(f"{e.seq} {e.kind} {m.sender} {m.receiver} {m.kind} {len(e.wire)} {_digest8(e.wire)}")
            continue
        d = e.detail
        if isinstance(d, (Produce, Consume)):
            data = _value_bytes(d.value)
        elif isinstance(d, Certify):
            data = _evidence_bytes(d.evidence)
        elif isinstance(d, Drop):
            data = d.reason.encode()
        else:
            data = b""
        lines.append(f"{e.seq} {e.kind} {e.actor} - - {len(data)} {_digest8(data)}")
    return lines


def export_text(trace: Trace) -> str:
    return "\n".join(export_lines(trace)) + "\n"


def observable_behavior(trace: Trace, t: Collection[Node], i: Node) -> Counter:
    """Events at ``i`` caused by coalition ``t``: deliveries of messages sent by
    members, plus (at TO) the members' produce and consume events."""
    members = set(t)
    if i in members:
        raise InvalidParams("observer must be outside the coalition")
    out: Counter = Counter()
    for e in trace.events:
        if e.kind == "deliver" and e.actor == i and e.msg.sender in members:
            out[("deliver", e.wire)] += 1
        elif i == TO and e.kind == "produce" and e.actor in members:
            out[("produce", e.actor, _value_bytes(e.detail.value))] += 1
        elif i == TO and e.kind == "consume" and e.actor in members:
            out[("consume", e.actor, _value_bytes(e.detail.value))] += 1
    return out

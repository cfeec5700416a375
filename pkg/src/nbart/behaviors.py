"""Byzantine strategies and coalition deviations, as agents.

Byzantine producers act as one coordinated coalition: whenever they lie they
tell the same lie (the encoding of a single alternative value), which is the
strongest thing up to F_P of them can do against a threshold of F_P + 1.
Everybody signs only with their own keypair.

Note on CORRUPT_BLOCK: a consumer removes the sender from ``missing`` as soon
as the signature checks out, before the block hash is checked, so a producer
whose block fails the hash test can never be certified by that consumer.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .agents import Agent, HonestConsumer, HonestProducer, Send, Share, TrustedObserver, sends
from .codec import GfParams, ValuePayload
from .crypto import TO, Keypair, Node, Signature, make_keys, sign, sign_data
from .protocol import (
    BLOCK,
    REPORT,
    SUMMARY,
    Produce,
    ProtocolMessage,
    Setup,
    Variant,
    encode_value,
    producer_messages,
    report_bytes,
)

LATE = 100.0


@dataclass(frozen=True)
class ByzantineBehavior:
    id: str
    roles: Tuple[str, ...]
    description: str


@dataclass(frozen=True)
class DeviationBehavior:
    id: str
    compliant: bool
    description: str
    applicable: Callable[[Sequence[Node], Setup], bool]


@dataclass(frozen=True)
class CoalitionSpec:
    members: Tuple[Node, ...]
    behavior: str = "HONEST"
    name: str = ""

    @property
    def producers(self) -> List[Node]:
        return [m for m in self.members if m.role == "P"]

    @property
    def consumers(self) -> List[Node]:
        return [m for m in self.members if m.role == "C"]

    def label(self) -> str:
        return self.name or "{" + ",".join(str(m) for m in self.members) + "}"


# -- Byzantine behaviours ----------------------------------------------------

BYZANTINE = (
    ByzantineBehavior("SILENT", ("P", "C"), "send nothing at all"),
    ByzantineBehavior("EQUIVOCATE", ("P",), "honest vector to even consumers, a forged one to odd consumers"),
    ByzantineBehavior("CORRUPT_BLOCK", ("P",), "valid signature over the honest vector, block bytes flipped"),
    ByzantineBehavior("WRONG_VECTOR", ("P",), "consistent encoding of a different value to everyone"),
    ByzantineBehavior("NO_REPORT", ("C",), "consume but never report"),
    ByzantineBehavior("FALSE_REPORT", ("C",), "report a fabricated producer vector"),
    ByzantineBehavior("LATE_FLOOD", ("P", "C"), "behave, then re-send and contradict long after"),
)
BYZANTINE_BY_ID = {b.id: b for b in BYZANTINE}


def byzantine_catalog(role: Optional[str] = None) -> List[ByzantineBehavior]:
    return [b for b in BYZANTINE if role is None or role in b.roles]


def alternative_value(v: ValuePayload) -> ValuePayload:
    return ValuePayload(bytes(x ^ 0x5A for x in v.data), v.bit_length)


def _fanout(p: int, setup: Setup, keys: Keypair, pick) -> List[ProtocolMessage]:
    """One message per consumer; ``pick(c)`` returns (blocks, hashes) to use."""
    sender = Node("P", p)
    out = []
    for c in range(setup.params.n_c):
        blocks, hv = pick(c)
        payload = b"".join(hv)
        if c in setup.conset(p):
            out.append(ProtocolMessage(BLOCK, sender, Node("C", c), sign(keys, BLOCK, payload, setup.sig_bits), hv, blocks[p]))
        else:
            out.append(ProtocolMessage(SUMMARY, sender, Node("C", c), sign(keys, SUMMARY, payload, setup.sig_bits), hv))
    return out


class ByzantineProducer(Agent):
    has_start = True

    def __init__(self, node: Node, behavior: str, setup: Setup, keys: Keypair, value: ValuePayload):
        self.node, self.behavior, self.setup, self.keys, self.value = node, behavior, setup, keys, value

    def _encode(self, v):
        pr = self.setup.params
        return encode_value(v, pr.n_p, pr.b, self.setup.gf, self.setup.hash_bits)

    def start(self) -> list:
        b, p, setup, keys = self.behavior, self.node.index, self.setup, self.keys
        if b == "SILENT":
            return []
        honest = self._encode(self.value)
        alt = self._encode(alternative_value(self.value))
        if b == "EQUIVOCATE":
            return sends(_fanout(p, setup, keys, lambda c: honest if c % 2 == 0 else alt))
        if b == "WRONG_VECTOR":
            return sends(_fanout(p, setup, keys, lambda c: alt))
        if b == "CORRUPT_BLOCK":
            msgs = producer_messages(p, honest[0], honest[1], keys, setup)
            bad = bytes(x ^ 0xFF for x in honest[0][p])
            return sends([replace(m, block=bad) if m.kind == BLOCK else m for m in msgs])
        if b == "LATE_FLOOD":
            first = producer_messages(p, honest[0], honest[1], keys, setup)
            flood = list(first) + _fanout(p, setup, keys, lambda c: alt)
            # BLOCK messages to consumers outside the conset, and vice versa
            for m in first:
                flip = BLOCK if m.kind == SUMMARY else SUMMARY
                payload = b"".join(honest[1])
                flood.append(replace(m, kind=flip, block=honest[0][p] if flip == BLOCK else None,
                                     signature=sign(keys, flip, payload, setup.sig_bits)))
            return sends(first) + sends(flood, extra_delay=LATE)
        raise ValueError(f"{b} is not a producer behaviour")


class ByzantineConsumer(Agent):
    def __init__(self, node: Node, behavior: str, setup: Setup, keys: Keypair):
        self.node, self.behavior, self.setup, self.keys = node, behavior, setup, keys
        self.inner = HonestConsumer(node, setup, keys)

    @property
    def state(self):
        return self.inner.state

    def _report(self, hv, producers) -> ProtocolMessage:
        sig = sign_data(self.keys, report_bytes(hv, producers), self.setup.sig_bits)
        return ProtocolMessage(REPORT, self.node, TO, sig, correcthashvec=hv, correctproducers=producers)

    def deliver(self, msg: ProtocolMessage) -> list:
        b = self.behavior
        if b == "SILENT":
            return []
        step = self.inner.step(msg)
        if b == "NO_REPORT":
            return list(step.events)
        out: list = list(step.events)
        for m in step.messages:
            if b == "FALSE_REPORT":
                forged = tuple(
                    None if p % 2 == 0 else (s if s is not None else Signature(Node("P", p), b"\x00" * (self.setup.sig_bits // 8)))
                    for p, s in enumerate(m.correctproducers)
                )
                out.append(Send(self._report(m.correcthashvec, forged)))
            elif b == "LATE_FLOOD":
                out.append(Send(m))
                out.append(Send(m, extra_delay=LATE))
                out.append(Send(self._report(m.correcthashvec, (None,) * len(m.correctproducers)), extra_delay=LATE + 20))
            else:
                raise ValueError(f"{b} is not a consumer behaviour")
        return out


# -- coalition deviations ----------------------------------------------------


def _outside_consumers(members, setup: Setup) -> List[int]:
    inside = {m.index for m in members if m.role == "C"}
    return [c for c in range(setup.params.n_c) if c not in inside]


def _skip_target(members, setup: Setup, in_conset: bool) -> Optional[Tuple[int, int]]:
    for m in members:
        if m.role != "P":
            continue
        for c in _outside_consumers(members, setup):
            if (c in setup.conset(m.index)) == in_conset:
                return m.index, c
    return None


def _has_role(role: str, count: int = 1):
    return lambda members, setup: sum(m.role == role for m in members) >= count


def _has_internal_traffic(members, setup) -> bool:
    return any(m.role == "P" for m in members) and any(m.role == "C" for m in members)


DEVIATIONS = (
    DeviationBehavior("HONEST", True, "follow the algorithm", lambda m, s: True),
    DeviationBehavior("LAZY_PRODUCE_RELAY", True,
                      "one producer skips encoding, signs the hashes of a peer, and the peer relays its messages",
                      _has_role("P", 2)),
    DeviationBehavior("INTRA_COALITION_SKIP", True,
                      "messages between members bypass the network and are handed over locally",
                      _has_internal_traffic),
    DeviationBehavior("SKIP_SUMMARY", False, "a producer omits one SUMMARY to a non-member",
                      lambda m, s: _skip_target(m, s, False) is not None),
    DeviationBehavior("SKIP_BLOCK", False, "a producer omits one BLOCK to a non-member",
                      lambda m, s: _skip_target(m, s, True) is not None),
    DeviationBehavior("SKIP_REPORT", False, "a consumer consumes but never reports", _has_role("C")),
    DeviationBehavior("NO_CONSUME", False, "a consumer gathers messages but never consumes", _has_role("C")),
    DeviationBehavior("PARTIAL_REPORT", False, "a consumer always omits one producer's signature", _has_role("C")),
    DeviationBehavior("NO_PRODUCE_FREERIDE", False,
                      "a producer sends signed messages built from someone else's encoding without producing",
                      _has_role("P")),
)
DEVIATIONS_BY_ID = {d.id: d for d in DEVIATIONS}


def deviation_catalog() -> List[DeviationBehavior]:
    return list(DEVIATIONS)


class _Filtered(Agent):
    """Wraps an agent and rewrites its actions."""

    def __init__(self, inner: Agent, rewrite):
        self.inner, self.rewrite = inner, rewrite
        self.node = inner.node
        self.has_start = inner.has_start

    def start(self) -> list:
        return self.rewrite(self.inner.start())

    def deliver(self, msg) -> list:
        return self.rewrite(self.inner.deliver(msg))

    @property
    def state(self):
        return self.inner.state


class _Shared:
    """State a coalition keeps among its members (free, unpriced channel)."""

    def __init__(self):
        self.encoding = None


class _RelayProducer(HonestProducer):
    def __init__(self, node, setup, keys, value, shared: _Shared):
        super().__init__(node, setup, keys, value)
        self.shared = shared

    def encode_for_peer(self):
        if self.shared.encoding is None:
            pr = self.setup.params
            self.shared.encoding = encode_value(self.value, pr.n_p, pr.b, self.setup.gf, self.setup.hash_bits)
        return self.shared.encoding


class _LazyProducer(Agent):
    has_start = True

    def __init__(self, node, setup, keys, value, relay: _RelayProducer):
        self.node, self.setup, self.keys, self.value, self.relay = node, setup, keys, value, relay

    def start(self) -> list:
        blocks, hashes = self.relay.encode_for_peer()
        msgs = producer_messages(self.node.index, blocks, hashes, self.keys, self.setup)
        return [Produce(self.node.index, self.value)] + sends(msgs, payer=self.relay.node)


class _FreeRider(Agent):
    has_start = True

    def __init__(self, node, setup, keys, value):
        self.node, self.setup, self.keys, self.value = node, setup, keys, value

    def start(self) -> list:
        pr = self.setup.params
        blocks, hashes = encode_value(self.value, pr.n_p, pr.b, self.setup.gf, self.setup.hash_bits)
        return sends(producer_messages(self.node.index, blocks, hashes, self.keys, self.setup))


def _honest_agent(node: Node, setup: Setup, keys: Mapping[Node, Keypair], value: ValuePayload) -> Agent:
    if node.role == "P":
        return HonestProducer(node, setup, keys[node], value)
    return HonestConsumer(node, setup, keys[node])


def _drop_sends(pred):
    return lambda actions: [a for a in actions if not (isinstance(a, Send) and pred(a.msg))]


def build_coalition(spec: CoalitionSpec, setup: Setup, keys: Mapping[Node, Keypair], value: ValuePayload) -> Dict[Node, Agent]:
    members = list(spec.members)
    dev = DEVIATIONS_BY_ID[spec.behavior]
    if not dev.applicable(members, setup):
        raise ValueError(f"{spec.behavior} is not applicable to coalition {spec.label()}")
    agents = {m: _honest_agent(m, setup, keys, value) for m in members}
    b = spec.behavior
    if b == "LAZY_PRODUCE_RELAY":
        lazy, helper = spec.producers[:2]
        relay = _RelayProducer(helper, setup, keys[helper], value, _Shared())
        agents[helper] = relay
        agents[lazy] = _LazyProducer(lazy, setup, keys[lazy], value, relay)
    elif b == "INTRA_COALITION_SKIP":
        inside = set(members)

        def local(actions):
            return [Share(a.msg) if isinstance(a, Send) and a.msg.receiver in inside else a for a in actions]

        agents = {m: _Filtered(a, local) for m, a in agents.items()}
    elif b in ("SKIP_SUMMARY", "SKIP_BLOCK"):
        p, c = _skip_target(members, setup, b == "SKIP_BLOCK")
        node = Node("P", p)
        agents[node] = _Filtered(agents[node], _drop_sends(lambda m: m.receiver == Node("C", c)))
    elif b in ("SKIP_REPORT", "NO_CONSUME", "PARTIAL_REPORT"):
        c = spec.consumers[0]
        if b == "SKIP_REPORT":
            agents[c] = _Filtered(agents[c], _drop_sends(lambda m: m.kind == REPORT))
        elif b == "NO_CONSUME":
            agents[c] = HonestConsumer(c, replace(setup, variant=Variant(skip_decode=True)), keys[c])
        else:
            outside = [p for p in range(setup.params.n_p) if Node("P", p) not in members]
            omit = outside[0] if outside else 0
            k = keys[c]

            def partial(actions, omit=omit, k=k, c=c):
                out = []
                for a in actions:
                    if isinstance(a, Send) and a.msg.kind == REPORT:
                        producers = tuple(None if p == omit else s for p, s in enumerate(a.msg.correctproducers))
                        sig = sign_data(k, report_bytes(a.msg.correcthashvec, producers), setup.sig_bits)
                        a = Send(replace(a.msg, correctproducers=producers, signature=sig))
                    out.append(a)
                return out

            agents[c] = _Filtered(agents[c], partial)
    elif b == "NO_PRODUCE_FREERIDE":
        p = spec.producers[0]
        agents[p] = _FreeRider(p, setup, keys[p], value)
    return agents


# -- assembling a run ---------------------------------------------------------


@dataclass
class World:
    agents: Dict[Node, Agent]
    setup: Setup
    value: ValuePayload
    hv: tuple
    byzantine: Dict[Node, str]


def all_nodes(params) -> List[Node]:
    return [Node("P", i) for i in range(params.n_p)] + [Node("C", j) for j in range(params.n_c)] + [TO]


def build_world(scenario, variant: Optional[Variant] = None) -> World:
    params = scenario.params
    nodes = all_nodes(params)
    keys, registry = make_keys(nodes, scenario.key_seed, scenario.sig_bits)
    setup = Setup(
        params=params,
        registry=registry,
        gf=GfParams.for_omega(params.omega),
        hash_bits=scenario.hash_bits,
        sig_bits=scenario.sig_bits,
        variant=variant or Variant(),
    )
    value = scenario.value
    _, hv = encode_value(value, params.n_p, params.b, setup.gf, setup.hash_bits)
    agents: Dict[Node, Agent] = {TO: TrustedObserver(setup)}
    for n in nodes[:-1]:
        agents[n] = _honest_agent(n, setup, keys, value)
    for spec in scenario.coalitions:
        agents.update(build_coalition(spec, setup, keys, value))
    for n, b in scenario.byzantine.items():
        if n.role == "P":
            agents[n] = ByzantineProducer(n, b, setup, keys[n], value)
        else:
            agents[n] = ByzantineConsumer(n, b, setup, keys[n])
    return World(agents, setup, value, hv, dict(scenario.byzantine))


# -- compliance ----------------------------------------------------------------


@dataclass(frozen=True)
class Compliance:
    compliant: bool
    witness: Optional[Node] = None

    def __bool__(self) -> bool:
        return self.compliant


def check_compliance(trace_dev, trace_base, coalition) -> Compliance:
    """Compare what every outsider observes of ``coalition`` in the two runs."""
    from .errors import ScenarioMismatch
    from .simnet import observable_behavior

    members = tuple(coalition.members if isinstance(coalition, CoalitionSpec) else coalition)
    same = (
        trace_dev.setup.params == trace_base.setup.params
        and trace_dev.seed == trace_base.seed
        and trace_dev.policy == trace_base.policy
        and trace_dev.byzantine == trace_base.byzantine
        and trace_dev.value == trace_base.value
    )
    if not same:
        raise ScenarioMismatch("traces come from different scenarios, seeds or Byzantine assignments")
    for i in all_nodes(trace_dev.setup.params):
        if i in members:
            continue
        if observable_behavior(trace_dev, members, i) != observable_behavior(trace_base, members, i):
            return Compliance(False, i)
    return Compliance(True)

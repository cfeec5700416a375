"""Producer, consumer and trusted-observer state machines.

Every handler is pure: it takes a state and an input and returns a ``Step``
holding the new state, the messages to send and the local events raised
(produce, consume, certify, dropped input).  Nothing here performs I/O.
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Tuple

from .codec import GfParams, ValuePayload, rs_decode, rs_encode
from .crypto import (
    DEFAULT_HASH_BITS,
    DEFAULT_SIG_BITS,
    TO,
    Digest,
    KeyRegistry,
    Keypair,
    Node,
    Signature,
    hash_bytes,
    sign,
    sign_data,
    signing_bytes,
    verifyhash,
)
from .errors import DoubleProduce
from .topology import CANONICAL, Mapping, Params

BLOCK = "BLOCK"
SUMMARY = "SUMMARY"
REPORT = "REPORT"

HashVector = Tuple[Digest, ...]
SigVector = Tuple[Optional[Signature], ...]


@dataclass(frozen=True)
class Variant:
    """Deliberate protocol mutations, used to check that the oracles bite."""

    skip_decode: bool = False
    threshold_offset: int = 0


HONEST = Variant()


@dataclass(frozen=True)
class Setup:
    """Everything a machine needs besides its own state and keys."""

    params: Params
    registry: KeyRegistry
    gf: GfParams = GfParams()
    hash_bits: int = DEFAULT_HASH_BITS
    sig_bits: int = DEFAULT_SIG_BITS
    mapping: Mapping = CANONICAL
    variant: Variant = HONEST

    def prodset(self, j: int) -> Tuple[int, ...]:
        return self.mapping.prodset(j, self.params)

    def conset(self, i: int):
        return self.mapping.conset(i, self.params)


# -- wire messages ---------------------------------------------------------


@dataclass(frozen=True)
class ProtocolMessage:
    kind: str
    sender: Node
    receiver: Node
    signature: Optional[Signature]
    hashes: Optional[HashVector] = None
    block: Optional[bytes] = None
    correcthashvec: Optional[HashVector] = None
    correctproducers: Optional[SigVector] = None

    def signed_bytes(self) -> bytes:
        if self.kind == REPORT:
            return report_bytes(self.correcthashvec, self.correctproducers)
        return signing_bytes(self.kind, _join(self.hashes))


def _join(hv: Optional[HashVector]) -> bytes:
    return b"".join(hv) if hv else b""


def _sigvec_bytes(sigs: Optional[SigVector]) -> bytes:
    if sigs is None:
        return b""
    return b"".join(b"\x00" if s is None else b"\x01" + s.value for s in sigs)


def report_bytes(hv: Optional[HashVector], producers: Optional[SigVector]) -> bytes:
    return signing_bytes(REPORT, _join(hv) + _sigvec_bytes(producers))


_KIND_TAG = {BLOCK: 1, SUMMARY: 2, REPORT: 3}
_ROLE_TAG = {"P": 1, "C": 2, "TO": 3}


def _node_bytes(n: Node) -> bytes:
    return struct.pack(">BH", _ROLE_TAG.get(n.role, 0), n.index)


def _lp(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def _vector_fields(hv: Optional[HashVector]) -> bytes:
    if hv is None:
        return struct.pack(">I", 0xFFFFFFFF)
    return struct.pack(">I", len(hv)) + b"".join(_lp(h) for h in hv)


def serialize(msg: ProtocolMessage) -> bytes:
    """Canonical wire bytes: kind, sender, receiver, payload fields, signature."""
    parts = [bytes([_KIND_TAG.get(msg.kind, 0)]), _node_bytes(msg.sender), _node_bytes(msg.receiver)]
    if msg.kind == REPORT:
        parts.append(_vector_fields(msg.correcthashvec))
        sigs = msg.correctproducers or ()
        parts.append(struct.pack(">I", len(sigs)))
        parts.extend(b"\x00" if s is None else b"\x01" + _lp(s.value) for s in sigs)
    else:
        if msg.kind == BLOCK:
            parts.append(_lp(msg.block or b""))
        parts.append(_vector_fields(msg.hashes))
    parts.append(_lp(msg.signature.value if msg.signature else b""))
    return b"".join(parts)


def field_bits(msg: ProtocolMessage) -> Dict[str, int]:
    """Information-content bits per field; framing is whatever remains."""
    sizes = {"block": 0, "hashes": 0, "signature": 0, "producers": 0}
    if msg.block is not None:
        sizes["block"] = 8 * len(msg.block)
    hv = msg.correcthashvec if msg.kind == REPORT else msg.hashes
    if hv:
        sizes["hashes"] = 8 * sum(len(h) for h in hv)
    if msg.signature is not None:
        sizes["signature"] = 8 * len(msg.signature.value)
    if msg.correctproducers:
        sizes["producers"] = 8 * sum(len(s.value) for s in msg.correctproducers if s is not None)
    sizes["framing"] = 8 * len(serialize(msg)) - sum(sizes.values())
    return sizes


# -- events ----------------------------------------------------------------


class Produce(NamedTuple):
    producer: int
    value: ValuePayload


class Encode(NamedTuple):
    producer: int


class Consume(NamedTuple):
    consumer: int
    value: ValuePayload


class EvidenceEntry(NamedTuple):
    hashesvec: Optional[HashVector]
    producers: Optional[SigVector]


Evidence = Tuple[Optional[EvidenceEntry], ...]


class Certify(NamedTuple):
    evidence: Evidence


class Drop(NamedTuple):
    reason: str


class Step(NamedTuple):
    state: object
    messages: List[ProtocolMessage]
    events: List[tuple]


# -- producer --------------------------------------------------------------


@dataclass(frozen=True)
class ProducerState:
    blocks: Optional[Tuple[bytes, ...]] = None
    hashes: Optional[HashVector] = None


@lru_cache(maxsize=256)
def encode_value(v: ValuePayload, n_p: int, b: int, gf: GfParams, hash_bits: int):
    """RS-ENC plus the hash of every block."""
    blocks = rs_encode(v, n_p, b, gf)
    return blocks, tuple(hash_bytes(blk, hash_bits) for blk in blocks)


def producer_messages(p: int, blocks, hashes: HashVector, keys: Keypair, setup: Setup) -> List[ProtocolMessage]:
    """The BLOCK/SUMMARY fan-out of a producer that holds ``hashes``."""
    sender = Node("P", p)
    payload = _join(hashes)
    targets = setup.conset(p)
    out = []
    if targets:
        sig = sign(keys, BLOCK, payload, setup.sig_bits)
        for c in sorted(targets):
            out.append(ProtocolMessage(BLOCK, sender, Node("C", c), sig, hashes, blocks[p]))
    rest = [c for c in range(setup.params.n_c) if c not in targets]
    if rest:
        sig = sign(keys, SUMMARY, payload, setup.sig_bits)
        for c in rest:
            out.append(ProtocolMessage(SUMMARY, sender, Node("C", c), sig, hashes))
    return out


def producer_on_produce(state: ProducerState, p: int, v: ValuePayload, setup: Setup, keys: Keypair) -> Step:
    if state.blocks is not None:
        raise DoubleProduce(f"produce invoked twice on producer {p}")
    pr = setup.params
    blocks, hashes = encode_value(v, pr.n_p, pr.b, setup.gf, setup.hash_bits)
    msgs = producer_messages(p, blocks, hashes, keys, setup)
    return Step(ProducerState(blocks, hashes), msgs, [Encode(p), Produce(p, v)])


# -- consumer --------------------------------------------------------------


@dataclass(frozen=True)
class ConsumerState:
    value: Optional[ValuePayload]
    correcthashvec: Optional[HashVector]
    hashvecs: Tuple[Optional[Tuple[HashVector, Signature]], ...]
    blocks: Tuple[Optional[bytes], ...]
    missing: frozenset
    correctproducers: SigVector

    @classmethod
    def initial(cls, params: Params) -> "ConsumerState":
        none = (None,) * params.n_p
        return cls(None, None, none, none, frozenset(range(params.n_p)), none)

    @property
    def phase(self) -> str:
        if self.correcthashvec is None:
            return "init"
        return "gotHashes" if self.value is None else "consumed"


def minimum_hashes(hashvecs, f_p: int, threshold: Optional[int] = None) -> Optional[HashVector]:
    """A vector held by at least F_P + 1 entries (signatures ignored), else None."""
    need = f_p + 1 if threshold is None else threshold
    counts = Counter(entry[0] for entry in hashvecs if entry is not None)
    best = None
    for p, entry in enumerate(hashvecs):
        if entry is None:
            continue
        n = counts[entry[0]]
        if n >= need and (best is None or n > counts[best]):
            best = entry[0]
    return best


def _set(t: tuple, i: int, x) -> tuple:
    return t[:i] + (x,) + t[i + 1 :]


def report(state: ConsumerState, c: int, setup: Setup, keys: Keypair) -> ProtocolMessage:
    sig = sign_data(keys, report_bytes(state.correcthashvec, state.correctproducers), setup.sig_bits)
    return ProtocolMessage(
        REPORT, Node("C", c), TO, sig,
        correcthashvec=state.correcthashvec, correctproducers=state.correctproducers,
    )


def consume_and_report(state: ConsumerState, c: int, setup: Setup, keys: Keypair) -> Step:
    pr = setup.params
    if setup.variant.skip_decode:
        value = None
    else:
        value = rs_decode(enumerate(state.blocks), pr.n_p, pr.b, setup.gf, state.correcthashvec)
    if value is None:
        return Step(state, [], [])
    chv = state.correcthashvec
    cp = tuple(
        entry[1] if entry is not None and entry[0] == chv else old
        for entry, old in zip(state.hashvecs, state.correctproducers)
    )
    state = replace(state, value=value, correctproducers=cp)
    return Step(state, [report(state, c, setup, keys)], [Consume(c, value)])


def _well_formed(hv, n_p: int) -> bool:
    return isinstance(hv, tuple) and len(hv) == n_p


def _on_signed(state: ConsumerState, c: int, msg: ProtocolMessage, setup: Setup, keys: Keypair) -> Step:
    pr = setup.params
    p = msg.sender.index
    phashes = msg.hashes
    state = replace(state, missing=state.missing - {p})
    is_block = msg.kind == BLOCK
    if is_block and not (_well_formed(phashes, pr.n_p) and verifyhash(msg.block, phashes[p])):
        return Step(state, [], [Drop("hash mismatch")])
    if not _well_formed(phashes, pr.n_p):
        return Step(state, [], [Drop("malformed hash vector")])
    entry = (phashes, msg.signature)
    if state.correcthashvec is None:
        state = replace(state, hashvecs=_set(state.hashvecs, p, entry))
        if is_block:
            state = replace(state, blocks=_set(state.blocks, p, msg.block))
        threshold = pr.f_p + 1 + setup.variant.threshold_offset
        chv = minimum_hashes(state.hashvecs, pr.f_p, threshold)
        if chv is None:
            return Step(state, [], [])
        state = replace(state, correcthashvec=chv)
        return consume_and_report(state, c, setup, keys)
    if phashes != state.correcthashvec:
        return Step(state, [], [Drop("vector differs from correcthashvec")])
    if state.value is None:
        state = replace(state, hashvecs=_set(state.hashvecs, p, entry))
        if is_block:
            state = replace(state, blocks=_set(state.blocks, p, msg.block))
        return consume_and_report(state, c, setup, keys)
    state = replace(state, correctproducers=_set(state.correctproducers, p, msg.signature))
    return Step(state, [report(state, c, setup, keys)], [])


def _guarded(state: ConsumerState, c: int, msg: ProtocolMessage, setup: Setup, keys: Keypair, want_in_prodset: bool) -> Step:
    sender = msg.sender
    if sender.role != "P" or sender.index not in state.missing:
        return Step(state, [], [Drop("sender not in missing")])
    if (sender.index in setup.prodset(c)) != want_in_prodset:
        return Step(state, [], [Drop("sender/prodset guard")])
    data = signing_bytes(msg.kind, _join(msg.hashes) if isinstance(msg.hashes, tuple) else b"")
    if not setup.registry.verifysig(sender, data, msg.signature):
        return Step(state, [], [Drop("bad signature")])
    return _on_signed(state, c, msg, setup, keys)


def consumer_on_block(state: ConsumerState, c: int, msg: ProtocolMessage, setup: Setup, keys: Keypair) -> Step:
    assert msg.kind == BLOCK
    return _guarded(state, c, msg, setup, keys, True)


def consumer_on_summary(state: ConsumerState, c: int, msg: ProtocolMessage, setup: Setup, keys: Keypair) -> Step:
    assert msg.kind == SUMMARY
    return _guarded(state, c, msg, setup, keys, False)


def consumer_on_message(state: ConsumerState, c: int, msg: ProtocolMessage, setup: Setup, keys: Keypair) -> Step:
    if msg.kind == BLOCK:
        return consumer_on_block(state, c, msg, setup, keys)
    if msg.kind == SUMMARY:
        return consumer_on_summary(state, c, msg, setup, keys)
    return Step(state, [], [Drop(f"unexpected {msg.kind} at consumer")])


# -- trusted observer ------------------------------------------------------


def initial_evidence(params: Params) -> Evidence:
    return (None,) * params.n_c


def to_on_report(evidence: Evidence, msg: ProtocolMessage, registry: KeyRegistry) -> Step:
    sender = msg.sender
    if msg.kind != REPORT or sender.role != "C" or not 0 <= sender.index < len(evidence):
        return Step(evidence, [], [Drop("not a consumer report")])
    if not registry.verifysig(sender, msg.signed_bytes(), msg.signature):
        return Step(evidence, [], [Drop("bad signature")])
    evidence = _set(evidence, sender.index, EvidenceEntry(msg.correcthashvec, msg.correctproducers))
    return Step(evidence, [], [Certify(evidence)])

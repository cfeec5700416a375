"""Certification predicates over the trusted observer's evidence.

``hasProd``/``hasAck`` hold for a player when it belongs to some certified pair
of sets (P, C) that clears both thresholds.  A pair is certified when every
producer of P is certified by every consumer of C, every consumer of C
consumed the correct value, and every producer of P produced it.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Collection, Dict, FrozenSet, Iterable, Mapping, Optional, Tuple

from .codec import ValuePayload
from .crypto import Node, Signature, signing_bytes
from .protocol import BLOCK, SUMMARY, Evidence, EvidenceEntry, HashVector, Setup


@dataclass(frozen=True)
class CertSets:
    P_bar: FrozenSet[int]
    C_bar: FrozenSet[int]
    thresholds_met: bool
    pairs: Tuple[Tuple[FrozenSet[int], FrozenSet[int]], ...] = ()


class Judge:
    """Evaluates predicates for one transfer of value ``value`` with hashes ``hv``."""

    def __init__(self, setup: Setup, hv: HashVector, value: Optional[ValuePayload] = None):
        self.setup = setup
        self.hv = hv
        self.value = value
        payload = b"".join(hv)
        self._data = {BLOCK: signing_bytes(BLOCK, payload), SUMMARY: signing_bytes(SUMMARY, payload)}
        self._cache: Dict[Tuple[int, str, bytes], bool] = {}

    def _valid(self, p: int, tag: str, sig: Signature) -> bool:
        key = (p, tag, sig.value)
        ok = self._cache.get(key)
        if ok is None:
            signer = Node("P", p)
            ok = self.setup.registry.verifysig(signer, self._data[tag], Signature(signer, sig.value))
            self._cache[key] = ok
        return ok

    def certified(self, evidence: Evidence, p: int, c: int) -> bool:
        entry = evidence[c]
        if entry is None or entry.hashesvec != self.hv:
            return False
        producers = entry.producers
        if not isinstance(producers, tuple) or len(producers) != self.setup.params.n_p:
            return False
        sig = producers[p]
        if sig is None:
            return False
        tag = BLOCK if c in self.setup.conset(p) else SUMMARY
        return self._valid(p, tag, sig)

    def eligible_consumers(self, evidence: Evidence, consume_log: Mapping[int, Iterable[ValuePayload]]) -> list[int]:
        out = []
        for c, entry in enumerate(evidence):
            if entry is None or entry.hashesvec != self.hv:
                continue
            values = list(consume_log.get(c, ()))
            if not values:
                continue
            if self.value is not None and self.value not in values:
                continue
            out.append(c)
        return out

    def cert_sets(
        self,
        evidence: Evidence,
        consume_log: Mapping[int, Iterable[ValuePayload]],
        produced: Optional[Collection[int]] = None,
    ) -> CertSets:
        pr = self.setup.params
        producers = range(pr.n_p) if produced is None else sorted(set(produced))
        eligible = self.eligible_consumers(evidence, consume_log)
        certs = {c: frozenset(p for p in producers if self.certified(evidence, p, c)) for c in eligible}
        need_c = max(pr.n_c - pr.f_c, 0)
        need_p = pr.n_p - pr.f_p
        all_p = frozenset(producers)
        # any certified pair with a larger consumer set contains one of exactly
        # need_c consumers whose producer set is at least as large
        sizes = [need_c] if need_c > 0 else [0, 1]
        pairs = []
        for k in sizes:
            for group in combinations(eligible, k):
                ps = all_p.intersection(*(certs[c] for c in group)) if group else all_p
                if len(ps) >= need_p:
                    pairs.append((frozenset(group), ps))
        if pairs:
            P = frozenset().union(*(ps for _, ps in pairs))
            C = frozenset().union(*(cs for cs, _ in pairs))
            return CertSets(P, C, True, tuple(pairs))
        # no certified pair clears the thresholds: report the direct reading
        C = frozenset(eligible)
        P = all_p.intersection(*(certs[c] for c in eligible)) if eligible else all_p
        return CertSets(P, C, False, ())

    def has_prod(self, sets: CertSets, p: int) -> bool:
        return sets.thresholds_met and p in sets.P_bar

    def has_ack(self, sets: CertSets, c: int) -> bool:
        return sets.thresholds_met and c in sets.C_bar


def certified(evidence: Evidence, p: int, c: int, setup: Setup, hv: HashVector) -> bool:
    return Judge(setup, hv).certified(evidence, p, c)


def cert_sets(evidence, consume_log, setup: Setup, hv: HashVector, value=None, produced=None) -> CertSets:
    return Judge(setup, hv, value).cert_sets(evidence, consume_log, produced)


def has_prod(evidence, consume_log, p: int, setup: Setup, hv: HashVector, value=None, produced=None) -> bool:
    j = Judge(setup, hv, value)
    return j.has_prod(j.cert_sets(evidence, consume_log, produced), p)


def has_ack(evidence, consume_log, c: int, setup: Setup, hv: HashVector, value=None, produced=None) -> bool:
    j = Judge(setup, hv, value)
    return j.has_ack(j.cert_sets(evidence, consume_log, produced), c)


def epsilon_view(evidence: Evidence, byzantine: Collection[Node]) -> Evidence:
    """Blank out Byzantine consumers' rows and Byzantine producers' columns."""
    bad_c = {n.index for n in byzantine if n.role == "C"}
    bad_p = {n.index for n in byzantine if n.role == "P"}
    out = []
    for c, entry in enumerate(evidence):
        if entry is None or c in bad_c:
            out.append(None)
            continue
        producers = entry.producers
        if isinstance(producers, tuple) and bad_p:
            producers = tuple(None if p in bad_p else s for p, s in enumerate(producers))
        out.append(EvidenceEntry(entry.hashesvec, producers))
    return tuple(out)

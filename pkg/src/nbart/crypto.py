"""Hashing and a deterministic keyed signature scheme.

Signatures are MACs keyed by a per-identity secret.  Verification goes through
a registry that maps each identity to its secret; unforgeability is modelled
structurally because behaviours only ever receive their own keypair.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from typing import Dict, Iterable, NamedTuple

from .errors import UnknownIdentity

Digest = bytes

DEFAULT_HASH_BITS = 256
DEFAULT_SIG_BITS = 256


class Node(NamedTuple):
    """A player identity: role is "P", "C" or "TO"."""

    role: str
    index: int = 0

    def __str__(self) -> str:
        return "TO" if self.role == "TO" else f"{self.role.lower()}{self.index}"

    @classmethod
    def parse(cls, text: str) -> "Node":
        text = text.strip()
        if text == "TO":
            return TO
        role, digits = text[0].upper(), text[1:]
        if role not in ("P", "C") or not digits.isdigit():
            raise ValueError(f"bad identity {text!r}")
        return cls(role, int(digits))


TO = Node("TO", 0)


def hash_bytes(data: bytes, bits: int = DEFAULT_HASH_BITS) -> Digest:
    return hashlib.shake_256(data).digest(bits // 8)


@dataclass(frozen=True)
class Signature:
    signer: Node
    value: bytes


@dataclass(frozen=True)
class Keypair:
    identity: Node
    public: bytes
    private: bytes


def signing_bytes(tag: str, payload: bytes) -> bytes:
    """The byte string a signature covers: length-prefixed tag, then payload."""
    t = tag.encode()
    return bytes([len(t)]) + t + payload


def _mac(secret: bytes, data: bytes, bits: int) -> bytes:
    return hashlib.shake_256(b"sig\x00" + secret + data).digest(bits // 8)


def sign_data(keys: Keypair, data: bytes, bits: int = DEFAULT_SIG_BITS) -> Signature:
    return Signature(keys.identity, _mac(keys.private, data, bits))


def sign(keys: Keypair, tag: str, payload: bytes, bits: int = DEFAULT_SIG_BITS) -> Signature:
    return sign_data(keys, signing_bytes(tag, payload), bits)


class KeyRegistry:
    """Identity -> verification key.  Immutable once a scenario is set up."""

    def __init__(self, keypairs: Iterable[Keypair], sig_bits: int = DEFAULT_SIG_BITS):
        self._secrets: Dict[Node, bytes] = {k.identity: k.private for k in keypairs}
        self.sig_bits = sig_bits

    def __contains__(self, node: Node) -> bool:
        return node in self._secrets

    def verifysig(self, signer: Node, data: bytes, sig: Signature) -> bool:
        try:
            secret = self._secrets[signer]
        except KeyError:
            raise UnknownIdentity(signer) from None
        if sig is None or sig.signer != signer or 8 * len(sig.value) != self.sig_bits:
            return False
        return hmac.compare_digest(_mac(secret, data, self.sig_bits), sig.value)


def verifyhash(block: bytes, h: Digest) -> bool:
    return block is not None and hash_bytes(block, 8 * len(h)) == h


def make_keypair(node: Node, seed: bytes = b"") -> Keypair:
    private = hashlib.sha256(b"sk" + seed + str(node).encode()).digest()
    public = hashlib.sha256(b"pk" + private).digest()
    return Keypair(node, public, private)


def make_keys(nodes: Iterable[Node], seed: bytes = b"", sig_bits: int = DEFAULT_SIG_BITS):
    """Deterministic keypairs for ``nodes`` and the matching registry."""
    pairs = {n: make_keypair(n, seed) for n in nodes}
    return pairs, KeyRegistry(pairs.values(), sig_bits)

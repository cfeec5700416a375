import pytest

from nbart.crypto import TO, Node, Signature, hash_bytes, make_keys, sign, signing_bytes, verifyhash
from nbart.errors import UnknownIdentity


def keys():
    return make_keys([Node("P", 0), Node("P", 1), Node("C", 0), TO], b"seed")


def test_node_names_roundtrip():
    for n in (Node("P", 3), Node("C", 0), TO):
        assert Node.parse(str(n)) == n
    with pytest.raises(ValueError):
        Node.parse("x1")


def test_sign_and_verify():
    pairs, reg = keys()
    p0 = Node("P", 0)
    sig = sign(pairs[p0], "BLOCK", b"abc")
    assert reg.verifysig(p0, signing_bytes("BLOCK", b"abc"), sig)
    assert not reg.verifysig(p0, signing_bytes("SUMMARY", b"abc"), sig)
    assert not reg.verifysig(p0, signing_bytes("BLOCK", b"abd"), sig)
    assert not reg.verifysig(Node("P", 1), signing_bytes("BLOCK", b"abc"), sig)
    assert not reg.verifysig(p0, signing_bytes("BLOCK", b"abc"), None)


def test_short_signature_rejected():
    pairs, reg = keys()
    p0 = Node("P", 0)
    sig = sign(pairs[p0], "BLOCK", b"abc")
    assert not reg.verifysig(p0, signing_bytes("BLOCK", b"abc"), Signature(p0, sig.value[:1]))


def test_unknown_signer():
    pairs, reg = keys()
    with pytest.raises(UnknownIdentity):
        reg.verifysig(Node("P", 9), b"x", Signature(Node("P", 9), b"\x00" * 32))


def test_tag_and_payload_cannot_be_shifted():
    assert signing_bytes("BLOCK", b"x") != signing_bytes("BLOC", b"Kx")


def test_keys_are_deterministic():
    a, _ = keys()
    b, _ = keys()
    assert a == b


def test_hash_lengths():
    assert len(hash_bytes(b"x", 128)) == 16
    assert verifyhash(b"x", hash_bytes(b"x"))
    assert not verifyhash(None, hash_bytes(b"x"))

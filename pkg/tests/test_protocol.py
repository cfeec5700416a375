from dataclasses import replace

import pytest

from nbart.codec import ValuePayload
from nbart.crypto import TO, Node, make_keys
from nbart.errors import DoubleProduce
from nbart.protocol import (
    BLOCK,
    SUMMARY,
    Consume,
    ConsumerState,
    Drop,
    ProducerState,
    Setup,
    consumer_on_message,
    encode_value,
    field_bits,
    initial_evidence,
    minimum_hashes,
    producer_messages,
    producer_on_produce,
    serialize,
    to_on_report,
)
from nbart.topology import Params

PR = Params(n_p=3, n_c=2, f_p=1, f_c=1, b=2)
V = ValuePayload(bytes(range(32)))


def world(pr=PR):
    nodes = [Node("P", i) for i in range(pr.n_p)] + [Node("C", j) for j in range(pr.n_c)] + [TO]
    keys, reg = make_keys(nodes, b"t")
    return keys, Setup(pr, reg)


def outbox(setup, keys, v=V):
    blocks, hv = encode_value(v, setup.params.n_p, setup.params.b, setup.gf, setup.hash_bits)
    return {p: producer_messages(p, blocks, hv, keys[Node("P", p)], setup) for p in range(setup.params.n_p)}, hv


def test_producer_sends_one_message_per_consumer():
    keys, setup = world(Params(n_p=5, n_c=3, f_p=1, f_c=1, b=2))
    msgs, _ = outbox(setup, keys)
    for p, ms in msgs.items():
        assert sorted(m.receiver.index for m in ms) == [0, 1, 2]
        kinds = {m.receiver.index: m.kind for m in ms}
        assert {c for c, k in kinds.items() if k == BLOCK} == set(setup.conset(p))


def test_double_produce_rejected():
    keys, setup = world()
    step = producer_on_produce(ProducerState(), 0, V, setup, keys[Node("P", 0)])
    assert [type(e).__name__ for e in step.events] == ["Encode", "Produce"]
    with pytest.raises(DoubleProduce):
        producer_on_produce(step.state, 0, V, setup, keys[Node("P", 0)])


def test_minimum_hashes_threshold():
    a, b = (b"a",), (b"b",)
    assert minimum_hashes([(a, None), None, (b, None)], f_p=1) is None
    assert minimum_hashes([(a, None), (a, None), (b, None)], f_p=1) == a
    assert minimum_hashes([(b, None), None, None], f_p=1, threshold=1) == b


def feed(setup, keys, c, msgs):
    state = ConsumerState.initial(setup.params)
    events, sent = [], []
    for m in msgs:
        step = consumer_on_message(state, c, m, setup, keys[Node("C", c)])
        state = step.state
        events += step.events
        sent += step.messages
    return state, events, sent


def test_consumer_consumes_once_then_keeps_reporting():
    keys, setup = world()
    msgs, hv = outbox(setup, keys)
    to_c0 = [msgs[p][0] for p in range(3)]
    state, events, sent = feed(setup, keys, 0, to_c0)
    consumes = [e for e in events if isinstance(e, Consume)]
    assert consumes == [Consume(0, V)]
    assert state.phase == "consumed"
    # one report on consuming, one more for the third producer
    assert len(sent) == 2
    assert all(s is not None for s in sent[-1].correctproducers)
    assert sent[-1].correcthashvec == hv


def test_consumer_drops_duplicates_and_wrong_kind():
    keys, setup = world()
    msgs, _ = outbox(setup, keys)
    m = msgs[0][0]
    _, events, _ = feed(setup, keys, 0, [m, m])
    assert Drop("sender not in missing") in events
    flipped = replace(m, kind=SUMMARY, block=None)
    _, events, _ = feed(setup, keys, 0, [flipped])
    assert events == [Drop("sender/prodset guard")]


def test_consumer_drops_bad_signature_and_bad_block():
    keys, setup = world()
    msgs, _ = outbox(setup, keys)
    m = msgs[0][0]
    forged = replace(m, signature=msgs[1][0].signature)
    _, events, _ = feed(setup, keys, 0, [forged])
    assert events == [Drop("bad signature")]
    corrupt = replace(m, block=b"\x00" * len(m.block))
    state, events, _ = feed(setup, keys, 0, [corrupt])
    assert events == [Drop("hash mismatch")]
    assert 0 not in state.missing


def test_skip_decode_variant_never_consumes():
    from nbart.protocol import Variant

    keys, setup = world()
    msgs, _ = outbox(setup, keys)
    setup = replace(setup, variant=Variant(skip_decode=True))
    _, events, sent = feed(setup, keys, 0, [msgs[p][0] for p in range(3)])
    assert not any(isinstance(e, Consume) for e in events)
    assert sent == []


def test_observer_overwrites_and_certifies():
    keys, setup = world()
    msgs, _ = outbox(setup, keys)
    _, _, sent = feed(setup, keys, 0, [msgs[p][0] for p in range(3)])
    ev = initial_evidence(PR)
    for r in sent:
        step = to_on_report(ev, r, setup.registry)
        ev = step.state
        assert type(step.events[0]).__name__ == "Certify"
    assert ev[0].producers == sent[-1].correctproducers and ev[1] is None
    bad = replace(sent[0], correctproducers=(None, None, None))
    assert to_on_report(ev, bad, setup.registry).events == [Drop("bad signature")]


def test_serialization_is_canonical():
    keys, setup = world()
    msgs, _ = outbox(setup, keys)
    m = msgs[0][0]
    assert serialize(m) == serialize(replace(m))
    assert serialize(m) != serialize(msgs[0][1])
    f = field_bits(m)
    assert f["block"] == 8 * len(m.block)
    assert f["hashes"] == 3 * 256 and f["signature"] == 256
    assert sum(f.values()) == 8 * len(serialize(m))

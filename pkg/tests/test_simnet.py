from dataclasses import replace

import pytest

from nbart.agents import Agent, Send
from nbart.crypto import TO, Node
from nbart.errors import InvalidParams, NonQuiescent
from nbart.protocol import ProtocolMessage
from nbart.simnet import POLICIES, SchedulePolicy, execute, export_text, observable_behavior, run


def test_fault_free_event_counts(small):
    t = run(small, 0)
    sends = [e for e in t.events if e.kind == "send"]
    pc = [e for e in sends if e.msg.receiver.role == "C"]
    assert len(pc) == 6
    assert len([e for e in t.events if e.kind == "consume"]) == 2
    assert any(e.kind == "certify" for e in t.events)
    assert len([e for e in t.events if e.kind == "deliver"]) == len(sends)


@pytest.mark.parametrize("policy", POLICIES)
def test_same_seed_same_trace(small, policy):
    sc = replace(small, byzantine={Node("P", 1): "LATE_FLOOD", Node("C", 0): "FALSE_REPORT"})
    assert export_text(run(sc, 7, policy)) == export_text(run(sc, 7, policy))


def test_seeds_change_schedules(small):
    texts = {export_text(run(small, s)) for s in range(5)}
    assert len(texts) > 1


def test_links_are_fifo(medium):
    sc = replace(medium, byzantine={Node("P", 0): "LATE_FLOOD"})
    for policy in POLICIES:
        t = run(sc, 3, policy)
        order = {}
        for e in t.events:
            if e.kind == "send":
                order.setdefault((e.msg.sender, e.msg.receiver), []).append(e.wire)
        got = {}
        for e in t.events:
            if e.kind == "deliver":
                got.setdefault((e.msg.sender, e.msg.receiver), []).append(e.wire)
        assert got == order


def test_consumer_starving_delays_victim(small):
    pol = SchedulePolicy("consumer-starving", 0, n_c=2)
    t = run(small, 0, "consumer-starving")
    victim_times = [e.time for e in t.events if e.kind == "deliver" and e.actor == pol.victim]
    assert min(victim_times) > 100


def test_unknown_policy():
    with pytest.raises(InvalidParams):
        SchedulePolicy("random", 0)


class Echo(Agent):
    has_start = True

    def __init__(self, node):
        self.node = node

    def start(self):
        return [Send(ProtocolMessage("REPORT", self.node, self.node, None))]

    def deliver(self, msg):
        return [Send(msg)]


def test_runaway_agents_raise():
    n = Node("C", 0)
    with pytest.raises(NonQuiescent):
        execute({n: Echo(n)}, SchedulePolicy("fifo", 0), max_events=500)


def test_observable_behavior_counts_member_deliveries(small):
    t = run(small, 0)
    phi = observable_behavior(t, [Node("P", 0)], Node("C", 1))
    assert sum(phi.values()) == 1
    at_to = observable_behavior(t, [Node("P", 0), Node("C", 0)], TO)
    kinds = sorted(k[0] for k in at_to.elements())
    assert kinds.count("produce") == 1 and kinds.count("consume") == 1
    with pytest.raises(InvalidParams):
        observable_behavior(t, [TO], TO)


def test_export_line_format(small):
    line = export_text(run(small, 0)).splitlines()[2]
    seq, kind, sender, receiver, msgkind, length, digest = line.split()
    assert kind == "send" and msgkind == "BLOCK" and len(digest) == 8 and int(length) > 0

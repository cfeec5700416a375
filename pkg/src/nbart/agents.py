"""Actors driven by the simulator.

An agent reacts to its start signal and to deliveries by returning a list of
actions: ``Send`` and ``Share`` for outgoing messages, and protocol events
(``Produce``, ``Consume``, ...) to be recorded in the trace.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

from .codec import ValuePayload
from .crypto import TO, Keypair, Node
from .protocol import (
    ConsumerState,
    ProducerState,
    ProtocolMessage,
    Setup,
    consumer_on_message,
    initial_evidence,
    producer_on_produce,
    to_on_report,
)


class Send(NamedTuple):
    msg: ProtocolMessage
    payer: Optional[Node] = None
    extra_delay: float = 0.0


class Share(NamedTuple):
    """Hand a message to a coalition peer without using the network."""

    msg: ProtocolMessage


def sends(messages, **kw) -> list:
    return [Send(m, **kw) for m in messages]


class Agent:
    node: Node
    has_start = False

    def start(self) -> list:
        return []

    def deliver(self, msg: ProtocolMessage) -> list:
        return []

    @property
    def state(self):
        return None


class HonestProducer(Agent):
    has_start = True

    def __init__(self, node: Node, setup: Setup, keys: Keypair, value: ValuePayload):
        self.node, self.setup, self.keys, self.value = node, setup, keys, value
        self._state = ProducerState()

    def start(self) -> list:
        step = producer_on_produce(self._state, self.node.index, self.value, self.setup, self.keys)
        self._state = step.state
        return step.events + sends(step.messages)

    @property
    def state(self):
        return self._state


class HonestConsumer(Agent):
    def __init__(self, node: Node, setup: Setup, keys: Keypair):
        self.node, self.setup, self.keys = node, setup, keys
        self._state = ConsumerState.initial(setup.params)

    def step(self, msg: ProtocolMessage):
        step = consumer_on_message(self._state, self.node.index, msg, self.setup, self.keys)
        self._state = step.state
        return step

    def deliver(self, msg: ProtocolMessage) -> list:
        step = self.step(msg)
        return step.events + sends(step.messages)

    @property
    def state(self):
        return self._state


class TrustedObserver(Agent):
    def __init__(self, setup: Setup):
        self.node = TO
        self.setup = setup
        self._evidence = initial_evidence(setup.params)

    def deliver(self, msg: ProtocolMessage) -> list:
        step = to_on_report(self._evidence, msg, self.setup.registry)
        self._evidence = step.state
        return step.events

    @property
    def state(self):
        return self._evidence

"""Scenario files: an INI document with one section per scenario field.

Unknown sections and keys are rejected, since a typo in a game experiment
would otherwise silently change which claim is being checked.

Example::

    [params]
    n_p = 5
    n_c = 3
    f_p = 1
    f_c = 1
    b = 2

    [value]
    size = 64
    seed = 7

    [byzantine]
    p4 = SILENT

    [schedule]
    policies = uniform-random fifo
    seeds = 0..9
"""

from __future__ import annotations

import configparser
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple

from .behaviors import BYZANTINE_BY_ID, DEVIATIONS_BY_ID, CoalitionSpec, byzantine_catalog
from .codec import ValuePayload
from .crypto import DEFAULT_HASH_BITS, DEFAULT_SIG_BITS, Node
from .errors import InvalidParams
from .game import CostModel
from .simnet import POLICIES
from .topology import Params

_SCHEMA = {
    "scenario": {"name", "regime", "expect_failure"},
    "params": {"n_p", "n_c", "f_p", "f_c", "b", "omega", "nt_p", "nt_c"},
    "value": {"hex", "text", "size", "seed", "bit_length"},
    "byzantine": None,  # identity = behaviour, or the sweep keys below
    "coalitions": None,  # name = members : behaviour
    "schedule": {"policies", "seeds"},
    "costs": {"beta_p", "beta_c", "cost_per_message", "cost_per_bit", "local_compute_cost"},
    "crypto": {"hash_bits", "sig_bits", "key_seed"},
    "game": {"singletons", "policies", "seeds", "producer_behaviors", "consumer_behaviors", "deviations"},
}


@dataclass(frozen=True)
class Scenario:
    params: Params
    value: ValuePayload
    byzantine: Dict[Node, str] = field(default_factory=dict)
    coalitions: Tuple[CoalitionSpec, ...] = ()
    policies: Tuple[str, ...] = ("uniform-random",)
    seeds: Tuple[int, ...] = (0,)
    costs: CostModel = CostModel()
    hash_bits: int = DEFAULT_HASH_BITS
    sig_bits: int = DEFAULT_SIG_BITS
    key_seed: bytes = b"nbart"
    name: str = "scenario"
    regime: str = "correctness"
    expect_failure: bool = False
    byzantine_sweep: bool = False
    producer_behaviors: Tuple[str, ...] = tuple(b.id for b in byzantine_catalog("P"))
    consumer_behaviors: Tuple[str, ...] = tuple(b.id for b in byzantine_catalog("C"))
    singletons: bool = False
    game_policies: Tuple[str, ...] = ("uniform-random", "fifo")
    game_seeds: Tuple[int, ...] = (0,)
    deviations: Tuple[str, ...] = tuple(DEVIATIONS_BY_ID)

    def __hash__(self) -> int:
        return hash((self.params, self.value, self.name))

    def problems(self, simultaneous: bool = True) -> List[str]:
        """Everything wrong with the scenario.  ``simultaneous`` means the
        coalitions act in the same runs and so must be disjoint."""
        pr = self.params
        out = [f"params: {v}" for v in pr.violations(self.regime)]
        if self.value.bit_length <= pr.b:
            out.append("value: B < l_v")
        if self.hash_bits % 8 or self.sig_bits % 8 or self.hash_bits <= 0 or self.sig_bits <= 0:
            out.append("crypto: hash_bits and sig_bits must be positive multiples of 8")
        for n, b in self.byzantine.items():
            if not _in_range(n, pr):
                out.append(f"byzantine: unknown identity {n}")
            beh = BYZANTINE_BY_ID.get(b)
            if beh is None:
                out.append(f"byzantine: unknown behaviour {b!r}")
            elif n.role not in beh.roles:
                out.append(f"byzantine: {b} does not apply to {n}")
        bp = sum(n.role == "P" for n in self.byzantine)
        bc = sum(n.role == "C" for n in self.byzantine)
        if bp > pr.f_p or bc > pr.f_c:
            out.append("byzantine: more Byzantine players than F_P/F_C allow")
        for ids, role in ((self.producer_behaviors, "P"), (self.consumer_behaviors, "C")):
            for b in ids:
                if b not in BYZANTINE_BY_ID or role not in BYZANTINE_BY_ID[b].roles:
                    out.append(f"byzantine: {b!r} is not a {role} behaviour")
        seen: set = set()
        for spec in self.coalitions:
            for m in spec.members:
                if not _in_range(m, pr) or m.role == "TO":
                    out.append(f"coalitions: bad member {m}")
                if m in seen and simultaneous:
                    out.append(f"coalitions: {m} is in two coalitions")
                if m in self.byzantine:
                    out.append(f"coalitions: {m} is Byzantine")
                seen.add(m)
            if len(spec.producers) > pr.nt_p or len(spec.consumers) > pr.nt_c:
                out.append(f"coalitions: {spec.label()} exceeds Nt_P/Nt_C")
            if spec.behavior not in DEVIATIONS_BY_ID:
                out.append(f"coalitions: unknown behaviour {spec.behavior!r}")
        for d in self.deviations:
            if d not in DEVIATIONS_BY_ID:
                out.append(f"game: unknown deviation {d!r}")
        for p in self.policies + self.game_policies:
            if p not in POLICIES:
                out.append(f"schedule: unknown policy {p!r}")
        return out

    def validate(self, simultaneous: bool = True) -> "Scenario":
        bad = self.problems(simultaneous)
        if bad:
            raise InvalidParams("; ".join(bad))
        return self

    def with_seeds(self, seeds: Sequence[int]) -> "Scenario":
        return replace(self, seeds=tuple(seeds))


def _in_range(n: Node, pr: Params) -> bool:
    if n.role == "P":
        return 0 <= n.index < pr.n_p
    if n.role == "C":
        return 0 <= n.index < pr.n_c
    return n.role == "TO"


def parse_seeds(text: str) -> Tuple[int, ...]:
    """``"0..9"`` (inclusive), ``"3"`` or ``"1 4 9"``."""
    out: List[int] = []
    for part in text.replace(",", " ").split():
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out:
        raise InvalidParams("empty seed list")
    return tuple(out)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise InvalidParams(f"not a boolean: {text!r}")


def _value(sec) -> ValuePayload:
    kinds = [k for k in ("hex", "text", "size") if k in sec]
    if len(kinds) != 1:
        raise InvalidParams("value: give exactly one of hex, text or size")
    if "hex" in sec:
        data = bytes.fromhex(sec["hex"])
    elif "text" in sec:
        data = sec["text"].encode()
    else:
        data = random.Random(int(sec.get("seed", "0"))).randbytes(int(sec["size"]))
    return ValuePayload(data, int(sec.get("bit_length", 8 * len(data))))


def loads(text: str) -> Scenario:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str  # keep identity names as written
    cp.read_string(text)
    for section in cp.sections():
        if section not in _SCHEMA:
            raise InvalidParams(f"unknown section [{section}]")
        allowed = _SCHEMA[section]
        if allowed is not None:
            extra = set(cp[section]) - allowed
            if extra:
                raise InvalidParams(f"unknown keys in [{section}]: {', '.join(sorted(extra))}")
    if "params" not in cp:
        raise InvalidParams("missing [params] section")
    p = cp["params"]
    try:
        params = Params(
            n_p=int(p["n_p"]), n_c=int(p["n_c"]), f_p=int(p["f_p"]), f_c=int(p["f_c"]), b=int(p["b"]),
            omega=int(p.get("omega", "8")), nt_p=int(p.get("nt_p", "1")), nt_c=int(p.get("nt_c", "1")),
        )
    except KeyError as e:
        raise InvalidParams(f"missing key in [params]: {e.args[0]}") from None
    kw: dict = {"params": params}
    if "value" not in cp:
        raise InvalidParams("missing [value] section")
    kw["value"] = _value(cp["value"])
    if "scenario" in cp:
        s = cp["scenario"]
        kw["name"] = s.get("name", "scenario")
        kw["regime"] = s.get("regime", "correctness")
        if kw["regime"] not in ("basic", "correctness", "game"):
            raise InvalidParams(f"unknown regime {kw['regime']!r}")
        kw["expect_failure"] = _bool(s.get("expect_failure", "false"))
    if "byzantine" in cp:
        byz = {}
        for key, val in cp["byzantine"].items():
            if key == "sweep":
                kw["byzantine_sweep"] = _bool(val)
            elif key == "producer_behaviors":
                kw["producer_behaviors"] = tuple(val.split())
            elif key == "consumer_behaviors":
                kw["consumer_behaviors"] = tuple(val.split())
            else:
                try:
                    byz[Node.parse(key)] = val.strip()
                except ValueError as e:
                    raise InvalidParams(f"[byzantine]: {e}") from None
        kw["byzantine"] = byz
    if "coalitions" in cp:
        specs = []
        for name, val in cp["coalitions"].items():
            members, _, behavior = val.partition(":")
            try:
                nodes = tuple(Node.parse(m) for m in members.split())
            except ValueError as e:
                raise InvalidParams(f"[coalitions] {name}: {e}") from None
            specs.append(CoalitionSpec(nodes, behavior.strip() or "HONEST", name))
        kw["coalitions"] = tuple(specs)
    if "schedule" in cp:
        s = cp["schedule"]
        if "policies" in s:
            kw["policies"] = tuple(s["policies"].split())
        if "seeds" in s:
            kw["seeds"] = parse_seeds(s["seeds"])
    if "costs" in cp:
        kw["costs"] = CostModel(**{k: float(v) for k, v in cp["costs"].items()})
    if "crypto" in cp:
        c = cp["crypto"]
        kw["hash_bits"] = int(c.get("hash_bits", DEFAULT_HASH_BITS))
        kw["sig_bits"] = int(c.get("sig_bits", DEFAULT_SIG_BITS))
        if "key_seed" in c:
            kw["key_seed"] = c["key_seed"].encode()
    if "game" in cp:
        g = cp["game"]
        if "singletons" in g:
            kw["singletons"] = _bool(g["singletons"])
        if "policies" in g:
            kw["game_policies"] = tuple(g["policies"].split())
        if "seeds" in g:
            kw["game_seeds"] = parse_seeds(g["seeds"])
        if "producer_behaviors" in g:
            kw["producer_behaviors"] = tuple(g["producer_behaviors"].split())
        if "consumer_behaviors" in g:
            kw["consumer_behaviors"] = tuple(g["consumer_behaviors"].split())
        if "deviations" in g:
            kw["deviations"] = tuple(g["deviations"].split())
    return Scenario(**kw)


def load(path) -> Scenario:
    return loads(Path(path).read_text())


def sweep_assignments(scenario: Scenario, seed: int) -> Iterator[Dict[Node, str]]:
    """Full-budget Byzantine assignments for one seed.

    Identities are drawn from the seed; every (producer behaviour, consumer
    behaviour) pair is then applied jointly to F_P producers and F_C consumers.
    """
    pr = scenario.params
    rng = random.Random(f"byz/{seed}")
    producers = sorted(rng.sample(range(pr.n_p), pr.f_p))
    consumers = sorted(rng.sample(range(pr.n_c), min(pr.f_c, pr.n_c)))
    pb = scenario.producer_behaviors if producers else ("-",)
    cb = scenario.consumer_behaviors if consumers else ("-",)
    for bp in pb:
        for bc in cb:
            byz = {Node("P", i): bp for i in producers}
            byz.update({Node("C", j): bc for j in consumers})
            yield byz

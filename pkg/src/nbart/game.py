"""Utilities, worst-case expected utility, and the cotolerance check.

The worst case over Byzantine players is taken over a finite grid: every
subset of at most F_P producers and F_C consumers outside the coalition under
test, every assignment of catalog behaviours to them, and a small set of
schedules.  Results are therefore exact over that grid and an upper bound on
the true worst case.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations, product
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .crypto import Node
from .errors import EnumerationBudgetExceeded, InvalidParams
from .evidence import Judge

ORACLES = (
    "validity",
    "integrity",
    "agreement",
    "eventual_consumption",
    "evidence",
    "producer_certification",
    "consumer_certification",
)


@dataclass(frozen=True)
class CostModel:
    beta_p: float = 100.0
    beta_c: float = 100.0
    cost_per_message: float = 1.0
    cost_per_bit: float = 0.001
    local_compute_cost: float = 5.0

    def __post_init__(self):
        if min(self.cost_per_message, self.cost_per_bit, self.local_compute_cost) < 0:
            raise InvalidParams("costs must be non-negative")

    def check_benefits(self, fault_free) -> None:
        """Require each benefit to exceed the fault-free cost of its role."""
        ledger = utility(fault_free, self)
        for n, cost in ledger.cost.items():
            beta = self.beta_p if n.role == "P" else self.beta_c
            if beta <= cost:
                raise InvalidParams(f"benefit for {n} ({beta}) does not exceed its fault-free cost ({cost:g})")


def _partition(coalitions) -> Dict[Node, int]:
    out = {}
    for k, spec in enumerate(coalitions):
        for m in getattr(spec, "members", spec):
            out[m] = k
    return out


# -- single-run accounting ----------------------------------------------------


@dataclass
class UtilityLedger:
    benefit: Dict[Node, float]
    cost: Dict[Node, float]

    def u(self, n: Node) -> float:
        return self.benefit[n] - self.cost[n]

    def as_dict(self) -> dict:
        return {str(n): {"benefit": self.benefit[n], "cost": round(self.cost[n], 9), "u": round(self.u(n), 9)}
                for n in sorted(self.benefit)}


def predicates(trace, judge: Optional[Judge] = None) -> Tuple[Dict[Node, bool], object]:
    """hasProd/hasAck for every player on the final evidence."""
    judge = judge or Judge(trace.setup, trace.hv, trace.value)
    sets = judge.cert_sets(trace.evidence, trace.consume_log(), trace.produced())
    pr = trace.setup.params
    out = {Node("P", p): judge.has_prod(sets, p) for p in range(pr.n_p)}
    out.update({Node("C", c): judge.has_ack(sets, c) for c in range(pr.n_c)})
    return out, sets


def utility(trace, costs: CostModel, coalitions: Optional[Iterable] = None) -> UtilityLedger:
    part = _partition(trace.coalitions if coalitions is None else coalitions)
    preds, _ = predicates(trace)
    benefit = {n: (costs.beta_p if n.role == "P" else costs.beta_c) if ok else 0.0 for n, ok in preds.items()}
    cost = {n: 0.0 for n in preds}
    for e in trace.events:
        if e.kind == "send":
            sender, receiver = e.msg.sender, e.msg.receiver
            if sender in part and part.get(receiver) == part[sender]:
                continue
            cost[e.payer] += costs.cost_per_message + 8 * len(e.wire) * costs.cost_per_bit
        elif e.kind == "encode":
            cost[e.actor] += costs.local_compute_cost
    return UtilityLedger(benefit, cost)


# -- the seven transfer properties ---------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    passed: bool
    witness: str = ""


@dataclass
class OracleReport:
    results: Dict[str, OracleResult]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failed(self) -> List[str]:
        return [k for k in ORACLES if not self.results[k].passed]

    def as_dict(self) -> dict:
        return {k: {"passed": r.passed, "witness": r.witness} for k, r in self.results.items()}


def nbart_oracles(trace, judge: Optional[Judge] = None) -> OracleReport:
    pr = trace.setup.params
    judge = judge or Judge(trace.setup, trace.hv, trace.value)
    byz = trace.byzantine
    honest_c = [c for c in range(pr.n_c) if Node("C", c) not in byz]
    honest_p = [p for p in range(pr.n_p) if Node("P", p) not in byz]
    consumed: Dict[int, list] = {c: [] for c in honest_c}
    for e in trace.events:
        if e.kind == "consume" and e.detail.consumer in consumed:
            consumed[e.detail.consumer].append(e.detail.value)
    res: Dict[str, OracleResult] = {}

    bad = [c for c in honest_c if any(v != trace.value for v in consumed[c])]
    res["validity"] = OracleResult(not bad, f"c{bad[0]} consumed a value nobody produced" if bad else "")
    bad = [c for c in honest_c if len(consumed[c]) > 1]
    res["integrity"] = OracleResult(not bad, f"c{bad[0]} consumed {len(consumed[bad[0]])} times" if bad else "")
    values = {v for c in honest_c for v in consumed[c]}
    res["agreement"] = OracleResult(len(values) <= 1, "" if len(values) <= 1 else f"{len(values)} distinct values consumed")
    bad = [c for c in honest_c if not consumed[c]]
    res["eventual_consumption"] = OracleResult(not bad, f"c{bad[0]} never consumed" if bad else "")

    final = judge.cert_sets(trace.evidence, trace.consume_log(), trace.produced())
    bad_p = [p for p in honest_p if not judge.has_prod(final, p)]
    bad_c = [c for c in honest_c if not judge.has_ack(final, c)]
    res["producer_certification"] = OracleResult(not bad_p, f"hasProd(p{bad_p[0]}) is false" if bad_p else "")
    res["consumer_certification"] = OracleResult(not bad_c, f"hasAck(c{bad_c[0]}) is false" if bad_c else "")
    res["evidence"] = _evidence_oracle(trace, judge, honest_p, honest_c)
    return OracleReport({k: res[k] for k in ORACLES})


def _evidence_oracle(trace, judge: Judge, honest_p, honest_c) -> OracleResult:
    """Some certify event carries evidence on which every honest predicate holds."""
    certs = [e for e in trace.events if e.kind == "certify"]
    if not certs:
        return OracleResult(False, "no certify event")
    # the last certify is the likeliest to satisfy everything, so scan backwards
    for e in reversed(certs):
        sets = judge.cert_sets(e.detail.evidence, trace.consume_log(e.seq), trace.produced(e.seq))
        if all(judge.has_prod(sets, p) for p in honest_p) and all(judge.has_ack(sets, c) for c in honest_c):
            return OracleResult(True, f"certify at seq {e.seq}")
    return OracleResult(False, f"none of {len(certs)} certify events satisfies every honest predicate")


# -- worst case over Byzantine players -----------------------------------------


def byzantine_configs(
    params,
    exclude: Iterable[Node] = (),
    producer_behaviors: Sequence[str] = (),
    consumer_behaviors: Sequence[str] = (),
) -> Iterator[Dict[Node, str]]:
    """Every identity subset within the F budgets (avoiding ``exclude``) times
    every per-identity behaviour assignment.  The empty assignment comes first."""
    ex = set(exclude)
    ps = [Node("P", i) for i in range(params.n_p) if Node("P", i) not in ex]
    cs = [Node("C", j) for j in range(params.n_c) if Node("C", j) not in ex]

    def side(nodes, budget, behaviors):
        out = [{}]
        if not behaviors:
            return out
        for k in range(1, budget + 1):
            for ids in combinations(nodes, k):
                for bs in product(behaviors, repeat=k):
                    out.append(dict(zip(ids, bs)))
        return out

    for bp in side(ps, params.f_p, producer_behaviors):
        for bc in side(cs, params.f_c, consumer_behaviors):
            yield {**bp, **bc}


@dataclass(frozen=True)
class Cell:
    byzantine: Tuple[Tuple[Node, str], ...]
    seed: int
    policy: str

    def label(self) -> str:
        byz = ",".join(f"{n}={b}" for n, b in self.byzantine) or "none"
        return f"byz[{byz}] {self.policy}/{self.seed}"


def grid(scenario, exclude: Iterable[Node] = ()) -> List[Cell]:
    configs = byzantine_configs(scenario.params, exclude, scenario.producer_behaviors, scenario.consumer_behaviors)
    return [
        Cell(tuple(sorted(b.items())), seed, policy)
        for b in configs
        for policy in scenario.game_policies
        for seed in scenario.game_seeds
    ]


@dataclass
class ExpectedUtilityReport:
    u_bar: Dict[Node, float]
    argmin: Dict[Node, Cell]
    cells: int
    partial: bool = False

    def as_dict(self) -> dict:
        return {
            "partial": self.partial,
            "cells": self.cells,
            "players": {str(n): {"u_bar": round(self.u_bar[n], 9), "argmin": self.argmin[n].label()}
                        for n in sorted(self.u_bar)},
        }


class Runner:
    """Runs scenario cells, caching the ones that do not involve a deviation."""

    def __init__(self, scenario):
        from .simnet import run

        self._run = run
        self.scenario = replace(scenario, byzantine={}, coalitions=())
        self._honest: dict = {}
        self.runs = 0

    def trace(self, cell: Cell, coalition=None):
        honest = coalition is None or coalition.behavior == "HONEST"
        if honest and cell in self._honest:
            return self._honest[cell]
        sc = replace(self.scenario, byzantine=dict(cell.byzantine),
                     coalitions=() if coalition is None else (coalition,))
        t = self._run(sc, cell.seed, cell.policy)
        self.runs += 1
        if honest:
            self._honest[cell] = t
        return t


def expected_utility(
    scenario,
    coalition=None,
    costs: Optional[CostModel] = None,
    *,
    players: Optional[Sequence[Node]] = None,
    max_runs: int = 50_000,
    runner: Optional[Runner] = None,
) -> ExpectedUtilityReport:
    """ū for ``players`` (default: the coalition members, else everyone)
    under ``coalition``'s behaviour, minimised over the Byzantine grid.

    Byzantine identities are drawn from outside ``players``, since a
    Byzantine player has no utility of its own.
    """
    costs = costs or scenario.costs
    runner = runner or Runner(scenario)
    if players is None:
        players = list(coalition.members) if coalition is not None else [
            n for n in _players(scenario.params)]
    if coalition is None:
        cells = grid(scenario)
    else:
        cells = grid(scenario, exclude=players)
    u_bar: Dict[Node, float] = {}
    argmin: Dict[Node, Cell] = {}
    partial = len(cells) > max_runs
    for cell in cells[:max_runs]:
        t = runner.trace(cell, coalition)
        led = utility(t, costs, () if coalition is None else (coalition,))
        for n in players:
            if n in t.byzantine:
                continue
            u = led.u(n)
            if n not in u_bar or u < u_bar[n]:
                u_bar[n], argmin[n] = u, cell
    rep = ExpectedUtilityReport(u_bar, argmin, min(len(cells), max_runs), partial)
    if partial:
        raise EnumerationBudgetExceeded(f"{len(cells)} cells exceed the budget of {max_runs}; result is an upper bound", rep)
    return rep


def _players(params) -> List[Node]:
    return [Node("P", i) for i in range(params.n_p)] + [Node("C", j) for j in range(params.n_c)]


# -- cotolerance -----------------------------------------------------------------


@dataclass
class CotoleranceRow:
    coalition: str
    deviation: str
    claimed_compliant: bool
    compliant: bool
    cells: int
    min_benefit: Dict[str, float]
    u_bar: Dict[str, float]
    u_bar_honest: Dict[str, float]
    oracles_ok: bool
    verdict: bool
    witness: str = ""

    def as_dict(self) -> dict:
        return {
            "coalition": self.coalition,
            "deviation": self.deviation,
            "claimed_compliant": self.claimed_compliant,
            "compliant": self.compliant,
            "cells": self.cells,
            "min_benefit": self.min_benefit,
            "u_bar": self.u_bar,
            "u_bar_honest": self.u_bar_honest,
            "oracles_ok": self.oracles_ok,
            "verdict": self.verdict,
            "witness": self.witness,
        }


@dataclass
class CotoleranceResult:
    verdict: bool
    rows: List[CotoleranceRow]
    nash: Optional[bool]
    runs: int = 0
    caveat: str = "worst case taken over the Byzantine catalog and the listed schedules only"

    def failing(self) -> List[CotoleranceRow]:
        return [r for r in self.rows if not r.verdict]

    def as_dict(self) -> dict:
        return {"verdict": self.verdict, "nash": self.nash, "runs": self.runs, "caveat": self.caveat,
                "rows": [r.as_dict() for r in self.rows]}


def singleton_coalitions(params):
    from .behaviors import CoalitionSpec

    return [CoalitionSpec((n,)) for n in _players(params)]


def check_cotolerance(
    scenario,
    coalitions: Optional[Sequence] = None,
    deviations: Optional[Sequence[str]] = None,
    costs: Optional[CostModel] = None,
    *,
    singletons: Optional[bool] = None,
) -> CotoleranceResult:
    """Check every applicable catalog deviation of every coalition.

    Compliant deviations must keep all seven properties and pay members in
    full.  Non-compliant ones must leave every member with zero worst-case
    benefit and ū ≤ 0 < ū(honest).  The measured compliance of each deviation
    must also match its catalog claim.
    """
    from .behaviors import DEVIATIONS_BY_ID, CoalitionSpec, check_compliance

    costs = costs or scenario.costs
    singletons = scenario.singletons if singletons is None else singletons
    if coalitions is None:
        coalitions = singleton_coalitions(scenario.params) if singletons else scenario.coalitions
    deviations = list(deviations or scenario.deviations)
    runner = Runner(scenario)
    setup_probe = runner.trace(Cell((), scenario.game_seeds[0], scenario.game_policies[0])).setup
    rows: List[CotoleranceRow] = []
    nash = True
    for spec in coalitions:
        members = tuple(spec.members)
        cells = grid(scenario, exclude=members)
        honest_spec = CoalitionSpec(members, "HONEST", spec.name)
        part = (honest_spec,)
        u_hon = _min_utility(runner, cells, honest_spec, costs, members, part)
        for dev_id in deviations:
            dev = DEVIATIONS_BY_ID[dev_id]
            if not dev.applicable(members, setup_probe):
                continue
            dspec = CoalitionSpec(members, dev_id, spec.name)
            compliant = True
            comp_witness = ""
            oracles_ok = True
            oracle_witness = ""
            min_benefit = {m: float("inf") for m in members}
            u_bar = {m: float("inf") for m in members}
            for cell in cells:
                base = runner.trace(cell, honest_spec)
                t = runner.trace(cell, dspec)
                c = check_compliance(t, base, members)
                if not c.compliant and compliant:
                    compliant, comp_witness = False, f"{c.witness} observes a difference in {cell.label()}"
                led = utility(t, costs, part)
                for m in members:
                    min_benefit[m] = min(min_benefit[m], led.benefit[m])
                    u_bar[m] = min(u_bar[m], led.u(m))
                if dev.compliant and oracles_ok:
                    rep = nbart_oracles(t)
                    if not rep.all_passed:
                        k = rep.failed()[0]
                        oracles_ok, oracle_witness = False, f"{k}: {rep.results[k].witness} in {cell.label()}"
            full = {m: costs.beta_p if m.role == "P" else costs.beta_c for m in members}
            problems = []
            if compliant != dev.compliant:
                problems.append(f"measured compliance {compliant} differs from catalog claim" +
                                (f" ({comp_witness})" if comp_witness else ""))
            if dev.compliant:
                if not oracles_ok:
                    problems.append(oracle_witness)
                short = [m for m in members if min_benefit[m] < full[m]]
                if short:
                    problems.append(f"{short[0]} earns less than its full benefit")
            else:
                rich = [m for m in members if min_benefit[m] != 0]
                if rich:
                    problems.append(f"{rich[0]} keeps benefit {min_benefit[rich[0]]:g}")
                bad = [m for m in members if not (u_bar[m] <= 0 < u_hon[m])]
                if bad:
                    m = bad[0]
                    problems.append(f"{m}: u_bar {u_bar[m]:g} vs honest {u_hon[m]:g}")
            if any(u_bar[m] > u_hon[m] + 1e-9 for m in members):
                nash = False
                if singletons:
                    problems.append("a unilateral deviation beats the honest profile")
            rows.append(CotoleranceRow(
                coalition=spec.label(),
                deviation=dev_id,
                claimed_compliant=dev.compliant,
                compliant=compliant,
                cells=len(cells),
                min_benefit={str(m): min_benefit[m] for m in members},
                u_bar={str(m): round(u_bar[m], 9) for m in members},
                u_bar_honest={str(m): round(u_hon[m], 9) for m in members},
                oracles_ok=oracles_ok,
                verdict=not problems,
                witness="; ".join(problems) or comp_witness,
            ))
    verdict = all(r.verdict for r in rows) and bool(rows)
    return CotoleranceResult(verdict, rows, nash if singletons else None, runner.runs)


def _min_utility(runner: Runner, cells, spec, costs, members, part) -> Dict[Node, float]:
    out = {m: float("inf") for m in members}
    for cell in cells:
        led = utility(runner.trace(cell, spec), costs, part)
        for m in members:
            out[m] = min(out[m], led.u(m))
    return out

"""Conformance checks: each one states a property of the algorithm and runs
it over reference scenarios with many seeds, schedules and Byzantine fills.

Trace checks run on every trace of the correctness sweep.  Coalition checks
run on the game scenario.  A ``Variant`` can be passed to run the trace
checks against a deliberately broken protocol.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence

from .behaviors import CoalitionSpec, DEVIATIONS_BY_ID, check_compliance
from .codec import ValuePayload
from .crypto import TO, Node
from .evidence import Judge, epsilon_view
from .game import Cell, Runner, check_cotolerance, grid, nbart_oracles
from .protocol import Variant
from .scenario import Scenario, sweep_assignments
from .simnet import POLICIES, observable_behavior, run
from .topology import Params

REFERENCE_PARAMS = (
    Params(n_p=3, n_c=2, f_p=1, f_c=1, b=2),
    Params(n_p=5, n_c=3, f_p=2, f_c=2, b=3),
    Params(n_p=7, n_c=4, f_p=3, f_c=3, b=4),
)
GAME_PARAMS = Params(n_p=5, n_c=4, f_p=1, f_c=1, b=2, nt_p=2, nt_c=2)
REFERENCE_VALUE = ValuePayload(bytes(range(64)))


def reference_scenarios() -> List[Scenario]:
    return [Scenario(p, REFERENCE_VALUE, name=f"ref-{p.n_p}-{p.n_c}") for p in REFERENCE_PARAMS]


def game_scenario() -> Scenario:
    P, C = (lambda i: Node("P", i)), (lambda j: Node("C", j))
    coalitions = (
        CoalitionSpec((P(0), P(1)), name="pp"),
        CoalitionSpec((C(0), C(1)), name="cc"),
        CoalitionSpec((P(0), C(0)), name="pc"),
        CoalitionSpec((P(2), P(3), C(2), C(3)), name="ppcc"),
    )
    return Scenario(GAME_PARAMS, REFERENCE_VALUE, coalitions=coalitions, regime="game", name="game")


@dataclass
class CheckResult:
    name: str
    description: str
    passed: bool = True
    runs: int = 0
    witness: str = ""
    witness_trace: object = field(default=None, repr=False)

    def fail(self, why: str, trace=None) -> None:
        if self.passed:
            self.passed, self.witness, self.witness_trace = False, why, trace


# -- trace checks ----------------------------------------------------------------


def _honest_consumers(trace) -> List[int]:
    return [c for c in range(trace.setup.params.n_c) if Node("C", c) not in trace.byzantine]


def _honest_producers(trace) -> List[int]:
    return [p for p in range(trace.setup.params.n_p) if Node("P", p) not in trace.byzantine]


def check_hashvec(trace) -> Optional[str]:
    for c in _honest_consumers(trace):
        chv = trace.final_states[Node("C", c)].correcthashvec
        if chv is not None and chv != trace.hv:
            return f"c{c} settled on a hash vector that is not the encoding of the produced value"
        if chv is None:
            return f"c{c} never settled on a hash vector"
    return None


def check_single_consume(trace) -> Optional[str]:
    counts = {c: 0 for c in _honest_consumers(trace)}
    for e in trace.of_kind("consume"):
        if e.detail.consumer in counts:
            counts[e.detail.consumer] += 1
    for c, n in counts.items():
        if n != 1:
            return f"c{c} consumed {n} times"
    return None


def check_pairwise(trace) -> Optional[str]:
    judge = Judge(trace.setup, trace.hv, trace.value)
    for p in _honest_producers(trace):
        for c in _honest_consumers(trace):
            if not judge.certified(trace.evidence, p, c):
                return f"c{c} does not certify p{p}"
    return None


def check_set_sizes(trace) -> Optional[str]:
    pr = trace.setup.params
    judge = Judge(trace.setup, trace.hv, trace.value)
    sets = judge.cert_sets(trace.evidence, trace.consume_log(), trace.produced())
    if not sets.thresholds_met:
        return "no certified pair of sets clears both thresholds"
    if len(sets.P_bar) < pr.n_p - pr.f_p or len(sets.C_bar) < pr.n_c - pr.f_c:
        return f"certified sets too small: {len(sets.P_bar)} producers, {len(sets.C_bar)} consumers"
    return None


def check_transfer(trace) -> Optional[str]:
    rep = nbart_oracles(trace)
    if rep.all_passed:
        return None
    k = rep.failed()[0]
    return f"{k}: {rep.results[k].witness}"


TRACE_CHECKS: Dict[str, tuple] = {
    "hashvec_agreement": ("every honest consumer settles on the hash vector of the produced value", check_hashvec),
    "single_consume": ("every honest consumer consumes exactly once", check_single_consume),
    "pairwise_certification": ("every honest consumer certifies every honest producer", check_pairwise),
    "certified_set_sizes": ("certified sets reach N_P-F_P producers and N_C-F_C consumers", check_set_sizes),
    "transfer_properties": ("all seven transfer properties hold", check_transfer),
}


def sweep_cells(scenario: Scenario, seeds: Iterable[int], policies: Sequence[str] = POLICIES):
    for seed in seeds:
        for byz in sweep_assignments(scenario, seed):
            for policy in policies:
                yield byz, seed, policy


def run_trace_checks(
    scenarios: Sequence[Scenario],
    seeds: Iterable[int],
    names: Optional[Sequence[str]] = None,
    variant: Optional[Variant] = None,
    policies: Sequence[str] = POLICIES,
) -> List[CheckResult]:
    names = list(names or TRACE_CHECKS)
    results = {n: CheckResult(n, TRACE_CHECKS[n][0]) for n in names}
    seeds = list(seeds)
    for sc in scenarios:
        for byz, seed, policy in sweep_cells(sc, seeds, policies):
            t = run(replace(sc, byzantine=byz), seed, policy, variant=variant)
            for n in names:
                r = results[n]
                r.runs += 1
                if r.passed:
                    why = TRACE_CHECKS[n][1](t)
                    if why:
                        r.fail(f"{why} [{sc.name} {Cell(tuple(sorted(byz.items())), seed, policy).label()}]", t)
    return [results[n] for n in names]


# -- coalition checks ---------------------------------------------------------------


def _coalition_runs(scenario: Scenario, compliant: Optional[bool]):
    """(spec, cell, deviating trace, honest trace) for catalog deviations."""
    runner = Runner(scenario)
    setup = runner.trace(Cell((), scenario.game_seeds[0], scenario.game_policies[0])).setup
    for spec in scenario.coalitions:
        members = tuple(spec.members)
        honest = CoalitionSpec(members, "HONEST", spec.name)
        for dev_id in scenario.deviations:
            dev = DEVIATIONS_BY_ID[dev_id]
            if dev_id == "HONEST" or not dev.applicable(members, setup):
                continue
            if compliant is not None and dev.compliant != compliant:
                continue
            dspec = CoalitionSpec(members, dev_id, spec.name)
            for cell in grid(scenario, exclude=members):
                yield dspec, cell, runner.trace(cell, dspec), runner.trace(cell, honest)


def check_compliant_produce(scenario: Scenario) -> CheckResult:
    r = CheckResult("compliant_producers_produce", "coalition producers following a compliant deviation all produce")
    for spec, cell, t, base in _coalition_runs(scenario, compliant=True):
        r.runs += 1
        if not check_compliance(t, base, spec.members):
            continue
        produced = t.produced()
        for m in spec.producers:
            if m.index not in produced:
                r.fail(f"{m} in {spec.label()} / {spec.behavior} never produced [{cell.label()}]", t)
    return r


def check_observation_evidence(scenario: Scenario) -> CheckResult:
    r = CheckResult("observation_determines_evidence",
                    "equal observations at TO imply equal evidence with Byzantine entries blanked")
    everyone = [n for n in _players(scenario.params)]
    for spec, cell, t, base in _coalition_runs(scenario, compliant=None):
        r.runs += 1
        same_view = observable_behavior(t, everyone, TO) == observable_behavior(base, everyone, TO)
        if same_view and epsilon_view(t.evidence, t.byzantine) != epsilon_view(base.evidence, base.byzantine):
            r.fail(f"{spec.label()} / {spec.behavior}: TO saw the same but evidence differs [{cell.label()}]", t)
    return r


def _players(params) -> List[Node]:
    return [Node("P", i) for i in range(params.n_p)] + [Node("C", j) for j in range(params.n_c)]


def check_zero_benefit(scenario: Scenario, cotol=None) -> CheckResult:
    r = CheckResult("zero_benefit_when_non_compliant",
                    "non-compliant catalog deviations leave every member with zero worst-case benefit and u <= 0")
    cotol = cotol or check_cotolerance(scenario)
    for row in cotol.rows:
        if row.claimed_compliant:
            continue
        r.runs += row.cells
        if any(v != 0 for v in row.min_benefit.values()) or any(v > 0 for v in row.u_bar.values()):
            r.fail(f"{row.coalition} / {row.deviation}: benefit {row.min_benefit}, u_bar {row.u_bar}")
    return r


def check_cotolerance_verdict(scenario: Scenario, cotol=None) -> CheckResult:
    r = CheckResult("cotolerance", "compliant deviations keep all properties and non-compliant ones do not pay")
    cotol = cotol or check_cotolerance(scenario)
    r.runs = cotol.runs
    for row in cotol.failing():
        r.fail(f"{row.coalition} / {row.deviation}: {row.witness}")
    return r


@dataclass
class SuiteResult:
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> List[str]:
        return [f"{'PASS' if c.passed else 'FAIL'} {c.name} ({c.runs} runs): {c.description}"
                + (f" -- {c.witness}" if c.witness else "") for c in self.checks]


def conformance_suite(
    seeds: Iterable[int] = range(500),
    variant: Optional[Variant] = None,
    *,
    scenarios: Optional[Sequence[Scenario]] = None,
    game: Optional[Scenario] = None,
    include_game: bool = True,
) -> SuiteResult:
    checks = run_trace_checks(scenarios or reference_scenarios(), seeds, variant=variant)
    if include_game and variant is None:
        g = game or game_scenario()
        cotol = check_cotolerance(g)
        checks += [
            check_compliant_produce(g),
            check_observation_evidence(g),
            check_zero_benefit(g, cotol),
            check_cotolerance_verdict(g, cotol),
        ]
    return SuiteResult(checks)


MUTATIONS = {
    "skip_decode": Variant(skip_decode=True),
    "weak_hash_threshold": Variant(threshold_offset=-1),
}

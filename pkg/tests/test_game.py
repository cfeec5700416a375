from dataclasses import replace

import pytest

from nbart.behaviors import CoalitionSpec
from nbart.crypto import Node
from nbart.errors import EnumerationBudgetExceeded, InvalidParams
from nbart.game import (
    CostModel,
    byzantine_configs,
    check_cotolerance,
    expected_utility,
    grid,
    nbart_oracles,
    utility,
)
from nbart.simnet import run
from nbart.topology import Params

P, C = (lambda i: Node("P", i)), (lambda j: Node("C", j))
COSTS = CostModel()


def test_fault_free_utility_by_hand(small):
    t = run(small, 0)
    led = utility(t, COSTS)
    for n in led.benefit:
        sent = [e for e in t.events if e.kind == "send" and e.payer == n]
        expected = sum(1 + 8 * len(e.wire) * 0.001 for e in sent) + (5 if n.role == "P" else 0)
        assert led.cost[n] == pytest.approx(expected)
        assert led.benefit[n] == 100 and led.u(n) > 0


def test_fault_free_passes_all_oracles(small, medium):
    for sc in (small, medium):
        for seed in range(3):
            rep = nbart_oracles(run(sc, seed))
            assert rep.all_passed, rep.as_dict()


def test_skip_report_earns_nothing(medium):
    spec = CoalitionSpec((C(0),), "SKIP_REPORT")
    t = run(replace(medium, coalitions=(spec,)), 0)
    led = utility(t, COSTS)
    assert led.benefit[C(0)] == 0 and led.u(C(0)) <= 0


def test_silent_byzantine_costs_nothing(small):
    t = run(replace(small, byzantine={P(2): "SILENT"}), 0)
    led = utility(t, COSTS)
    assert led.cost[P(2)] == 0


def test_intra_coalition_traffic_is_free(medium):
    spec = CoalitionSpec((P(0), C(0)), "HONEST")
    t = run(replace(medium, coalitions=(spec,)), 0)
    assert utility(t, COSTS).cost[P(0)] < utility(t, COSTS, ()).cost[P(0)]


def test_negative_costs_rejected():
    with pytest.raises(InvalidParams):
        CostModel(cost_per_bit=-1)


def test_benefit_must_cover_fault_free_cost(small):
    with pytest.raises(InvalidParams):
        CostModel(beta_c=0.5).check_benefits(run(small, 0))


def test_config_enumeration_counts():
    pr = Params(n_p=3, n_c=2, f_p=1, f_c=1, b=2)
    configs = list(byzantine_configs(pr, (), ("SILENT", "EQUIVOCATE"), ("SILENT",)))
    # (1 + 3*2) producer sides times (1 + 2*1) consumer sides
    assert len(configs) == 21 and configs[0] == {}
    assert len(list(byzantine_configs(pr, [P(0)], ("SILENT",), ()))) == 3


def _tiny(small):
    return replace(small, producer_behaviors=("SILENT",), consumer_behaviors=("NO_REPORT",),
                   game_policies=("fifo",), regime="game")


def test_zero_budget_grid_is_the_single_run(small):
    sc = replace(_tiny(small), params=replace(small.params, f_p=0, f_c=0))
    rep = expected_utility(sc, players=[P(0)])
    assert rep.cells == 1
    assert rep.u_bar[P(0)] == pytest.approx(utility(run(sc, 0, "fifo"), COSTS).u(P(0)))


def test_expected_utility_takes_the_minimum(small):
    sc = _tiny(small)
    rep = expected_utility(sc)
    # (1 + 3 producers) x (1 + 2 consumers) identity choices, one behaviour each
    assert rep.cells == len(grid(sc)) == 12
    for n, u in rep.u_bar.items():
        assert 0 < u < 100


def test_larger_catalog_cannot_raise_the_worst_case(small):
    a = expected_utility(_tiny(small))
    b = expected_utility(replace(_tiny(small), producer_behaviors=("SILENT", "EQUIVOCATE", "WRONG_VECTOR")))
    for n in a.u_bar:
        assert b.u_bar[n] <= a.u_bar[n]


def test_enumeration_budget():
    pr = Params(n_p=3, n_c=2, f_p=1, f_c=1, b=2)
    from nbart.verification import REFERENCE_VALUE
    from nbart.scenario import Scenario

    with pytest.raises(EnumerationBudgetExceeded) as ei:
        expected_utility(Scenario(pr, REFERENCE_VALUE), max_runs=5)
    assert ei.value.partial.partial and ei.value.partial.cells == 5


def test_cotolerance_small_catalog(medium):
    sc = replace(medium, regime="game", producer_behaviors=("SILENT", "EQUIVOCATE"),
                 consumer_behaviors=("FALSE_REPORT",), game_policies=("fifo",),
                 coalitions=(CoalitionSpec((P(0), P(1)), name="pp"), CoalitionSpec((C(0),), name="c")))
    res = check_cotolerance(sc)
    assert res.verdict, [r.witness for r in res.failing()]
    assert res.nash is None
    by = {(r.coalition, r.deviation): r for r in res.rows}
    assert by[("pp", "LAZY_PRODUCE_RELAY")].compliant
    for r in res.rows:
        if not r.claimed_compliant:
            assert set(r.min_benefit.values()) == {0}
            assert all(v <= 0 for v in r.u_bar.values())

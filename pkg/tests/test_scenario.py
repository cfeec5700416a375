import pytest

from nbart.crypto import Node
from nbart.errors import InvalidParams
from nbart.scenario import Scenario, loads, parse_seeds, sweep_assignments

BASE = """
[params]
n_p = 5
n_c = 3
f_p = 1
f_c = 1
b = 2

[value]
size = 64
seed = 7
"""


def test_parse_seeds():
    assert parse_seeds("0..3") == (0, 1, 2, 3)
    assert parse_seeds("7") == (7,)
    assert parse_seeds("1 4, 9") == (1, 4, 9)
    with pytest.raises(InvalidParams):
        parse_seeds("  ")


def test_minimal_file():
    sc = loads(BASE)
    assert sc.params.n_p == 5 and len(sc.value.data) == 64
    assert sc.validate() is sc


def test_full_file():
    sc = loads(BASE + """
[scenario]
name = demo
regime = game
[params_placeholder]
""".replace("[params_placeholder]\n", "") + """
[byzantine]
p4 = SILENT
c2 = FALSE_REPORT
[schedule]
policies = fifo producer-late
seeds = 0..2
[crypto]
hash_bits = 128
[game]
deviations = HONEST SKIP_REPORT
""")
    assert sc.name == "demo" and sc.regime == "game"
    assert sc.byzantine == {Node("P", 4): "SILENT", Node("C", 2): "FALSE_REPORT"}
    assert sc.policies == ("fifo", "producer-late") and sc.seeds == (0, 1, 2)
    assert sc.hash_bits == 128 and sc.deviations == ("HONEST", "SKIP_REPORT")


@pytest.mark.parametrize("extra, msg", [
    ("[extras]\na = 1\n", "unknown section"),
    ("[schedule]\npolicy = fifo\n", "unknown keys"),
])
def test_strictness(extra, msg):
    with pytest.raises(InvalidParams, match=msg):
        loads(BASE + extra)


def test_value_needs_one_source():
    with pytest.raises(InvalidParams):
        loads(BASE.replace("size = 64", "size = 64\ntext = hi"))


@pytest.mark.parametrize("extra, msg", [
    ("[byzantine]\np9 = SILENT\n", "unknown identity"),
    ("[byzantine]\nc0 = EQUIVOCATE\n", "does not apply"),
    ("[byzantine]\np0 = SILENT\np1 = SILENT\n", "F_P/F_C"),
    ("[byzantine]\np0 = DANCE\n", "unknown behaviour"),
    ("[coalitions]\na = p0 p1 : HONEST\n", "Nt_P"),
    ("[schedule]\npolicies = chaos\n", "unknown policy"),
    ("[crypto]\nhash_bits = 12\n", "multiples of 8"),
])
def test_validation_messages(extra, msg):
    with pytest.raises(InvalidParams, match=msg):
        loads(BASE + extra).validate()


def test_overlapping_coalitions_only_for_separate_runs():
    sc = loads(BASE.replace("b = 2", "b = 2\nnt_p = 2") + "[coalitions]\na = p0 : HONEST\nb = p0 p1\n")
    with pytest.raises(InvalidParams, match="two coalitions"):
        sc.validate()
    sc.validate(simultaneous=False)


def test_sweep_assignments_fill_the_budget():
    sc = loads(BASE)
    assigns = list(sweep_assignments(sc, 3))
    assert len(assigns) == 5 * 4
    for a in assigns:
        assert sorted(n.role for n in a) == ["C", "P"]
    assert assigns == list(sweep_assignments(sc, 3))


def test_scenario_hashable(small):
    assert hash(small) == hash(Scenario(small.params, small.value, name=small.name))

from nbart.protocol import Variant
from nbart.verification import (
    MUTATIONS,
    REFERENCE_PARAMS,
    TRACE_CHECKS,
    reference_scenarios,
    run_trace_checks,
)


def test_reference_sets_are_valid():
    for p in REFERENCE_PARAMS:
        assert p.violations("correctness") == []


def test_checks_pass_on_a_few_seeds():
    res = run_trace_checks(reference_scenarios()[:2], range(2))
    assert all(r.passed for r in res), [r.witness for r in res if not r.passed]
    assert res[0].runs == 2 * 2 * 20 * 4
    assert [r.name for r in res] == list(TRACE_CHECKS)


def test_skip_decode_is_caught():
    (r,) = run_trace_checks(reference_scenarios()[:1], [0], ["single_consume"], MUTATIONS["skip_decode"])
    assert not r.passed and "consumed 0 times" in r.witness
    assert r.witness_trace is not None


def test_weak_threshold_is_caught():
    (r,) = run_trace_checks(reference_scenarios()[:1], range(3), ["hashvec_agreement"],
                            Variant(threshold_offset=-1))
    assert not r.passed

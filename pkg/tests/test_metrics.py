from dataclasses import replace

from nbart.codec import GfParams
from nbart.metrics import GridCell, formula_block_bits, formula_hash_sig_bits, measure, sweep
from nbart.simnet import run
from nbart.topology import Params


def test_formulas_by_hand():
    pr = Params(n_p=3, n_c=2, f_p=1, f_c=1, b=2)
    # 512 value bits pad to 528 (next multiple of 16 after a marker bit)
    assert formula_block_bits(pr, 512, GfParams.for_omega(8)) == 2 * 3 * 528 // 2
    assert formula_hash_sig_bits(pr, 256, 256) == 3 * 2 * (256 + 3 * 256)


def test_fault_free_counts(small):
    r = measure(run(small, 0))
    assert r.producer_consumer_messages == r.formula_msgs == 6
    assert r.block_bits + r.hash_sig_bits == r.formula_bits
    assert r.bits_ratio == 1.0
    assert r.report_messages >= 2


def test_doubling_value_roughly_doubles_block_bits(small):
    pr = small.params
    a, b = sweep(small, [GridCell(pr, 64), GridCell(pr, 128)])
    slack = pr.b * 8 * pr.n_c * (pr.b + pr.f_p)
    assert abs(b.block_bits - 2 * a.block_bits) <= slack
    assert b.hash_sig_bits == a.hash_sig_bits


def test_small_field_matches_formula(small):
    pr = replace(small.params, omega=4)
    (r,) = sweep(small, [GridCell(pr, 37, seed=3)])
    assert r.bits_ratio == 1.0 and r.msgs_ratio == 1.0

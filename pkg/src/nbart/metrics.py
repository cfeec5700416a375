"""Message and bit accounting of a run, next to the closed-form costs.

Producer-to-consumer traffic is split into block bits and hash+signature
bits.  Tags, identities and length prefixes are counted as framing and kept
out of the formula comparison.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, replace
from typing import Dict, Iterable, List, Optional

from .codec import block_bits, padded_bits
from .protocol import BLOCK, REPORT, SUMMARY, field_bits


@dataclass(frozen=True)
class Lengths:
    l_v: int
    l_s: int
    l_h: int


def formula_block_bits(params, l_v: int, gf) -> int:
    return params.n_c * (params.b + params.f_p) * padded_bits(l_v, params.b, gf) // params.b


def formula_hash_sig_bits(params, l_s: int, l_h: int) -> int:
    return params.n_p * params.n_c * (l_s + params.n_p * l_h)


@dataclass
class ComplexityReport:
    n_p: int
    n_c: int
    f_p: int
    b: int
    l_v: int
    padded_l_v: int
    messages_total: int
    producer_consumer_messages: int
    report_messages: int
    bits_total: int
    bits_by_kind: Dict[str, int]
    block_bits: int
    hash_sig_bits: int
    framing_bits: int
    report_bits: int
    formula_msgs: int
    formula_block_bits: int
    formula_hash_sig_bits: int
    formula_bits: int = 0
    bits_ratio: float = 0.0
    msgs_ratio: float = 0.0

    def __post_init__(self):
        self.formula_bits = self.formula_block_bits + self.formula_hash_sig_bits
        measured = self.block_bits + self.hash_sig_bits
        self.bits_ratio = measured / self.formula_bits if self.formula_bits else 0.0
        self.msgs_ratio = self.producer_consumer_messages / self.formula_msgs if self.formula_msgs else 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def measure(trace, lengths: Optional[Lengths] = None) -> ComplexityReport:
    setup = trace.setup
    pr = setup.params
    lengths = lengths or Lengths(trace.value.bit_length, setup.sig_bits, setup.hash_bits)
    info_block = block_bits(lengths.l_v, pr.b, setup.gf)
    msgs = pc = reports = 0
    bits_total = blocks = hash_sig = framing = report_bits = 0
    by_kind = {BLOCK: 0, SUMMARY: 0, REPORT: 0}
    for e in trace.events:
        if e.kind != "send":
            continue
        m = e.msg
        n = 8 * len(e.wire)
        msgs += 1
        bits_total += n
        by_kind[m.kind] = by_kind.get(m.kind, 0) + n
        if m.kind == REPORT:
            reports += 1
            report_bits += n
            continue
        pc += 1
        f = field_bits(m)
        blk = f["block"]
        if blk:
            # byte alignment of a block packed from omega-bit symbols
            slack = blk - info_block
            blk -= slack
            f["framing"] += slack
        blocks += blk
        hash_sig += f["hashes"] + f["signature"]
        framing += f["framing"]
    return ComplexityReport(
        n_p=pr.n_p, n_c=pr.n_c, f_p=pr.f_p, b=pr.b,
        l_v=lengths.l_v, padded_l_v=padded_bits(lengths.l_v, pr.b, setup.gf),
        messages_total=msgs,
        producer_consumer_messages=pc,
        report_messages=reports,
        bits_total=bits_total,
        bits_by_kind=by_kind,
        block_bits=blocks,
        hash_sig_bits=hash_sig,
        framing_bits=framing,
        report_bits=report_bits,
        formula_msgs=pr.n_p * pr.n_c,
        formula_block_bits=formula_block_bits(pr, lengths.l_v, setup.gf),
        formula_hash_sig_bits=formula_hash_sig_bits(pr, lengths.l_s, lengths.l_h),
    )


@dataclass(frozen=True)
class GridCell:
    params: object
    value_bytes: int
    seed: int = 0


def sweep(scenario, cells: Iterable[GridCell], policy: str = "fifo") -> List[ComplexityReport]:
    """One fault-free run per cell, each with a pseudo-random value of the given size."""
    from .codec import ValuePayload
    from .simnet import run

    out = []
    for cell in cells:
        cell.params.validate("correctness")
        data = random.Random(cell.seed).randbytes(cell.value_bytes)
        sc = replace(scenario, params=cell.params, value=ValuePayload(data), byzantine={}, coalitions=())
        out.append(measure(run(sc, cell.seed, policy)))
    return out

"""GF(2^w) arithmetic and the Reed-Solomon erasure code used to split a value
into one block per producer.

The code is an evaluation code: the padded payload is cut into stripes of ``B``
symbols, each stripe is read as the coefficients of a degree ``B - 1``
polynomial, and producer ``i`` receives the evaluations at the field point
``i + 1``.  Any ``B`` blocks determine every stripe polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Optional, Sequence, Tuple

from .crypto import hash_bytes
from .errors import InvalidParams

# Irreducible reduction polynomials (bit i = coefficient of x^i).
REDUCTION_POLYS = {
    3: 0b1011,  # x^3 + x + 1
    4: 0b10011,  # x^4 + x + 1
    8: 0x11B,  # x^8 + x^4 + x^3 + x + 1
}


@dataclass(frozen=True)
class GfParams:
    omega: int = 8
    reduction_poly: int = 0x11B

    def __post_init__(self) -> None:
        if self.omega not in REDUCTION_POLYS:
            raise InvalidParams(f"unsupported word size omega={self.omega}")
        if self.reduction_poly != REDUCTION_POLYS[self.omega]:
            raise InvalidParams(
                f"reduction polynomial {self.reduction_poly:#x} is not the "
                f"built-in irreducible polynomial for omega={self.omega}"
            )

    @classmethod
    def for_omega(cls, omega: int) -> "GfParams":
        if omega not in REDUCTION_POLYS:
            raise InvalidParams(f"unsupported word size omega={omega}")
        return cls(omega, REDUCTION_POLYS[omega])

    @property
    def order(self) -> int:
        return 1 << self.omega


def gf_add(a: int, b: int) -> int:
    return a ^ b


def clmul_reduce(a: int, b: int, gf: GfParams) -> int:
    """Shift-and-add multiplication with reduction after every shift."""
    top = 1 << gf.omega
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= gf.reduction_poly
    return result


class _Tables:
    """exp/log tables built from a generator of the multiplicative group."""

    def __init__(self, gf: GfParams):
        n = gf.order - 1
        for g in range(2, gf.order):
            exp = [0] * (2 * n)
            x = 1
            for i in range(n):
                exp[i] = x
                x = clmul_reduce(x, g, gf)
            if len(set(exp[:n])) == n:
                break
        else:  # pragma: no cover - every finite field has a generator
            raise InvalidParams(f"no generator found for {gf}")
        for i in range(n, 2 * n):
            exp[i] = exp[i - n]
        log = [0] * gf.order
        for i in range(n):
            log[exp[i]] = i
        self.generator = g
        self.exp = exp
        self.log = log
        self.n = n
        # full product table keeps the stripe loops free of branches
        self.mul = [
            [0 if (a == 0 or b == 0) else exp[log[a] + log[b]] for b in range(gf.order)]
            for a in range(gf.order)
        ]


@lru_cache(maxsize=None)
def tables(gf: GfParams) -> _Tables:
    return _Tables(gf)


def gf_mul(a: int, b: int, gf: GfParams) -> int:
    return tables(gf).mul[a][b]


def gf_inv(a: int, gf: GfParams) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse")
    t = tables(gf)
    return t.exp[(t.n - t.log[a]) % t.n]


def gf_pow(a: int, e: int, gf: GfParams) -> int:
    if e == 0:
        return 1
    if a == 0:
        return 0
    t = tables(gf)
    return t.exp[(t.log[a] * e) % t.n]


@dataclass(frozen=True)
class ValuePayload:
    """A value of ``bit_length`` meaningful bits, MSB-first in ``data``."""

    data: bytes
    bit_length: int = -1

    def __post_init__(self) -> None:
        if self.bit_length < 0:
            object.__setattr__(self, "bit_length", 8 * len(self.data))
        if self.bit_length > 8 * len(self.data):
            raise InvalidParams("bit_length exceeds the supplied bytes")
        nbytes = (self.bit_length + 7) // 8
        data = self.data[:nbytes]
        spare = 8 * nbytes - self.bit_length
        if spare and data:
            data = data[:-1] + bytes([data[-1] & (0xFF << spare) & 0xFF])
        object.__setattr__(self, "data", bytes(data))


def padded_bits(bit_length: int, B: int, gf: GfParams) -> int:
    """Length after appending a 1-bit and zeros up to a multiple of B*omega."""
    unit = B * gf.omega
    return -(-(bit_length + 1) // unit) * unit


def block_bits(bit_length: int, B: int, gf: GfParams) -> int:
    return padded_bits(bit_length, B, gf) // B


def _check(v: ValuePayload, n_blocks: int, B: int, gf: GfParams) -> None:
    if not 1 <= B <= n_blocks:
        raise InvalidParams(f"need 1 <= B <= N_P, got B={B}, N_P={n_blocks}")
    if gf.order <= n_blocks:
        raise InvalidParams(f"2^omega = {gf.order} must exceed N_P = {n_blocks}")
    if not B < v.bit_length:
        raise InvalidParams(f"need B < l_v, got B={B}, l_v={v.bit_length}")


def _to_symbols(v: ValuePayload, B: int, gf: GfParams) -> list[int]:
    total = padded_bits(v.bit_length, B, gf)
    if gf.omega == 8 and v.bit_length % 8 == 0:
        return list(v.data) + [0x80] + [0] * (total // 8 - len(v.data) - 1)
    x = int.from_bytes(v.data, "big") >> (8 * len(v.data) - v.bit_length) if v.data else 0
    x = ((x << 1) | 1) << (total - v.bit_length - 1)
    mask = gf.order - 1
    count = total // gf.omega
    return [(x >> (gf.omega * (count - 1 - k))) & mask for k in range(count)]


def _from_symbols(symbols: Sequence[int], gf: GfParams) -> Optional[ValuePayload]:
    total = len(symbols) * gf.omega
    x = 0
    for s in symbols:
        x = (x << gf.omega) | s
    if x == 0:
        return None
    trailing = (x & -x).bit_length() - 1
    bit_length = total - trailing - 1
    x >>= trailing + 1
    nbytes = (bit_length + 7) // 8
    x <<= 8 * nbytes - bit_length
    return ValuePayload(x.to_bytes(nbytes, "big"), bit_length)


def _pack(symbols: Sequence[int], gf: GfParams) -> bytes:
    if gf.omega == 8:
        return bytes(symbols)
    x = 0
    for s in symbols:
        x = (x << gf.omega) | s
    nbits = len(symbols) * gf.omega
    nbytes = (nbits + 7) // 8
    return (x << (8 * nbytes - nbits)).to_bytes(nbytes, "big")


def _unpack(block: bytes, gf: GfParams) -> list[int]:
    if gf.omega == 8:
        return list(block)
    # trailing slack bits beyond the last whole symbol decode as zero stripes,
    # which the 1-then-0 padding absorbs
    count = 8 * len(block) // gf.omega
    x = int.from_bytes(block, "big") >> (8 * len(block) - count * gf.omega)
    mask = gf.order - 1
    return [(x >> (gf.omega * (count - 1 - k))) & mask for k in range(count)]


def eval_point(index: int) -> int:
    return index + 1


def rs_encode(v: ValuePayload, n_blocks: int, B: int, gf: GfParams = GfParams()) -> Tuple[bytes, ...]:
    """Split ``v`` into ``n_blocks`` blocks, any ``B`` of which recover it."""
    _check(v, n_blocks, B, gf)
    symbols = _to_symbols(v, B, gf)
    mul = tables(gf).mul
    stripes = [symbols[k : k + B] for k in range(0, len(symbols), B)]
    blocks = []
    for i in range(n_blocks):
        x = eval_point(i)
        powers = [gf_pow(x, e, gf) for e in range(B)]
        out = []
        for coeffs in stripes:
            acc = 0
            for c, xp in zip(coeffs, powers):
                acc ^= mul[c][xp]
            out.append(acc)
        blocks.append(_pack(out, gf))
    return tuple(blocks)


@lru_cache(maxsize=4096)
def _vandermonde_inverse(points: Tuple[int, ...], gf: GfParams) -> Tuple[Tuple[int, ...], ...]:
    n = len(points)
    mul = tables(gf).mul
    rows = [[gf_pow(x, e, gf) for e in range(n)] + [int(r == k) for k in range(n)]
            for r, x in enumerate(points)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if rows[r][col])
        rows[col], rows[pivot] = rows[pivot], rows[col]
        inv = gf_inv(rows[col][col], gf)
        rows[col] = [mul[inv][a] for a in rows[col]]
        for r in range(n):
            if r != col and rows[r][col]:
                f = rows[r][col]
                rows[r] = [a ^ mul[f][b] for a, b in zip(rows[r], rows[col])]
    return tuple(tuple(row[n:]) for row in rows)


def interpolate(blocks: Mapping[int, bytes], B: int, gf: GfParams) -> Optional[ValuePayload]:
    """Recover the value from exactly ``B`` (index -> block) entries."""
    chosen = sorted(blocks)[:B]
    inverse = _vandermonde_inverse(tuple(eval_point(i) for i in chosen), gf)
    columns = [_unpack(blocks[i], gf) for i in chosen]
    if len({len(c) for c in columns}) != 1:
        return None
    mul = tables(gf).mul
    symbols: list[int] = []
    for ys in zip(*columns):
        for row in inverse:
            acc = 0
            for a, y in zip(row, ys):
                acc ^= mul[a][y]
            symbols.append(acc)
    return _from_symbols(symbols, gf)


def rs_decode(
    partial: Iterable[Tuple[int, Optional[bytes]]],
    n_blocks: int,
    B: int,
    gf: GfParams,
    hv: Sequence[bytes],
) -> Optional[ValuePayload]:
    """Decode from blocks whose hash matches ``hv`` at their index.

    Returns None when fewer than ``B`` blocks pass the hash filter.
    """
    if len(hv) != n_blocks:
        raise InvalidParams(f"hash vector has {len(hv)} entries, expected {n_blocks}")
    good = {}
    for index, block in partial:
        if not 0 <= index < n_blocks:
            raise InvalidParams(f"block index {index} out of range")
        if block is not None and hash_bytes(block, 8 * len(hv[index])) == hv[index]:
            good[index] = block
    if len(good) < B:
        return None
    return interpolate(good, B, gf)

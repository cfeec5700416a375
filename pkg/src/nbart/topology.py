"""Instance parameters and the producer/consumer assignment."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import FrozenSet, Protocol, Tuple

from .errors import InvalidParams


@dataclass(frozen=True)
class Params:
    n_p: int
    n_c: int
    f_p: int
    f_c: int
    b: int
    omega: int = 8
    nt_p: int = 1
    nt_c: int = 1

    @property
    def n(self) -> int:
        return self.n_p + self.n_c

    def violations(self, regime: str = "correctness") -> list[str]:
        """Names of the violated invariants for ``regime``.

        ``regime`` is one of "basic", "correctness" or "game".
        """
        out = []
        if self.n_p < 1 or self.n_c < 1:
            out.append("N_P >= 1 and N_C >= 1")
        if min(self.f_p, self.f_c, self.nt_p, self.nt_c) < 0:
            out.append("bounds must be non-negative")
        if not 1 <= self.b <= self.n_p - self.f_p:
            out.append("1 <= B <= N_P - F_P")
        if (1 << self.omega) <= self.n_p:
            out.append("2^omega > N_P")
        if regime in ("correctness", "game"):
            if self.n_p < 2 * self.f_p + 1:
                out.append("N_P >= 2*F_P + 1")
            if self.n_c < self.f_c + 1:
                out.append("N_C >= F_C + 1")
        if regime == "game":
            if self.n_p < max(self.f_p, self.nt_p) + self.f_p + 1:
                out.append("N_P >= max(F_P, Nt_P) + F_P + 1")
            if self.n_c < self.f_c + self.nt_c + 1:
                out.append("N_C >= F_C + Nt_C + 1")
        return out

    def validate(self, regime: str = "correctness") -> "Params":
        bad = self.violations(regime)
        if bad:
            raise InvalidParams("violated: " + "; ".join(bad))
        return self


class Mapping(Protocol):
    def prodset(self, j: int, params: Params) -> Tuple[int, ...]: ...

    def conset(self, i: int, params: Params) -> FrozenSet[int]: ...


def _check_basic(params: Params) -> None:
    if params.violations("basic"):
        raise InvalidParams("violated: " + "; ".join(params.violations("basic")))


@lru_cache(maxsize=None)
def _canonical_prodsets(params: Params) -> Tuple[Tuple[int, ...], ...]:
    _check_basic(params)
    width = params.b + params.f_p
    out = []
    for j in range(params.n_c):
        k = j * width % params.n_p
        out.append(tuple((k + d) % params.n_p for d in range(width)))
    return tuple(out)


@lru_cache(maxsize=None)
def _inverse(prodsets: Tuple[Tuple[int, ...], ...], n_p: int) -> Tuple[FrozenSet[int], ...]:
    return tuple(
        frozenset(j for j, ps in enumerate(prodsets) if i in ps) for i in range(n_p)
    )


class CanonicalMapping:
    """Consumer j gets the B + F_P producers starting at j*(B + F_P) mod N_P."""

    def prodset(self, j: int, params: Params) -> Tuple[int, ...]:
        if not 0 <= j < params.n_c:
            raise InvalidParams(f"consumer index {j} out of range")
        return _canonical_prodsets(params)[j]

    def conset(self, i: int, params: Params) -> FrozenSet[int]:
        if not 0 <= i < params.n_p:
            raise InvalidParams(f"producer index {i} out of range")
        return _inverse(_canonical_prodsets(params), params.n_p)[i]


CANONICAL = CanonicalMapping()


def prodset(j: int, params: Params, mapping: Mapping = CANONICAL) -> Tuple[int, ...]:
    return mapping.prodset(j, params)


def conset(i: int, params: Params, mapping: Mapping = CANONICAL) -> FrozenSet[int]:
    return mapping.conset(i, params)

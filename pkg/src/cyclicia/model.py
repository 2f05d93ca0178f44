"""System parameters and the closed-form communication costs.

All costs are exact :class:`fractions.Fraction` values; nothing here is
ever compared with a tolerance.
"""
from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

from .fieldlin import MERSENNE31, _isprime


class ParamError(ValueError):
    """Base class for invalid system parameters."""


class NDoesNotDivideK(ParamError):
    pass


class MOutOfRange(ParamError):
    pass


class NrOutOfRange(ParamError):
    pass


class KcOutOfRange(ParamError):
    pass


class QNotPrime(ParamError):
    pass


class RepDivisibility(ParamError):
    """Repetition assignment needs (N - Nr + m) | N."""


class Regime(enum.Enum):
    SMALL_KC = "SmallKc"
    MID_KC = "MidKc"
    LARGE_KC = "LargeKc"


@dataclass(frozen=True)
class SystemParams:
    """A (K, N, Nr, Kc, m) instance over GF(q).

    K datasets, N workers, any Nr of which respond, Kc demanded linear
    combinations, and computation-cost parameter m.
    """

    K: int
    N: int
    Nr: int
    Kc: int
    m: int
    q: int = MERSENNE31

    @classmethod
    def from_dict(cls, doc: dict) -> "SystemParams":
        keys = {"K": "K", "N": "N", "Nr": "Nr", "Kc": "Kc", "m": "m", "q": "q"}
        kwargs = {dst: int(doc[src]) for src, dst in keys.items() if src in doc}
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "SystemParams":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "SystemParams":
        doc = self.to_dict()
        doc.update(changes)
        return SystemParams(**doc)

    def __str__(self):
        return f"({self.K},{self.N},{self.Nr},{self.Kc},{self.m})"


@dataclass(frozen=True)
class DerivedParams:
    u: int
    d: int
    M: int
    ratio: int  # K / N
    regime: Regime
    small_boundary: int  # K/N
    large_boundary: int  # (K/N)(Nr - m + 1)


@functools.lru_cache(maxsize=4096)
def validate(p: SystemParams) -> DerivedParams:
    """Check the model constraints and return (u, d, M) plus regime data."""
    if p.K < 1 or p.N < 1:
        raise NDoesNotDivideK(f"K and N must be positive, got K={p.K}, N={p.N}")
    if p.K % p.N:
        raise NDoesNotDivideK(f"N={p.N} does not divide K={p.K}")
    if not 1 <= p.Nr <= p.N:
        raise NrOutOfRange(f"need 1 <= Nr <= N, got Nr={p.Nr}, N={p.N}")
    if not 1 <= p.m <= p.Nr:
        raise MOutOfRange(f"need 1 <= m <= Nr, got m={p.m}, Nr={p.Nr}")
    if not 1 <= p.Kc <= p.K:
        raise KcOutOfRange(f"need 1 <= Kc <= K, got Kc={p.Kc}, K={p.K}")
    if p.q >= 2**31 or not _isprime(p.q):
        raise QNotPrime(f"q={p.q} is not a prime below 2**31")
    ratio = p.K // p.N
    u = math.ceil(p.Kc * p.N / p.K)
    small = ratio
    large = ratio * (p.Nr - p.m + 1)
    if p.Kc <= small:
        regime = Regime.SMALL_KC
    elif p.Kc <= large:
        regime = Regime.MID_KC
    else:
        regime = Regime.LARGE_KC
    return DerivedParams(
        u=u,
        d=p.m + u - 1,
        M=ratio * (p.N - p.Nr + p.m),
        ratio=ratio,
        regime=regime,
        small_boundary=small,
        large_boundary=large,
    )


def achievable_cost(p: SystemParams) -> Fraction:
    dv = validate(p)
    if dv.regime is Regime.SMALL_KC:
        return Fraction(p.Kc * p.Nr, p.m)
    if dv.regime is Regime.MID_KC:
        return Fraction(p.Nr * p.K * dv.u, p.N * (p.m + dv.u - 1))
    return Fraction(p.Kc)


def converse_cyclic(p: SystemParams) -> Fraction:
    dv = validate(p)
    if p.Kc <= dv.large_boundary:
        return Fraction(p.Nr * p.Kc, p.m + dv.u - 1)
    return Fraction(p.Kc)


def repetition_defined(p: SystemParams) -> bool:
    return p.N % (p.N - p.Nr + p.m) == 0


def repetition_cost(p: SystemParams) -> Fraction:
    dv = validate(p)
    if not repetition_defined(p):
        raise RepDivisibility(f"N-Nr+m={p.N - p.Nr + p.m} does not divide N={p.N}")
    return Fraction(p.Nr * min(p.Kc, dv.M), p.m)


def benchmark_cost(p: SystemParams) -> Fraction:
    """Repeating the single-demand optimum Kc times."""
    validate(p)
    return Fraction(p.Nr * p.Kc, p.m)


@dataclass(frozen=True)
class Comparison:
    ratio_ach_over_rep: Fraction | None
    ratio_ach_over_converse: Fraction
    order_optimality_factor: int
    closed_form_rep_ratio: Fraction | None
    verdict: str


def compare(p: SystemParams) -> Comparison:
    """Proposed scheme against the cyclic converse and the repetition optimum.

    ``closed_form_rep_ratio`` is the branch expression m/(m+u-1),
    u*m/((m+u-1)(N-Nr+m)) or u*m/(Nr(N-Nr+m)); it coincides with the exact
    ratio whenever Kc is a multiple of K/N (in particular for K = N).
    ``order_optimality_factor`` is the proven bound on ach/converse: 1 on the
    exactly-optimal branches, 2 otherwise.
    """
    dv = validate(p)
    ach = achievable_cost(p)
    conv = converse_cyclic(p)
    rep_ratio = closed = None
    if repetition_defined(p):
        rep_ratio = ach / repetition_cost(p)
        g = p.N - p.Nr + p.m
        u, m = dv.u, p.m
        if p.Nr == p.m or dv.regime is Regime.SMALL_KC:
            closed = Fraction(1)
        elif p.Kc <= dv.ratio * g:
            closed = Fraction(m, m + u - 1)
        elif p.Kc <= dv.large_boundary:
            closed = Fraction(u * m, (m + u - 1) * g)
        else:
            closed = Fraction(u * m, p.Nr * g)
    exact = p.K == p.N or dv.regime is not Regime.MID_KC
    if ach == conv:
        verdict = "exactly optimal under cyclic assignment"
    else:
        verdict = "within factor 2 of the cyclic converse"
    return Comparison(
        ratio_ach_over_rep=rep_ratio,
        ratio_ach_over_converse=ach / conv,
        order_optimality_factor=1 if exact else 2,
        closed_form_rep_ratio=closed,
        verdict=verdict,
    )


@dataclass(frozen=True)
class CostReport:
    r_ach: Fraction
    r_converse_cyc: Fraction
    r_rep: Fraction | None
    r_benchmark: Fraction
    regime: Regime


def cost_report(p: SystemParams) -> CostReport:
    dv = validate(p)
    return CostReport(
        r_ach=achievable_cost(p),
        r_converse_cyc=converse_cyclic(p),
        r_rep=repetition_cost(p) if repetition_defined(p) else None,
        r_benchmark=benchmark_cost(p),
        regime=dv.regime,
    )


def valid_tuples(max_k: int, *, k_equals_n: bool = False, q: int = MERSENNE31):
    """Every valid (K, N, Nr, Kc, m) with K <= max_k."""
    for K in range(1, max_k + 1):
        for N in range(1, K + 1):
            if K % N or (k_equals_n and N != K):
                continue
            for Nr in range(1, N + 1):
                for m in range(1, Nr + 1):
                    for Kc in range(1, K + 1):
                        yield SystemParams(K, N, Nr, Kc, m, q)

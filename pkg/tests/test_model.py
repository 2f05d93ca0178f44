from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclicia.model import (
    KcOutOfRange,
    MOutOfRange,
    NDoesNotDivideK,
    NrOutOfRange,
    QNotPrime,
    Regime,
    RepDivisibility,
    SystemParams,
    achievable_cost,
    benchmark_cost,
    compare,
    converse_cyclic,
    repetition_cost,
    repetition_defined,
    valid_tuples,
    validate,
)


@st.composite
def params(draw, max_k=24):
    N = draw(st.integers(1, 12))
    K = N * draw(st.integers(1, max(1, max_k // N)))
    Nr = draw(st.integers(1, N))
    m = draw(st.integers(1, Nr))
    Kc = draw(st.integers(1, K))
    return SystemParams(K, N, Nr, Kc, m)


def test_derived_quantities():
    dv = validate(SystemParams(5, 5, 5, 2, 2))
    assert (dv.u, dv.d, dv.M) == (2, 3, 2)
    dv = validate(SystemParams(12, 4, 3, 5, 2))
    assert (dv.u, dv.d, dv.M, dv.ratio) == (2, 3, 9, 3)


@pytest.mark.parametrize("args,err", [
    ((5, 3, 3, 1, 1), NDoesNotDivideK),
    ((5, 5, 5, 2, 0), MOutOfRange),
    ((5, 5, 5, 2, 6), MOutOfRange),
    ((5, 5, 6, 2, 2), NrOutOfRange),
    ((5, 5, 5, 0, 2), KcOutOfRange),
    ((5, 5, 5, 6, 2), KcOutOfRange),
    ((5, 5, 5, 2, 2, 91), QNotPrime),
])
def test_validation_errors(args, err):
    with pytest.raises(err):
        validate(SystemParams(*args))


def test_example_costs():
    p = SystemParams(5, 5, 5, 2, 2)
    assert achievable_cost(p) == Fraction(10, 3)
    assert converse_cyclic(p) == Fraction(10, 3)
    assert benchmark_cost(p) == 5
    assert achievable_cost(SystemParams(12, 12, 11, 9, 3)) == 9
    assert achievable_cost(SystemParams(12, 12, 11, 1, 3)) == Fraction(11, 3)


def test_regime_boundaries():
    assert validate(SystemParams(12, 12, 11, 1, 3)).regime is Regime.SMALL_KC
    assert validate(SystemParams(12, 12, 11, 9, 3)).regime is Regime.MID_KC
    assert validate(SystemParams(12, 12, 11, 10, 3)).regime is Regime.LARGE_KC


def test_boundary_formulas_agree():
    for p in valid_tuples(12):
        dv = validate(p)
        if p.Kc == dv.large_boundary:
            assert achievable_cost(p) == p.Kc


def test_repetition_requires_divisibility():
    p = SystemParams(12, 12, 11, 4, 4)
    assert not repetition_defined(p)
    with pytest.raises(RepDivisibility):
        repetition_cost(p)
    assert repetition_cost(SystemParams(12, 12, 11, 8, 3)) == Fraction(44, 3)


@settings(max_examples=400, deadline=None)
@given(params())
def test_cost_ordering(p):
    ach, conv = achievable_cost(p), converse_cyclic(p)
    assert ach > 0 and conv > 0
    assert conv <= ach <= 2 * conv
    if repetition_defined(p):
        assert ach <= repetition_cost(p)
    dv = validate(p)
    if p.K == p.N or p.Kc <= dv.ratio or p.Kc > dv.large_boundary:
        assert ach == conv


@settings(max_examples=200, deadline=None)
@given(params())
def test_monotone_in_demand(p):
    if p.Kc < p.K:
        assert achievable_cost(p) <= achievable_cost(p.replace(Kc=p.Kc + 1))


def test_compare_reports():
    c = compare(SystemParams(12, 12, 12, 9, 3))
    assert c.ratio_ach_over_converse == 1
    assert c.order_optimality_factor == 1
    assert c.verdict.startswith("exactly")
    c = compare(SystemParams(12, 12, 11, 4, 3))
    assert c.ratio_ach_over_rep == Fraction(1, 2)
    assert c.closed_form_rep_ratio == Fraction(1, 2)


def test_round_trip_dict():
    p = SystemParams(6, 3, 2, 4, 1, 101)
    assert SystemParams.from_dict(p.to_dict()) == p

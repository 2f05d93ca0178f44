import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclicia.assign import Assignment, cyclic_assignment, missing_set, mod1, repetition_assignment
from cyclicia.model import RepDivisibility, SystemParams, validate
from cyclicia.scheme import interference_sets


@st.composite
def params(draw):
    N = draw(st.integers(1, 10))
    K = N * draw(st.integers(1, 3))
    Nr = draw(st.integers(1, N))
    m = draw(st.integers(1, Nr))
    Kc = draw(st.integers(1, K))
    return SystemParams(K, N, Nr, Kc, m)


def test_mod1():
    assert [mod1(b, 5) for b in (0, 1, 5, 6, 11)] == [5, 1, 5, 1, 1]


def test_small_cyclic():
    a = cyclic_assignment(SystemParams(5, 5, 5, 2, 2))
    assert a.zsets == ((1, 2), (2, 3), (3, 4), (4, 5), (1, 5))
    assert missing_set(a, 5) == (2, 3, 4)
    with pytest.raises(ValueError):
        missing_set(a, 6)


def test_cyclic_with_replicated_blocks():
    a = cyclic_assignment(SystemParams(6, 3, 2, 2, 1))
    assert a.z(3) == (1, 3, 4, 6)


@settings(max_examples=200, deadline=None)
@given(params())
def test_double_count(p):
    a = cyclic_assignment(p)
    assert sum(len(z) for z in a.zsets) == p.K * (p.N - p.Nr + p.m)
    held = [sum(k in z for z in a.zsets) for k in range(1, p.K + 1)]
    assert set(held) == {p.N - p.Nr + p.m}


@settings(max_examples=200, deadline=None)
@given(params())
def test_interference_sets_miss_their_datasets(p):
    dv = validate(p)
    if p.Nr - p.m - dv.u < 1 or p.m < 2:
        return
    a = cyclic_assignment(p)
    for i in range(1, p.N + 1):
        workers, _, datasets = interference_sets(p, i)
        assert workers[0] == i
        for n in workers:
            assert not set(datasets) & set(a.z(n))


@settings(max_examples=200, deadline=None)
@given(params())
def test_repetition_partitions(p):
    g = p.N - p.Nr + p.m
    if p.N % g:
        with pytest.raises(RepDivisibility):
            repetition_assignment(p)
        return
    a = repetition_assignment(p)
    workers = sorted(n for grp in a.groups for n in grp)
    assert workers == list(range(1, p.N + 1))
    blocks = [a.z(grp[0]) for grp in a.groups]
    flat = sorted(k for b in blocks for k in b)
    assert flat == list(range(1, p.K + 1))
    for grp in a.groups:
        assert len({a.z(n) for n in grp}) == 1


def test_json_round_trip():
    a = repetition_assignment(SystemParams(12, 12, 11, 4, 3))
    back = Assignment.from_dict(a.to_dict(), 12)
    assert back == a
    assert a.to_dict()["indexing"] == "1-based"

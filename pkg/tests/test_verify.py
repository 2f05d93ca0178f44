import itertools
import os
import math
from dataclasses import replace

import numpy as np
import pytest

from cyclicia.model import SystemParams, valid_tuples
from cyclicia.scheme import BuildFailure, build_scheme
from cyclicia.verify import (
    active_sets,
    adjacent_straggler_sets,
    null_space_report,
    monte_carlo_failure,
    verify_all_active_sets,
    verify_end_to_end,
)


def direct_failures(scheme, sets):
    """Reference: invert every stacked S^A explicitly."""
    f = scheme.field
    bad = []
    for A in sets:
        for comp in scheme.components:
            S = comp.core.coding_matrix(A)
            if f.rank(S) < S.shape[0]:
                bad.append(A)
                break
    return bad


def test_adjacent_patterns():
    assert adjacent_straggler_sets(4, 3) == [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)]
    assert (1, 5, 6) in adjacent_straggler_sets(6, 3)


def test_active_set_sampling_keeps_adjacent():
    sets, exhaustive = active_sets(20, 10, cap=500, seed=1)
    assert not exhaustive and len(sets) == 500
    assert set(adjacent_straggler_sets(20, 10)) <= set(sets)
    sets, exhaustive = active_sets(6, 4)
    assert exhaustive and len(sets) == math.comb(6, 4)


@pytest.mark.parametrize("args", [(12, 12, 11, 4, 3), (8, 8, 5, 3, 2), (12, 12, 11, 10, 3), (10, 5, 5, 1, 2)])
def test_fast_paths_agree_with_direct_inversion(args):
    s = build_scheme(SystemParams(*args), seed=0)
    sets = list(itertools.combinations(range(1, s.params.N + 1), s.params.Nr))
    assert direct_failures(s, sets) == []
    assert verify_all_active_sets(s, structural=True).ok


def test_detects_broken_worker():
    s = build_scheme(SystemParams(8, 8, 5, 3, 2), seed=0)
    core = s.core
    coding = list(core.coding)
    # worker 3 repeats worker 1, so any set holding both collapses
    coding[2] = coding[0].copy()
    broken = replace(s, components=(replace(s.components[0], core=replace(core, coding=tuple(coding))),))
    sets = list(itertools.combinations(range(1, 9), 5))
    report = verify_all_active_sets(broken)
    assert list(report.failures) == direct_failures(broken, sets)
    assert report.failures and not report.ok
    sampled = verify_all_active_sets(broken, cap=20, seed=3)
    assert set(sampled.failures) <= set(report.failures)


def test_low_rank_blocks_are_caught_by_every_path():
    s = build_scheme(SystemParams(12, 12, 11, 4, 3), seed=0)
    core = s.core
    coding = list(core.coding)
    blk = coding[5].copy()
    blk[1] = blk[0]
    coding[5] = blk
    broken = replace(s, components=(replace(s.components[0], core=replace(core, coding=tuple(coding))),))
    sets = list(itertools.combinations(range(1, 13), 11))
    expect = direct_failures(broken, sets)
    assert len(expect) == 11
    assert list(verify_all_active_sets(broken).failures) == expect


def test_report_is_deterministic_and_serializable():
    p = SystemParams(6, 6, 4, 2, 2)
    a = verify_all_active_sets(build_scheme(p, seed=5), structural=True)
    b = verify_all_active_sets(build_scheme(p, seed=5), structural=True)
    assert a.to_json() == b.to_json()
    assert a.to_dict()["exhaustive"] is True


def test_certified_implies_end_to_end():
    for p in list(valid_tuples(6, k_equals_n=True))[::7]:
        s = build_scheme(p, seed=1)
        assert verify_all_active_sets(s).ok
        assert verify_end_to_end(s, trials=2, seed=2), p


def test_c1_report():
    s = build_scheme(SystemParams(12, 12, 11, 4, 3), seed=0)
    rep = null_space_report(s)
    assert all(rep.ok)
    assert set(rep.ranks) == {4 * 11 - 4}


def test_monte_carlo_is_reproducible():
    p = SystemParams(6, 6, 6, 2, 2, 101)
    a = monte_carlo_failure(p, 10, seed=3)
    b = monte_carlo_failure(p, 10, seed=3)
    assert a == b
    assert a.estimated_epsilon == a.failure_count / 10
    assert a.to_dict()["q"] == 101


# CYCLICIA_SCALE_SEEDS=100 runs the full-scale sweep (about 25 minutes on one core)
SCALE_SEEDS = int(os.environ.get("CYCLICIA_SCALE_SEEDS", "2"))


def test_every_small_tuple_certifies():
    failures = []
    for seed in range(SCALE_SEEDS):
        for p in valid_tuples(10, k_equals_n=True):
            try:
                build_scheme(p, seed=seed)
            except BuildFailure as exc:
                failures.append((seed, p, exc.condition))
    assert failures == []

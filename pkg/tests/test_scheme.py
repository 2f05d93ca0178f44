import json
from dataclasses import replace

import numpy as np
import pytest

from cyclicia.assign import missing_set
from cyclicia.fieldlin import PrimeField
from cyclicia.model import SystemParams, achievable_cost, valid_tuples, validate
from cyclicia.scheme import (
    BuildFailure,
    InvalidScheme,
    MissingSubmessage,
    Mode,
    SplitTooLarge,
    build_scheme,
    check_invariants,
    decode,
    encode,
    invariant_violations,
    lemma1_check,
    load_scheme,
    sample_demand,
    scheme_from_dict,
    scheme_from_matrices,
    scheme_to_dict,
    task_result,
    vandermonde_rows,
)
from cyclicia.verify import round_trip, verify_all_active_sets, verify_end_to_end

MODES = [
    ((5, 5, 5, 2, 2), Mode.ALIGNED),
    ((12, 12, 11, 4, 3), Mode.ALIGNED),
    ((12, 12, 11, 9, 3), Mode.NO_VIRTUAL),
    ((6, 6, 4, 2, 2), Mode.RANDOM_VIRTUAL),
    ((10, 5, 5, 1, 2), Mode.SINGLE_DEMAND),
    ((12, 12, 11, 10, 3), Mode.SPLIT),
    ((12, 4, 3, 5, 2), Mode.PADDED),
]


def fixture_scheme(doc, **overrides):
    p = SystemParams(**doc["params"])
    mats = {"F": doc["F"], "fprime": doc["Fprime"], "S": doc["S"], "E": doc["E"]}
    mats.update(overrides)
    return scheme_from_matrices(p, mats["F"], mats["fprime"], mats["S"], mats["E"], check=False)


@pytest.mark.parametrize("args,mode", MODES)
def test_every_mode_builds_and_decodes(args, mode):
    p = SystemParams(*args)
    s = build_scheme(p, seed=4)
    assert s.mode is mode
    assert s.normalized_cost() == achievable_cost(p)
    assert invariant_violations(s) == []
    assert verify_end_to_end(s, trials=4, seed=1, ell=2)


def test_aligned_structure():
    p = SystemParams(12, 12, 11, 4, 3)
    s = build_scheme(p, seed=0)
    f = s.field
    assert f.is_zero(f.matmul(s.fprime, s.E.T))
    assert f.rank(s.E) == s.E.shape[0] == p.K * (p.m - 1)
    assert all(lemma1_check(s.core))
    dv = validate(p)
    for n in range(1, p.N + 1):
        assert f.rank(s.core.fprime_n(n)) == dv.u * p.Nr - dv.u


def test_build_is_reproducible():
    p = SystemParams(12, 12, 11, 4, 3)
    a, b = build_scheme(p, seed=9), build_scheme(p, seed=9)
    assert json.dumps(scheme_to_dict(a)) == json.dumps(scheme_to_dict(b))
    c = build_scheme(p, seed=10)
    assert not np.array_equal(a.F, c.F)


def test_symbol_accounting_matches_cost():
    p = SystemParams(12, 12, 11, 4, 3)
    s = build_scheme(p, seed=2)
    rng = np.random.default_rng(0)
    ell = 3
    W = s.field.random(rng, (p.K, s.d * ell))
    sent = {n: encode(s, n, {k: W[k - 1] for k in s.assignment.z(n)}) for n in range(1, p.N + 1)}
    for X in sent.values():
        assert X.size == s.rows_per_worker * ell
    active = list(range(2, 13))
    assert sum(sent[n].size for n in active) == achievable_cost(p) * s.d * ell
    assert np.array_equal(decode(s, active, sent), task_result(s, W))


def test_encode_refuses_missing_message():
    p = SystemParams(5, 5, 5, 2, 2)
    s = build_scheme(p, seed=0)
    held = {k: np.zeros(s.d, dtype=np.int64) for k in s.assignment.z(1)}
    held.pop(held and min(held))
    with pytest.raises(MissingSubmessage):
        encode(s, 1, held)
    with pytest.raises(ValueError):
        encode(s, 1, {k: np.zeros(s.d + 1, dtype=np.int64) for k in s.assignment.z(1)})


def test_serialization_round_trip(tmp_path):
    s = build_scheme(SystemParams(12, 12, 11, 10, 3), seed=1)
    path = tmp_path / "scheme.json"
    s.dump(path)
    back = load_scheme(path)
    assert back.mode is s.mode and back.d == s.d
    assert json.dumps(scheme_to_dict(back)) == path.read_text()
    assert verify_end_to_end(back, trials=2)


def test_corrupted_scheme_rejected_on_load():
    s = build_scheme(SystemParams(5, 5, 5, 2, 2), seed=0)
    doc = scheme_to_dict(s)
    text = json.dumps(doc)
    bad = json.loads(text)
    comp = bad["components"][0]
    comp["coding"][0][0][0] = (comp["coding"][0][0][0] + 1) % s.field.q
    with pytest.raises(InvalidScheme):
        scheme_from_dict(bad)
    bad = json.loads(text)
    bad["components"][0]["E"][0][0] = -1
    with pytest.raises((InvalidScheme, ValueError)):
        scheme_from_dict(bad)


def test_foreign_coefficients_detected():
    s = build_scheme(SystemParams(5, 5, 5, 2, 2), seed=0)
    core = s.core
    f = s.field
    rng = np.random.default_rng(0)
    coding = list(core.coding)
    coding[0] = f.random(rng, coding[0].shape)
    broken = replace(s, components=(replace(s.components[0], core=replace(core, coding=tuple(coding))),))
    problems = invariant_violations(broken)
    assert any("worker 1" in msg for msg in problems)
    with pytest.raises(InvalidScheme):
        check_invariants(broken)


def test_split_guard():
    p = SystemParams(24, 24, 23, 24, 20)
    with pytest.raises(SplitTooLarge):
        build_scheme(p, certify=False, split_cap=10)
    with pytest.raises(SplitTooLarge):
        build_scheme(SystemParams(12, 12, 11, 10, 3, 7), certify=False)


def test_retry_budget_exhaustion():
    # over GF(2) every draw of a 2-row alignment construction collapses
    p = SystemParams(6, 6, 6, 2, 2, 2)
    with pytest.raises(BuildFailure) as info:
        build_scheme(p, seed=0, max_attempts=3)
    assert info.value.attempts == 3


def test_vandermonde_rows():
    assert vandermonde_rows(3, 3, 7).tolist() == [[1, 1, 1], [1, 2, 4], [1, 3, 2]]


def test_supplied_demand_is_used():
    p = SystemParams(6, 6, 6, 2, 2)
    F = [[1, 1, 1, 1, 1, 1], [1, 2, 3, 4, 5, 6]]
    s = build_scheme(p, F=F, seed=0)
    assert s.F.tolist() == F
    with pytest.raises(ValueError):
        build_scheme(p, F=[[1, 1, 1, 1, 1, 1], [2, 2, 2, 2, 2, 2]])


def test_sampled_demand_has_full_rank():
    f = PrimeField(7)
    rng = np.random.default_rng(0)
    p = SystemParams(6, 6, 6, 6, 2, 7)
    for _ in range(20):
        assert f.rank(sample_demand(p, rng, f)) == 6


def test_cost_matches_formula_for_small_tuples():
    for p in valid_tuples(8):
        s = build_scheme(p, seed=0, certify=False)
        assert s.normalized_cost() == achievable_cost(p), p


def test_workers_never_touch_absent_datasets():
    for args, _ in MODES:
        p = SystemParams(*args)
        s = build_scheme(p, seed=3, certify=False)
        from cyclicia.scheme import effective_coefficients
        for comp in s.components:
            for n in range(1, p.N + 1):
                eff = effective_coefficients(s, comp, n)
                for k in missing_set(s.assignment, n):
                    assert not eff[:, :, k - 1].any()


# --- worked examples ----------------------------------------------------------


def test_small_example_matrices(example_5):
    s = fixture_scheme(example_5)
    f = s.field
    E = f.array(example_5["E"])
    assert E[0].tolist() == f.array(example_5["e1"]).tolist()
    assert f.is_zero(f.matmul(s.fprime, E.T))
    assert invariant_violations(s) == []
    assert f.rank(f.array(example_5["S"])) == 10
    rng = np.random.default_rng(0)
    for active in ([1, 2, 3, 4, 5],):
        W = f.random(rng, (5, 3))
        assert round_trip(s, W, active)


def test_larger_example_row_fix(example_6):
    """Row 1 of the frozen alignment fixture misses F'; zeroing its middle layer fixes it."""
    f = PrimeField()
    E = f.array(example_6["E"])
    Fp = f.array(example_6["Fprime"])
    bad = np.nonzero(f.matmul(Fp, E.T).any(axis=0))[0]
    assert bad.tolist() == [0]
    fixed = E.copy()
    fixed[0, 6:12] = 0
    assert f.is_zero(f.matmul(Fp, fixed.T))
    s = fixture_scheme(example_6, E=fixed)
    assert invariant_violations(s) == []
    assert verify_all_active_sets(s).ok

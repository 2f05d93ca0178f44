"""Exhaustive and Monte-Carlo decodability checks for built schemes."""
from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .assign import mod1
from ._kernels import block_subsets_nonsingular
from .fieldlin import PrimeField, SingularMatrix
from .model import SystemParams, validate
from .scheme import (
    BuildFailure,
    Mode,
    Scheme,
    build_scheme,
    decode,
    encode,
    lemma1_check,
    task_result,
)

SET_CAP = 100_000
_BATCH_ENTRIES = 4_000_000  # cap on B*R*R per sampled nonsingularity batch


@dataclass(frozen=True)
class VerifyReport:
    total_active_sets: int
    checked_sets: int
    exhaustive: bool
    failures: tuple[tuple[int, ...], ...]
    c1_ok: tuple[bool, ...]
    lemma1_ok: tuple[bool, ...]
    fragment_code_ok: bool
    seed: int | None

    @property
    def ok(self) -> bool:
        return not self.failures and all(self.c1_ok) and all(self.lemma1_ok) and self.fragment_code_ok

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["failures"] = [list(a) for a in self.failures]
        doc["c1_ok"] = list(self.c1_ok)
        doc["lemma1_ok"] = list(self.lemma1_ok)
        doc["ok"] = self.ok
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class MonteCarloReport:
    trials: int
    q: int
    failure_count: int
    estimated_epsilon: Fraction
    first_attempt_failures: int
    first_attempt_epsilon: Fraction

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "q": self.q,
            "failure_count": self.failure_count,
            "estimated_epsilon": str(self.estimated_epsilon),
            "first_attempt_failures": self.first_attempt_failures,
            "first_attempt_epsilon": str(self.first_attempt_epsilon),
        }


@dataclass(frozen=True)
class NullSpaceReport:
    ranks: tuple[int, ...]
    null_dims: tuple[int, ...]
    needed: int
    rows_in_null_space: tuple[bool, ...]

    @property
    def ok(self) -> tuple[bool, ...]:
        return tuple(dim >= self.needed and inside
                     for dim, inside in zip(self.null_dims, self.rows_in_null_space))


def adjacent_straggler_sets(N: int, Nr: int) -> list[tuple[int, ...]]:
    """The N active sets whose N - Nr stragglers are cyclically consecutive."""
    out = set()
    for start in range(1, N + 1):
        gone = {mod1(start + o, N) for o in range(N - Nr)}
        out.add(tuple(n for n in range(1, N + 1) if n not in gone))
    return sorted(out)


def active_sets(N: int, Nr: int, cap: int = SET_CAP, seed: int = 0):
    """(sets, exhaustive): all C(N, Nr) sets, or a sample plus adjacent patterns above ``cap``."""
    total = math.comb(N, Nr)
    if total <= cap:
        return list(itertools.combinations(range(1, N + 1), Nr)), True
    chosen = set(adjacent_straggler_sets(N, Nr))
    rng = np.random.default_rng(seed)
    while len(chosen) < cap:
        chosen.add(tuple(sorted(int(x) + 1 for x in rng.choice(N, Nr, replace=False))))
    return sorted(chosen), False


@functools.lru_cache(maxsize=256)
def _complement_order(N: int, Nr: int) -> np.ndarray:
    """Position in lexicographic active-set order of the complement of each straggler set."""
    where = {A: i for i, A in enumerate(itertools.combinations(range(1, N + 1), Nr))}
    gone = itertools.combinations(range(1, N + 1), N - Nr)
    return np.array([where[tuple(n for n in range(1, N + 1) if n not in S)] for S in gone],
                    dtype=np.int64)


def _component_ok(scheme: Scheme, coding, sets, exhaustive: bool) -> np.ndarray:
    """Invertibility of S^A for each set in ``sets`` for one component.

    When the stragglers carry fewer rows than the responders the check runs on
    the dual: with G spanning the left kernel of the full-column-rank coding
    matrix S, S^A is invertible iff G restricted to the straggler rows is.
    """
    field = scheme.field
    N, Nr = scheme.params.N, scheme.params.Nr
    rows = coding[0].shape[0]
    R = rows * Nr
    full = np.vstack(coding)
    g = full.shape[0] - R
    if g < R:
        dual = field.left_null_basis(full)
        if dual.shape[0] > g:
            return np.zeros(len(sets), dtype=bool)
        if g == 0:
            return np.ones(len(sets), dtype=bool)
        blocks = np.ascontiguousarray(dual.T.reshape(N, rows, g))
        if exhaustive:
            ok = np.empty(len(sets), dtype=bool)
            ok[_complement_order(N, Nr)] = block_subsets_nonsingular(blocks, N - Nr, field.q)
            return ok
        pick = [[n for n in range(1, N + 1) if n not in set(A)] for A in sets]
    else:
        blocks = full.reshape(N, rows, R)
        if exhaustive:
            return block_subsets_nonsingular(blocks, Nr, field.q)
        pick = [list(A) for A in sets]
    # transposing each square block leaves its rank unchanged
    idx = np.array(pick, dtype=np.int64) - 1
    size = blocks.shape[-1]
    step = max(1, _BATCH_ENTRIES // (size * size))
    ok = np.empty(len(sets), dtype=bool)
    for start in range(0, len(sets), step):
        stack = blocks[idx[start:start + step]].reshape(-1, size, size)
        ok[start:start + step] = field.nonsingular_batch(stack)
    return ok


def _singular_sets(scheme: Scheme, sets, exhaustive: bool) -> set[tuple[int, ...]]:
    bad = np.zeros(len(sets), dtype=bool)
    for comp in scheme.components:
        bad |= ~_component_ok(scheme, comp.core.coding, sets, exhaustive)
    return {sets[i] for i in np.flatnonzero(bad)}


def fragment_code_ok(scheme: Scheme) -> bool:
    """Each demand's fragment-mixing system is invertible (always true off Split)."""
    if scheme.mode is not Mode.SPLIT:
        return True
    field = scheme.field
    for i in range(scheme.params.Kc):
        alpha = np.array([c.frag_weights for c in scheme.components if i in c.demand_ids])
        try:
            field.invert(alpha)
        except SingularMatrix:
            return False
    return True


def null_space_report(scheme: Scheme) -> NullSpaceReport:
    """Rank and left-null dimension of every F'(n), over all components."""
    field = scheme.field
    ranks, dims, inside = [], [], []
    needed = 0
    for n in range(1, scheme.params.N + 1):
        r_tot = dim_tot = 0
        good = True
        for comp in scheme.components:
            core = comp.core
            fn = core.fprime_n(n)
            r = field.rank(fn)
            r_tot += r
            dim_tot += fn.shape[0] - r
            good &= field.is_zero(field.matmul(core.coding[n - 1], fn))
        ranks.append(r_tot)
        dims.append(dim_tot)
        inside.append(bool(good))
    needed = sum(c.core.rows_per_worker for c in scheme.components)
    return NullSpaceReport(tuple(ranks), tuple(dims), needed, tuple(inside))


def verify_all_active_sets(scheme: Scheme, *, cap: int = SET_CAP, seed: int = 0,
                           structural: bool = False) -> VerifyReport:
    """Nonsingularity of S^A over every active set (sampled above ``cap``).

    ``structural`` additionally runs the per-worker null-space and alignment
    rank checks; otherwise those fields are reported as passing.
    """
    p = scheme.params
    sets, exhaustive = active_sets(p.N, p.Nr, cap, seed)
    frag_ok = fragment_code_ok(scheme)
    bad = _singular_sets(scheme, sets, exhaustive)
    if not frag_ok:
        bad = set(sets)
    if structural:
        c1 = null_space_report(scheme).ok
        lemma = tuple(all(col) for col in zip(*(lemma1_check(c.core) for c in scheme.components)))
    else:
        c1 = lemma = (True,) * p.N
    return VerifyReport(
        total_active_sets=math.comb(p.N, p.Nr),
        checked_sets=len(sets),
        exhaustive=exhaustive,
        failures=tuple(sorted(bad)),
        c1_ok=tuple(c1),
        lemma1_ok=tuple(lemma),
        fragment_code_ok=frag_ok,
        seed=scheme.seed,
    )


def random_messages(scheme: Scheme, rng, ell: int = 1) -> np.ndarray:
    return scheme.field.random(rng, (scheme.params.K, scheme.d * ell))


def round_trip(scheme: Scheme, W: np.ndarray, active) -> bool:
    """Encode at every active worker from its own datasets, decode, compare with F @ W."""
    msgs = {k: W[k - 1] for k in range(1, scheme.params.K + 1)}
    received = {}
    for n in active:
        held = {k: msgs[k] for k in scheme.assignment.z(n)}
        received[n] = encode(scheme, n, held)
    return np.array_equal(decode(scheme, active, received), task_result(scheme, W))


def verify_end_to_end(scheme: Scheme, trials: int = 10, seed: int = 0, ell: int = 1) -> bool:
    """Random W and a random active set per trial; True iff every decode is exact."""
    p = scheme.params
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        W = random_messages(scheme, rng, ell)
        active = sorted(int(x) + 1 for x in rng.choice(p.N, p.Nr, replace=False))
        try:
            if not round_trip(scheme, W, active):
                return False
        except (SingularMatrix, ArithmeticError, RuntimeError):
            return False
    return True


def monte_carlo_failure(p: SystemParams, trials: int, seed: int = 0, *,
                        max_attempts: int = 16) -> MonteCarloReport:
    """Build-and-certify ``trials`` times with fresh demand matrices.

    ``failure_count`` counts builds that exhaust the retry budget;
    ``first_attempt_failures`` counts builds whose first draw was rejected.
    """
    validate(p)
    PrimeField(p.q)
    fails = first = 0
    for t in range(trials):
        trial_seed = int(np.random.SeedSequence([seed, t]).generate_state(1)[0])
        try:
            scheme = build_scheme(p, seed=trial_seed, max_attempts=max_attempts)
        except BuildFailure:
            fails += 1
            first += 1
            continue
        if scheme.attempts > 1:
            first += 1
    denom = max(trials, 1)
    return MonteCarloReport(
        trials=trials,
        q=p.q,
        failure_count=fails,
        estimated_epsilon=Fraction(fails, denom),
        first_attempt_failures=first,
        first_attempt_epsilon=Fraction(first, denom),
    )

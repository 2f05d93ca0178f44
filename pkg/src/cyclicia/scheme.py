"""Interference-alignment coding schemes under the cyclic assignment.

A built :class:`Scheme` is a list of :class:`Component` objects.  Each
component wraps one *direct* instance (a :class:`Core`): an effective demand
matrix ``fprime`` whose first ``kc*d`` rows replicate the demand matrix once
per sub-message layer, the rank-reduction matrix ``E`` and, per worker, a
block of coding rows that annihilate every column the worker cannot compute.

Direct and padded builds have a single component.  Demands with
``Kc < K/N`` are served one row at a time on residue-class super-messages,
and ``Kc`` beyond the large-regime boundary is split into ``C(Kc, c)``
sub-problems whose message fragments are mixed by a Vandermonde code.

Column ``(j-1)*K + (k-1)`` of ``fprime`` is sub-message ``j`` of message
``W_k`` (0-based array index, 1-based dataset/layer labels).
"""
from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .assign import Assignment, AssignmentKind, cyclic_assignment, missing_set, mod1
from .fieldlin import PrimeField, SingularMatrix
from .model import Regime, SystemParams, validate

MAX_ATTEMPTS = 16
SPLIT_CAP = 10_000
SCHEME_FORMAT = "cyclicia-scheme/1"


class Mode(enum.Enum):
    NO_VIRTUAL = "NoVirtual"
    RANDOM_VIRTUAL = "RandomVirtual"
    ALIGNED = "Aligned"
    PADDED = "Padded"
    SPLIT = "Split"
    SINGLE_DEMAND = "SingleDemandRepetition"
    REPETITION = "RepetitionAssignment"


class SchemeError(RuntimeError):
    """A rank condition failed for this draw of randomness."""


class RegimeMismatch(SchemeError):
    pass


class RankDeficientE(SchemeError):
    pass


class Lemma1Failure(SchemeError):
    pass


class ExtensionFailure(SchemeError):
    pass


class InsufficientNullSpace(SchemeError):
    pass


class SingularSA(SchemeError):
    pass


class MissingSubmessage(SchemeError):
    pass


class InvalidScheme(SchemeError):
    pass


class SplitTooLarge(ValueError):
    pass


class BuildFailure(RuntimeError):
    def __init__(self, condition: str, attempts: int):
        super().__init__(f"scheme build failed after {attempts} attempts: {condition}")
        self.condition = condition
        self.attempts = attempts


@dataclass(frozen=True)
class AlignmentVector:
    e: np.ndarray
    origin: tuple[int, int, int]  # (i, t, v), 1-based


@dataclass(frozen=True, eq=False)
class Core:
    params: SystemParams  # Kc here is the (possibly padded) row count of F
    F: np.ndarray
    d: int
    fprime: np.ndarray
    E: np.ndarray
    origins: tuple[tuple[int, int, int], ...]
    coding: tuple[np.ndarray, ...]
    mode: Mode
    zsets: tuple[tuple[int, ...], ...]

    @property
    def ratio(self) -> int:
        return self.params.K // self.params.N

    @property
    def u(self) -> int:
        return self.params.Kc // self.ratio

    @property
    def rows_per_worker(self) -> int:
        return self.ratio * self.u

    def missing_columns(self, n: int) -> list[int]:
        K = self.params.K
        have = set(self.zsets[n - 1])
        miss = [k for k in range(1, K + 1) if k not in have]
        return [j * K + k - 1 for j in range(self.d) for k in miss]

    def fprime_n(self, n: int) -> np.ndarray:
        return self.fprime[:, self.missing_columns(n)]

    def coding_matrix(self, active: Iterable[int]) -> np.ndarray:
        return np.vstack([self.coding[n - 1] for n in sorted(active)])


@dataclass(frozen=True, eq=False)
class Component:
    core: Core
    row_map: np.ndarray  # core message k' = sum_k row_map[k', k] * W_k
    frag_weights: np.ndarray  # mixing weights over the message fragments
    n_real: int
    demand_ids: tuple[int, ...]  # 0-based rows of the top-level demand matrix


@dataclass(frozen=True, eq=False)
class Scheme:
    params: SystemParams
    field: PrimeField
    F: np.ndarray
    assignment: Assignment
    mode: Mode
    d: int  # every message is cut into d equal sub-messages
    n_fragments: int
    components: tuple[Component, ...]
    seed: int | None = None
    attempts: int = 1
    subsets: tuple[tuple[int, ...], ...] = dc_field(default=())

    @property
    def core(self) -> Core:
        if len(self.components) != 1:
            raise ValueError(f"{self.mode.value} scheme has {len(self.components)} components")
        return self.components[0].core

    @property
    def fprime(self) -> np.ndarray:
        return self.core.fprime

    @property
    def E(self) -> np.ndarray:
        return self.core.E

    @property
    def coding_blocks(self) -> tuple[np.ndarray, ...]:
        return self.core.coding

    @property
    def rows_per_worker(self) -> int:
        return sum(c.core.rows_per_worker for c in self.components)

    def normalized_cost(self):
        from fractions import Fraction

        return Fraction(self.params.Nr * self.rows_per_worker, self.d)

    def to_dict(self) -> dict:
        return scheme_to_dict(self)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(scheme_to_dict(self)))


# --- pieces of the construction -------------------------------------------


def sample_demand(p: SystemParams, rng: np.random.Generator, field: PrimeField | None = None,
                  max_tries: int = 64) -> np.ndarray:
    """Uniform i.i.d. Kc x K demand matrix, redrawn until it has full row rank."""
    field = field or PrimeField(p.q)
    for _ in range(max_tries):
        F = field.random(rng, (p.Kc, p.K))
        if field.rank(F) == p.Kc:
            return F
    raise SchemeError(f"no full-rank {p.Kc}x{p.K} demand after {max_tries} draws")


def block_diag(F: np.ndarray, d: int) -> np.ndarray:
    rows, cols = F.shape
    out = np.zeros((rows * d, cols * d), dtype=np.int64)
    for j in range(d):
        out[j * rows:(j + 1) * rows, j * cols:(j + 1) * cols] = F
    return out


def interference_sets(p: SystemParams, i: int):
    """(N_i, K_i, Q_i): N_r-m-u adjacent workers that all miss the datasets Q_i."""
    dv = validate(p)
    u, N = dv.u, p.N
    if u > p.Nr - p.m - 1:
        raise RegimeMismatch(f"alignment needs u <= Nr-m-1, got u={u} for {p}")
    workers = tuple(mod1(i + o, N) for o in range(p.Nr - p.m - u))
    residues = tuple(mod1(i - 1 - o, N) for o in range(u + 1))
    datasets = tuple(sorted(k + t * N for t in range(dv.ratio) for k in residues))
    return workers, residues, datasets


def _pick(basis: np.ndarray, count: int, rng, field: PrimeField, what: str) -> np.ndarray:
    """``count`` independent rows from the span of ``basis``."""
    if basis.shape[0] < count:
        raise InsufficientNullSpace(f"{what}: null space has dimension {basis.shape[0]} < {count}")
    if basis.shape[0] == count:
        return basis
    for _ in range(8):
        rows = field.matmul(field.random(rng, (count, basis.shape[0])), basis)
        if field.rank(rows) == count:
            return rows
    raise InsufficientNullSpace(f"{what}: could not draw {count} independent rows")


def alignment_vectors(F: np.ndarray, p: SystemParams, rng, field: PrimeField) -> list[AlignmentVector]:
    """K(m-1) rank-reduction vectors e_{i,t,v}, ordered by (i, t, v)."""
    dv = validate(p)
    K, d, ratio = p.K, dv.d, dv.ratio
    out = []
    for i in range(1, p.N + 1):
        _, _, Q = interference_sets(p, i)
        cols = [k - 1 for k in Q]
        Y = _pick(field.right_null_basis(F[:, cols]), ratio, rng, field, f"y vectors of Q_{i}")
        for t in range(1, ratio + 1):
            for v in range(1, p.m):
                e = np.zeros(K * d, dtype=np.int64)
                for j in range(d):
                    r = int(field.random(rng, (), nonzero=True))
                    e[[j * K + c for c in cols]] = Y[t - 1] * r % field.q
                out.append(AlignmentVector(e, (i, t, v)))
    return out


def solve_virtual_demands(F: np.ndarray, E: np.ndarray, p: SystemParams, rng,
                          field: PrimeField) -> np.ndarray:
    """Extend the replicated real demands by rows of left-null(E^T) up to full rank."""
    dv = validate(p)
    K, d = p.K, dv.d
    target = dv.ratio * dv.u * p.Nr
    real = block_diag(F, d)
    if E.shape[0] and not field.is_zero(field.matmul(real, E.T)):
        raise ExtensionFailure("real demand rows are not orthogonal to E")
    basis = field.right_null_basis(E) if E.shape[0] else field.eye(K * d)
    extra = target - real.shape[0]
    if extra == 0:
        return real
    for _ in range(8):
        virt = field.matmul(field.random(rng, (extra, basis.shape[0])), basis)
        fprime = np.vstack([real, virt])
        if field.rank(fprime) == target:
            return fprime
    raise ExtensionFailure(f"left-null(E^T) of dimension {basis.shape[0]} cannot reach rank {target}")


def _structured_coding(F: np.ndarray, zsets, p: SystemParams, rng, field: PrimeField):
    dv = validate(p)
    K, d, ratio, need = p.K, dv.d, dv.ratio, dv.ratio * dv.u
    miss = np.array([[k - 1 for k in range(1, K + 1) if k not in set(z)] for z in zsets],
                    dtype=np.int64).reshape(p.N, -1)
    # left-null vectors of F[:, miss_n] are right-null vectors of its transpose
    s, full_rank = field.right_null_batch(np.ascontiguousarray(F[:, miss].transpose(1, 2, 0)))
    mult = field.random(rng, (p.N, ratio, dv.u, d))
    blocks = []
    for n in range(p.N):
        sn = s[n] if full_rank[n] else _pick(field.left_null_basis(F[:, miss[n]]), ratio, rng, field,
                                             f"demand columns of worker {n + 1}")
        # row (k, j) is [mult[k, j, 0] s_k, ..., mult[k, j, d-1] s_k]
        blocks.append((mult[n][:, :, :, None] * sn[:, None, None, :] % field.q).reshape(need, -1))
    return tuple(blocks)


def coding_vectors(fprime: np.ndarray, zsets, p: SystemParams, rng, field: PrimeField,
                   F: np.ndarray | None = None) -> tuple[np.ndarray, ...]:
    """Per-worker (K/N)u left-null rows of F'(n).

    With ``F`` given (the u = Nr-m+1 case, no virtual rows) the rows are built
    structurally from left-null vectors of the demand columns the worker misses.
    """
    if F is not None:
        return _structured_coding(F, zsets, p, rng, field)
    dv = validate(p)
    K, d, need = p.K, dv.d, dv.ratio * dv.u
    blocks = []
    for n in range(1, p.N + 1):
        have = set(zsets[n - 1])
        cols = [j * K + k - 1 for j in range(d) for k in range(1, K + 1) if k not in have]
        basis = field.left_null_basis(fprime[:, cols])
        blocks.append(_pick(basis, need, rng, field, f"F'({n})"))
    return tuple(blocks)


def lemma1_check(core: Core) -> list[bool]:
    """Per worker: are the alignment vectors serving it linearly independent?"""
    p = core.params
    if core.mode is not Mode.ALIGNED or p.m == 1:
        return [True] * p.N
    members = {i: set(interference_sets(p, i)[0]) for i in range(1, p.N + 1)}
    field = PrimeField(p.q)
    out = []
    for n in range(1, p.N + 1):
        idx = [r for r, (i, _, _) in enumerate(core.origins) if n in members[i]]
        out.append(field.rank(core.E[idx]) == len(idx))
    return out


def build_core(F: np.ndarray, p: SystemParams, rng, field: PrimeField) -> Core:
    """Direct construction for Kc = (K/N)u with u <= Nr-m+1."""
    dv = validate(p)
    if p.Kc != dv.ratio * dv.u or dv.u > p.Nr - p.m + 1:
        raise RegimeMismatch(f"direct build needs Kc = (K/N)u with u <= Nr-m+1, got {p}")
    if F.shape != (p.Kc, p.K):
        raise ValueError(f"demand matrix shape {F.shape} != {(p.Kc, p.K)}")
    zsets = cyclic_assignment(p).zsets
    E = np.zeros((0, p.K * dv.d), dtype=np.int64)
    origins: tuple = ()
    if dv.u == p.Nr - p.m + 1:
        mode = Mode.NO_VIRTUAL
        fprime = block_diag(F, dv.d)
        coding = coding_vectors(fprime, zsets, p, rng, field, F=F)
    else:
        if dv.u == p.Nr - p.m:
            mode = Mode.RANDOM_VIRTUAL
        else:
            mode = Mode.ALIGNED
            vecs = alignment_vectors(F, p, rng, field)
            if vecs:
                E = np.array([v.e for v in vecs], dtype=np.int64)
                origins = tuple(v.origin for v in vecs)
                if field.rank(E) != E.shape[0]:
                    raise RankDeficientE(f"E has rank {field.rank(E)} < {E.shape[0]}")
        fprime = solve_virtual_demands(F, E, p, rng, field)
        coding = None
    core = Core(p, F, dv.d, fprime, E, origins, (), mode, zsets)
    if mode is Mode.ALIGNED:
        bad = [n for n, ok in enumerate(lemma1_check(core), 1) if not ok]
        if bad:
            raise Lemma1Failure(f"alignment vectors dependent for workers {bad}")
    if coding is None:
        coding = coding_vectors(fprime, zsets, p, rng, field)
    return replace(core, coding=coding)


def reduce_single_demand(F_row: np.ndarray, p: SystemParams, rng, field: PrimeField,
                         demand_id: int = 0) -> Component:
    """One demand row on residue-class super-messages W'_j = sum_p f_{j+pN} W_{j+pN}."""
    validate(p)
    sub = SystemParams(p.N, p.N, p.Nr, 1, p.m, p.q)
    row_map = np.zeros((p.N, p.K), dtype=np.int64)
    for k in range(1, p.K + 1):
        row_map[mod1(k, p.N) - 1, k - 1] = F_row[k - 1]
    core = build_core(np.ones((1, p.N), dtype=np.int64), sub, rng, field)
    return Component(core, row_map, np.ones(1, dtype=np.int64), 1, (demand_id,))


def vandermonde_rows(count: int, width: int, q: int) -> np.ndarray:
    """Row s is (1, x, x^2, ..., x^(width-1)) mod q at node x = s + 1."""
    out = np.ones((count, width), dtype=np.int64)
    nodes = np.arange(1, count + 1, dtype=np.int64) % q
    for e in range(1, width):
        out[:, e] = out[:, e - 1] * nodes % q
    return out


def _build_once(p: SystemParams, F: np.ndarray, rng, field: PrimeField, split_cap: int) -> Scheme:
    dv = validate(p)
    ratio = dv.ratio
    assignment = cyclic_assignment(p)
    eye = field.eye(p.K)
    one = np.ones(1, dtype=np.int64)
    if p.Kc < ratio:
        comps = tuple(reduce_single_demand(F[r], p, rng, field, r) for r in range(p.Kc))
        return Scheme(p, field, F, assignment, Mode.SINGLE_DEMAND, p.m, 1, comps)
    if dv.regime is Regime.LARGE_KC:
        c = dv.large_boundary
        count = math.comb(p.Kc, c)
        if count > split_cap or count >= p.q:
            raise SplitTooLarge(f"split needs C({p.Kc},{c}) = {count} sub-problems (cap {split_cap}, q={p.q})")
        frags = math.comb(p.Kc - 1, c - 1)
        sub = p.replace(Kc=c)
        subsets = tuple(itertools.combinations(range(p.Kc), c))
        alpha = vandermonde_rows(count, frags, p.q)
        comps = []
        for s, S in enumerate(subsets):
            core = build_core(F[list(S)], sub, rng, field)
            comps.append(Component(core, eye, alpha[s], c, S))
        return Scheme(p, field, F, assignment, Mode.SPLIT, frags * p.Nr, frags, tuple(comps),
                      subsets=subsets)
    kc = ratio * dv.u
    Fp = F
    if kc > p.Kc:
        for _ in range(8):
            Fp = np.vstack([F, field.random(rng, (kc - p.Kc, p.K))])
            if field.rank(Fp) == kc:
                break
        else:
            raise ExtensionFailure("could not pad the demand matrix to full rank")
    core = build_core(Fp, p.replace(Kc=kc), rng, field)
    mode = Mode.PADDED if kc > p.Kc else core.mode
    comp = Component(core, eye, one, p.Kc, tuple(range(p.Kc)))
    return Scheme(p, field, F, assignment, mode, core.d, 1, (comp,))


def build_scheme(p: SystemParams, F=None, seed: int = 0, *, certify: bool = True,
                 max_attempts: int = MAX_ATTEMPTS, split_cap: int = SPLIT_CAP) -> Scheme:
    """Build (and by default certify) a scheme, rebuilding on any rank failure.

    Attempt ``a`` draws all randomness from ``default_rng([seed, a])``; when
    ``F`` is None it is sampled from that generator too.  Certification runs
    the exhaustive (or capped) active-set check.
    """
    from .verify import verify_all_active_sets

    validate(p)
    field = PrimeField(p.q)
    if F is not None:
        F = field.array(F)
        if F.shape != (p.Kc, p.K):
            raise ValueError(f"demand matrix shape {F.shape} != {(p.Kc, p.K)}")
        if field.rank(F) != p.Kc:
            raise ValueError("demand matrix must have full row rank")
    last = "no attempts made"
    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt])
        try:
            Fa = F if F is not None else sample_demand(p, rng, field)
            scheme = _build_once(p, Fa, rng, field, split_cap)
            scheme = replace(scheme, seed=seed, attempts=attempt + 1)
            if certify:
                report = verify_all_active_sets(scheme)
                if report.failures:
                    raise SingularSA(f"S^A singular for {len(report.failures)} active sets, "
                                     f"first {report.failures[0]}")
            return scheme
        except SchemeError as exc:
            last = f"{type(exc).__name__}: {exc}"
    raise BuildFailure(last, max_attempts)


# --- encoding / decoding -----------------------------------------------------


def effective_coefficients(scheme: Scheme, comp: Component, n: int) -> np.ndarray:
    """(rows, d_core, K) coefficients of worker n's rows on the original messages."""
    field = scheme.field
    core = comp.core
    coef = field.matmul(core.coding[n - 1], core.fprime)
    rows = coef.shape[0]
    coef = coef.reshape(rows * core.d, core.params.K)
    return field.matmul(coef, comp.row_map).reshape(rows, core.d, scheme.params.K)


def message_length_ok(scheme: Scheme, L: int) -> bool:
    return L > 0 and L % scheme.d == 0


def encode(scheme: Scheme, n: int, messages: Mapping[int, np.ndarray]) -> np.ndarray:
    """Worker n's transmission (rows x ell) computed from the messages it holds.

    ``messages`` maps 1-based dataset index to a length-L message; only the
    entries of Z_n need to be present.  A nonzero coefficient on an absent
    message raises :class:`MissingSubmessage`.
    """
    field = scheme.field
    K = scheme.params.K
    lengths = {len(np.asarray(w)) for w in messages.values()}
    if len(lengths) != 1:
        raise ValueError("messages must share one length")
    L = lengths.pop()
    if not message_length_ok(scheme, L):
        raise ValueError(f"message length {L} not divisible by d={scheme.d}")
    ell = L // scheme.d
    out = []
    for comp in scheme.components:
        eff = effective_coefficients(scheme, comp, n)
        rows, dc, _ = eff.shape
        X = np.zeros((rows, ell), dtype=np.int64)
        P = len(comp.frag_weights)
        for k in range(1, K + 1):
            c = eff[:, :, k - 1]
            if not c.any():
                continue
            if k not in messages:
                raise MissingSubmessage(f"worker {n} needs absent message W_{k}")
            w = field.array(messages[k]).reshape(P, dc, ell)
            mixed = np.zeros((dc, ell), dtype=np.int64)
            for p_, wt in enumerate(comp.frag_weights):
                mixed = (mixed + w[p_] * int(wt)) % field.q
            X = (X + field.matmul(c, mixed)) % field.q
        out.append(X)
    return np.vstack(out)


def decode(scheme: Scheme, active: Iterable[int], received: Mapping[int, np.ndarray]) -> np.ndarray:
    """Recover the Kc x L task F @ W from the transmissions of Nr active workers."""
    field = scheme.field
    p = scheme.params
    A = sorted(active)[: p.Nr]
    if len(A) < p.Nr:
        raise SingularSA(f"need {p.Nr} active workers, got {len(A)}")
    ell = np.asarray(received[A[0]]).shape[1]
    parts = []
    offset = 0
    for comp in scheme.components:
        core = comp.core
        rows = core.rows_per_worker
        X = np.vstack([np.asarray(received[n])[offset:offset + rows] for n in A])
        offset += rows
        S = core.coding_matrix(A)
        try:
            Y = field.matmul(field.invert(S), X)
        except SingularMatrix as exc:
            raise SingularSA(f"S^A singular for A={A}") from exc
        kc = core.params.Kc
        demands = np.hstack([Y[j * kc:(j + 1) * kc] for j in range(core.d)])
        parts.append(demands[: comp.n_real])
    L = scheme.d * ell
    out = np.zeros((p.Kc, L), dtype=np.int64)
    if scheme.mode is Mode.SPLIT:
        for i in range(p.Kc):
            members = [s for s, S in enumerate(scheme.subsets) if i in S]
            alpha = np.array([scheme.components[s].frag_weights for s in members])
            V = np.vstack([parts[s][scheme.subsets[s].index(i)] for s in members])
            out[i] = field.matmul(field.invert(alpha), V).reshape(L)
    else:
        for comp, part in zip(scheme.components, parts):
            out[list(comp.demand_ids)] = part
    return out


def task_result(scheme: Scheme, W: np.ndarray) -> np.ndarray:
    """Reference value F @ W computed centrally."""
    return scheme.field.matmul(scheme.F, scheme.field.array(W))


# --- serialization and invariant checks -------------------------------------


def _mat(a: np.ndarray) -> list:
    return np.asarray(a, dtype=np.int64).tolist()


def scheme_to_dict(scheme: Scheme) -> dict:
    comps = []
    for c in scheme.components:
        core = c.core
        comps.append({
            "mode": core.mode.value,
            "params": core.params.to_dict(),
            "d": core.d,
            "F": _mat(core.F),
            "fprime": _mat(core.fprime),
            "E": _mat(core.E),
            "E_cols": int(core.E.shape[1]),
            "origins": [list(o) for o in core.origins],
            "coding": [_mat(b) for b in core.coding],
            "row_map": _mat(c.row_map),
            "frag_weights": _mat(c.frag_weights),
            "n_real": c.n_real,
            "demand_ids": list(c.demand_ids),
        })
    return {
        "format": SCHEME_FORMAT,
        "modulus": scheme.field.q,
        "params": scheme.params.to_dict(),
        "mode": scheme.mode.value,
        "d": scheme.d,
        "n_fragments": scheme.n_fragments,
        "seed": scheme.seed,
        "attempts": scheme.attempts,
        "assignment": scheme.assignment.to_dict(),
        "F": _mat(scheme.F),
        "subsets": [list(s) for s in scheme.subsets],
        "components": comps,
    }


def scheme_from_dict(doc: dict, check: bool = True) -> Scheme:
    if doc.get("format") != SCHEME_FORMAT:
        raise InvalidScheme(f"unknown scheme format {doc.get('format')!r}")
    p = SystemParams.from_dict(doc["params"])
    field = PrimeField(int(doc["modulus"]))
    if field.q != p.q:
        raise InvalidScheme("modulus does not match params.q")

    def arr(x, cols=None):
        a = np.array(x, dtype=np.int64)
        if a.size == 0 and cols is not None:
            a = a.reshape(0, cols)
        return a

    comps = []
    for c in doc["components"]:
        cp = SystemParams.from_dict(c["params"])
        core = Core(
            params=cp,
            F=arr(c["F"]),
            d=int(c["d"]),
            fprime=arr(c["fprime"]),
            E=arr(c["E"], int(c["E_cols"])),
            origins=tuple(tuple(o) for o in c["origins"]),
            coding=tuple(arr(b) for b in c["coding"]),
            mode=Mode(c["mode"]),
            zsets=cyclic_assignment(cp).zsets,
        )
        comps.append(Component(core, arr(c["row_map"]), arr(c["frag_weights"]).reshape(-1),
                               int(c["n_real"]), tuple(c["demand_ids"])))
    scheme = Scheme(
        params=p,
        field=field,
        F=arr(doc["F"]),
        assignment=Assignment.from_dict(doc["assignment"], p.K),
        mode=Mode(doc["mode"]),
        d=int(doc["d"]),
        n_fragments=int(doc["n_fragments"]),
        components=tuple(comps),
        seed=doc.get("seed"),
        attempts=int(doc.get("attempts", 1)),
        subsets=tuple(tuple(s) for s in doc.get("subsets", ())),
    )
    if check:
        check_invariants(scheme)
    return scheme


def load_scheme(path, check: bool = True) -> Scheme:
    return scheme_from_dict(json.loads(Path(path).read_text()), check=check)


def scheme_from_matrices(p: SystemParams, F, fprime, S, E=None, mode: Mode | None = None,
                         check: bool = True) -> Scheme:
    """Wrap externally supplied F, F', S (and E) as a single direct scheme.

    ``S`` stacks every worker's coding rows, worker 1 first.
    """
    dv = validate(p)
    field = PrimeField(p.q)
    F, fprime, S = field.array(F), field.array(fprime), field.array(S)
    E = field.array(E) if E is not None else np.zeros((0, fprime.shape[1]), dtype=np.int64)
    rows = dv.ratio * dv.u
    coding = tuple(S[n * rows:(n + 1) * rows] for n in range(p.N))
    if mode is None:
        mode = Mode.ALIGNED if E.shape[0] else (
            Mode.NO_VIRTUAL if dv.u == p.Nr - p.m + 1 else Mode.RANDOM_VIRTUAL)
    core = Core(p, F, dv.d, fprime, E, (), coding, mode, cyclic_assignment(p).zsets)
    comp = Component(core, field.eye(p.K), np.ones(1, dtype=np.int64), p.Kc, tuple(range(p.Kc)))
    scheme = Scheme(p, field, F, cyclic_assignment(p), mode, dv.d, 1, (comp,))
    if check:
        check_invariants(scheme)
    return scheme


def invariant_violations(scheme: Scheme) -> list[str]:
    """Every structural invariant that fails (empty list means the scheme is sound)."""
    field = scheme.field
    q = field.q
    p = scheme.params
    problems = []
    if scheme.assignment.kind is not AssignmentKind.CYCLIC:
        problems.append("assignment is not cyclic")
    if scheme.d != scheme.n_fragments * (scheme.components[0].core.d if scheme.components else 0):
        problems.append("d does not equal fragments x core partitions")
    for ci, comp in enumerate(scheme.components):
        core = comp.core
        tag = f"component {ci}"
        mats = {"F": core.F, "fprime": core.fprime, "E": core.E, "row_map": comp.row_map}
        mats.update({f"coding[{n}]": b for n, b in enumerate(core.coding, 1)})
        for name, m in mats.items():
            if m.size and (m.min() < 0 or m.max() >= q):
                problems.append(f"{tag}: {name} has non-canonical entries")
        cp = core.params
        dv = validate(cp)
        target = dv.ratio * dv.u * cp.Nr
        if core.fprime.shape != (target, cp.K * core.d):
            problems.append(f"{tag}: F' shape {core.fprime.shape} != {(target, cp.K * core.d)}")
            continue
        kd = cp.Kc * core.d
        if not np.array_equal(core.fprime[:kd], block_diag(core.F, core.d)):
            problems.append(f"{tag}: leading rows of F' are not the replicated demand")
        if core.E.shape[0] and not field.is_zero(field.matmul(core.fprime, core.E.T)):
            problems.append(f"{tag}: F' E^T != 0")
        if field.rank(core.fprime) != target:
            problems.append(f"{tag}: F' rows are dependent")
        if len(core.coding) != cp.N:
            problems.append(f"{tag}: expected {cp.N} coding blocks")
            continue
        for n in range(1, cp.N + 1):
            block = core.coding[n - 1]
            if block.shape != (dv.ratio * dv.u, target):
                problems.append(f"{tag}: worker {n} coding block shape {block.shape}")
                continue
            if not field.is_zero(field.matmul(block, core.fprime_n(n))):
                problems.append(f"{tag}: worker {n} coding rows do not annihilate F'({n})")
            if field.rank(block) != block.shape[0]:
                problems.append(f"{tag}: worker {n} coding rows are dependent")
        if scheme.assignment.kind is AssignmentKind.CYCLIC:
            for n in range(1, p.N + 1):
                eff = effective_coefficients(scheme, comp, n)
                for k in missing_set(scheme.assignment, n):
                    if eff[:, :, k - 1].any():
                        problems.append(f"{tag}: worker {n} touches absent message W_{k}")
                        break
    return problems


def check_invariants(scheme: Scheme) -> None:
    problems = invariant_violations(scheme)
    if problems:
        raise InvalidScheme("; ".join(problems))

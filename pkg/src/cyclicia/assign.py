"""Cyclic and repetition dataset-to-worker assignments.

Dataset and worker indices are 1-based everywhere in this module, and
``mod1(b, a)`` is the residue of ``b`` in ``{1, ..., a}``.
"""
from __future__ import annotations

import enum
import functools
import json
from dataclasses import dataclass

from .model import RepDivisibility, SystemParams, repetition_defined, validate


class AssignmentKind(enum.Enum):
    CYCLIC = "cyclic"
    REPETITION = "repetition"


def mod1(b: int, a: int) -> int:
    return (b - 1) % a + 1


@dataclass(frozen=True)
class Assignment:
    kind: AssignmentKind
    K: int
    zsets: tuple[tuple[int, ...], ...]  # zsets[n - 1] is Z_n, sorted
    groups: tuple[tuple[int, ...], ...] = ()  # repetition only: worker ids per group

    @property
    def N(self) -> int:
        return len(self.zsets)

    def z(self, n: int) -> tuple[int, ...]:
        return self.zsets[n - 1]

    def to_dict(self) -> dict:
        doc = {"kind": self.kind.value, "indexing": "1-based", "zsets": [list(z) for z in self.zsets]}
        if self.groups:
            doc["groups"] = [list(g) for g in self.groups]
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict, K: int) -> "Assignment":
        return cls(
            kind=AssignmentKind(doc["kind"]),
            K=K,
            zsets=tuple(tuple(sorted(z)) for z in doc["zsets"]),
            groups=tuple(tuple(g) for g in doc.get("groups", ())),
        )


def _window(start: int, length: int, N: int, ratio: int) -> tuple[int, ...]:
    out = set()
    for p in range(ratio):
        for o in range(length):
            out.add(mod1(start + o, N) + p * N)
    return tuple(sorted(out))


@functools.lru_cache(maxsize=1024)
def cyclic_assignment(p: SystemParams) -> Assignment:
    """Worker n holds residues n, n+1, ..., n+N-Nr+m-1 (mod N) of every block of N."""
    dv = validate(p)
    width = p.N - p.Nr + p.m
    zsets = tuple(_window(n, width, p.N, dv.ratio) for n in range(1, p.N + 1))
    return Assignment(AssignmentKind.CYCLIC, p.K, zsets)


def repetition_assignment(p: SystemParams) -> Assignment:
    """Groups of N-Nr+m consecutive workers share one dataset-disjoint block.

    Group i is workers (i-1)g+1, ..., ig with g = N-Nr+m.
    """
    dv = validate(p)
    if not repetition_defined(p):
        raise RepDivisibility(f"N-Nr+m={p.N - p.Nr + p.m} does not divide N={p.N}")
    g = p.N - p.Nr + p.m
    groups = []
    zsets = []
    for i in range(1, p.N // g + 1):
        shared = _window(1 + g * (i - 1), g, p.N, dv.ratio)
        members = tuple(range((i - 1) * g + 1, i * g + 1))
        groups.append(members)
        zsets.extend([shared] * g)
    return Assignment(AssignmentKind.REPETITION, p.K, tuple(zsets), tuple(groups))


def missing_set(assignment: Assignment, n: int) -> tuple[int, ...]:
    if not 1 <= n <= assignment.N:
        raise ValueError(f"worker {n} outside [1, {assignment.N}]")
    have = set(assignment.z(n))
    return tuple(k for k in range(1, assignment.K + 1) if k not in have)

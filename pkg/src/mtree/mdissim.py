"""m-dissimilarity maps: container, forward computation, TSV I/O and the
three-term necessity check.

An :class:`MMap` stores one value per m-subset of its labels, densely, at the
colex rank of the subset of label indices. The check enumerates every
``(R, {i, j, k, l})`` with ``|R| = m - 2`` and compares the three sums

    D(Rij) + D(Rkl),   D(Rik) + D(Rjl),   D(Ril) + D(Rjk)

For m = 2 the only R is the empty set and this is the four-point condition.
"""

from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import MMapFormatError
from .scalar import Scalar, ScalarMode
from .subsets import iter_masks, members, rank
from .tree_core import EXACT, WeightedTree

NO_TWO_MAX_EQUAL = "no-two-max-equal"
MAX_NOT_GEQ_THIRD = "max-not-geq-third"
INCONSISTENT_MIN = "inconsistent-min-term-across-R"

# which pairing a sum index stands for, given a sorted quartet (i, j, k, l)
PAIRINGS = ("ij|kl", "ik|jl", "il|jk")


@dataclass(frozen=True)
class MMap:
    labels: tuple
    m: int
    values: tuple
    mode: ScalarMode = EXACT

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", tuple(self.values))
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValueError("labels must be distinct")
        if not 2 <= self.m <= n:
            raise ValueError(f"need 2 <= m <= n, got m={self.m}, n={n}")
        if len(self.values) != comb(n, self.m):
            raise ValueError(f"expected {comb(n, self.m)} values, got {len(self.values)}")

    @property
    def n(self) -> int:
        return len(self.labels)

    @cached_property
    def index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}

    @cached_property
    def by_mask(self) -> dict:
        return dict(zip(iter_masks(self.n, self.m), self.values))

    def mask(self, labels: Iterable[str]) -> int:
        out = 0
        for lab in labels:
            try:
                out |= 1 << self.index[lab]
            except KeyError:
                raise KeyError(f"unknown label {lab!r}") from None
        return out

    def __getitem__(self, subset: Iterable[str]) -> Scalar:
        subset = list(subset)
        idx = sorted({self.index[lab] for lab in subset})
        if len(idx) != self.m or len(subset) != self.m:
            raise KeyError(f"need {self.m} distinct labels, got {subset!r}")
        return self.values[rank(idx)]

    def subsets(self) -> Iterator[tuple]:
        """Label tuples in storage order."""
        for mask in iter_masks(self.n, self.m):
            yield tuple(self.labels[i] for i in members(mask))

    def items(self) -> Iterator[tuple]:
        return zip(self.subsets(), self.values)

    def map_values(self, fn) -> "MMap":
        return MMap(self.labels, self.m, tuple(fn(v) for v in self.values), self.mode)

    def with_mode(self, mode: ScalarMode) -> "MMap":
        return MMap(self.labels, self.m, tuple(mode.coerce(v) for v in self.values), mode)

    def replace(self, subset: Iterable[str], value) -> "MMap":
        values = list(self.values)
        idx = sorted(self.index[lab] for lab in subset)
        values[rank(idx)] = self.mode.coerce(value)
        return MMap(self.labels, self.m, tuple(values), self.mode)

    def equals(self, other: "MMap", tol: float | None = None) -> bool:
        if self.labels != other.labels or self.m != other.m:
            return False
        if tol is None:
            tol = self.mode.eps
        if tol == 0:
            return self.values == other.values
        return all(abs(a - b) <= tol for a, b in zip(self.values, other.values))


def _weights_chunk(args):
    tree, n, m, start, stop = args
    out = []
    for r, mask in enumerate(iter_masks(n, m)):
        if r >= stop:
            break
        if r >= start:
            out.append(tree.subtree_weight_mask(mask))
    return out


def compute_mmap(tree: WeightedTree, m: int, workers: int = 1) -> MMap:
    """Subtree weight of every m-subset of the leaves of ``tree``."""
    n = tree.n
    if not 2 <= m <= n:
        raise ValueError(f"m must satisfy 2 <= m <= n={n}, got {m}")
    total = comb(n, m)
    if workers <= 1 or total < 2048:
        values = [tree.subtree_weight_mask(mask) for mask in iter_masks(n, m)]
    else:
        step = -(-total // workers)
        jobs = [(tree, n, m, s, min(s + step, total)) for s in range(0, total, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = [v for chunk in pool.map(_weights_chunk, jobs) for v in chunk]
    return MMap(tree.labels, m, tuple(values), tree.mode)


# ---------------------------------------------------------------------- #
# three-term conditions


@dataclass(frozen=True)
class Violation:
    R: frozenset
    quartet: tuple
    sums: tuple
    kind: str

    def __str__(self):
        rs = ",".join(sorted(self.R)) or "-"
        sums = ", ".join(f"{p}={s}" for p, s in zip(PAIRINGS, self.sums))
        return f"{self.kind}: R={{{rs}}} quartet=({','.join(self.quartet)}) {sums}"


@dataclass
class ConditionReport:
    passed: bool
    violations: list = field(default_factory=list)
    checked: int = 0

    @property
    def first(self) -> Violation | None:
        return self.violations[0] if self.violations else None


def three_term_sums(mmap: MMap) -> Iterator[tuple]:
    """Yield ``(R_mask, (i, j, k, l), (s_ij, s_ik, s_il))`` over all R and quartets.

    R runs in colex order; quartets are increasing index 4-tuples disjoint from R.
    """
    n, m = mmap.n, mmap.m
    val = mmap.by_mask
    for rmask in iter_masks(n, m - 2):
        pool = [1 << i for i in range(n) if not rmask >> i & 1]
        for bi, bj, bk, bl in combinations(pool, 4):
            s_ij = val[rmask | bi | bj] + val[rmask | bk | bl]
            s_ik = val[rmask | bi | bk] + val[rmask | bj | bl]
            s_il = val[rmask | bi | bl] + val[rmask | bj | bk]
            yield rmask, (bi, bj, bk, bl), (s_ij, s_ik, s_il)


def classify(sums: Sequence[Scalar], mode: ScalarMode) -> list[str]:
    """Violated clauses of "the maximum of the three sums is attained twice"."""
    s0, s1, s2 = sorted(sums)
    if mode.eq(s1, s2):
        return []
    kinds = [NO_TWO_MAX_EQUAL]
    if mode.eq(s0, s1):
        kinds.append(MAX_NOT_GEQ_THIRD)
    return kinds


def strict_min(sums: Sequence[Scalar], mode: ScalarMode) -> int | None:
    """Index of the strictly smallest sum, if there is one."""
    order = sorted(range(3), key=lambda t: sums[t])
    if mode.lt(sums[order[0]], sums[order[1]]):
        return order[0]
    return None


def _labels(mmap: MMap, mask: int) -> tuple:
    return tuple(mmap.labels[i] for i in members(mask))


def max_twice_report(mmap: MMap, limit: int | None = None) -> ConditionReport:
    """Tropical "max attained twice" test for every three-term relation."""
    mode = mmap.mode
    report = ConditionReport(True)
    for rmask, bits, sums in three_term_sums(mmap):
        report.checked += 1
        for kind in classify(sums, mode):
            q = tuple(mmap.labels[b.bit_length() - 1] for b in bits)
            report.violations.append(Violation(frozenset(_labels(mmap, rmask)), q, sums, kind))
        if limit is not None and len(report.violations) >= limit:
            break
    report.passed = not report.violations
    return report


def check_necessary_conditions(mmap: MMap, limit: int | None = None) -> ConditionReport:
    """Necessary (not sufficient) conditions for ``mmap`` to come from a tree.

    For every R and quartet, the maximum of the three sums must be attained at
    least twice. Across different R, a quartet's strictly smallest sum (when
    there is one) must always be the same pairing. ``limit`` stops the scan
    after that many violations.
    """
    mode = mmap.mode
    report = ConditionReport(True)
    first_min: dict = {}
    for rmask, bits, sums in three_term_sums(mmap):
        report.checked += 1
        kinds = classify(sums, mode)
        if not kinds:
            t = strict_min(sums, mode)
            if t is not None:
                qkey = bits
                seen = first_min.setdefault(qkey, t)
                if seen != t:
                    kinds = [INCONSISTENT_MIN]
        for kind in kinds:
            q = tuple(mmap.labels[b.bit_length() - 1] for b in bits)
            report.violations.append(Violation(frozenset(_labels(mmap, rmask)), q, sums, kind))
        if limit is not None and len(report.violations) >= limit:
            break
    report.passed = not report.violations
    return report


# ---------------------------------------------------------------------- #
# TSV format

_HEADER = re.compile(r"^#mmap n=(\d+) m=(\d+) mode=(exact|float)$")


def format_mmap(mmap: MMap) -> str:
    for lab in mmap.labels:
        if any(ch in lab for ch in ",\t\r\n") or lab != lab.strip():
            raise ValueError(f"label {lab!r} cannot be written to an m-map TSV")
    fmt = mmap.mode.format
    lines = [
        f"#mmap n={mmap.n} m={mmap.m} mode={mmap.mode.name}",
        "#labels\t" + "\t".join(mmap.labels),
    ]
    for subset, value in mmap.items():
        lines.append(",".join(subset) + "\t" + fmt(value))
    return "\n".join(lines) + "\n"


def parse_mmap(text: str, tol: float | None = None) -> MMap:
    lines = text.split("\n")
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) < 2:
        raise MMapFormatError("missing header lines")
    head = _HEADER.match(lines[0].rstrip("\r"))
    if not head:
        raise MMapFormatError(f"malformed header: {lines[0]!r}")
    n, m, mode_name = int(head.group(1)), int(head.group(2)), head.group(3)
    mode = ScalarMode.from_name(mode_name) if tol is None else ScalarMode.from_name(mode_name, tol)
    lab_line = lines[1].rstrip("\r")
    if not lab_line.startswith("#labels"):
        raise MMapFormatError(f"malformed labels line: {lab_line!r}")
    rest = lab_line[len("#labels"):]
    if rest.startswith("\t"):
        labels = rest[1:].split("\t")
    elif rest.startswith(" "):
        labels = rest.split()
    else:
        raise MMapFormatError(f"malformed labels line: {lab_line!r}")
    if len(labels) != n or len(set(labels)) != n or any(not lab for lab in labels):
        raise MMapFormatError(f"header says n={n} but the labels line lists {len(labels)} distinct labels")
    if not 2 <= m <= n:
        raise MMapFormatError(f"m={m} out of range for n={n}")
    index = {lab: i for i, lab in enumerate(labels)}
    expected = comb(n, m)
    values: dict = {}
    for lineno, line in enumerate(lines[2:], start=3):
        line = line.rstrip("\r")
        if "\t" not in line:
            raise MMapFormatError(f"line {lineno}: expected '<labels>\\t<value>'")
        key, _, num = line.partition("\t")
        subset = key.split(",")
        try:
            idx = [index[lab] for lab in subset]
        except KeyError as exc:
            raise MMapFormatError(f"line {lineno}: label {exc.args[0]!r} not in the labels line") from None
        if len(set(idx)) != m or len(idx) != m:
            raise MMapFormatError(f"line {lineno}: expected {m} distinct labels, got {key!r}")
        try:
            value = mode.parse(num)
        except ValueError:
            raise MMapFormatError(f"line {lineno}: non-numeric value {num!r}") from None
        r = rank(idx)
        if r in values:
            raise MMapFormatError(f"line {lineno}: duplicate subset {key!r}")
        values[r] = value
    if len(values) != expected:
        raise MMapFormatError(f"expected {expected} subsets, found {len(values)}")
    return MMap(tuple(labels), m, tuple(values[r] for r in range(expected)), mode)


def write_mmap(mmap: MMap, path) -> None:
    Path(path).write_text(format_mmap(mmap), encoding="utf-8", newline="\n")


def read_mmap(path, tol: float | None = None) -> MMap:
    return parse_mmap(Path(path).read_text(encoding="utf-8"), tol)

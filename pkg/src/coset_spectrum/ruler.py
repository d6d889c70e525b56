"""Modular difference sets of coset patterns and the circular ruler predicates.

A coset pattern picks ``M`` of the ``N`` Nyquist cosets in each block.  The
set of modular differences between its marks tells which autocorrelation lags
the pattern can observe; a bank of patterns observes every lag when the union
of its difference sets is all of ``Z_N``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable


class DomainError(ValueError):
    """Raised when an operation is called outside its domain."""


@dataclass(frozen=True)
class CosetPattern:
    period: int
    marks: tuple[int, ...]

    def __post_init__(self):
        if self.period < 1:
            raise DomainError(f"period must be positive, got {self.period}")
        marks = tuple(int(m) for m in self.marks)
        if not 1 <= len(marks) <= self.period:
            raise DomainError(f"need 1..{self.period} marks, got {len(marks)}")
        if any(b <= a for a, b in zip(marks, marks[1:])):
            raise DomainError(f"marks must be strictly increasing: {marks}")
        if marks[0] < 0 or marks[-1] >= self.period:
            raise DomainError(f"marks must lie in [0, {self.period - 1}]: {marks}")
        object.__setattr__(self, "marks", marks)

    @classmethod
    def of(cls, period: int, marks: Iterable[int]) -> "CosetPattern":
        """Build a pattern from marks in any order (duplicates rejected)."""
        marks = list(marks)
        if len(set(marks)) != len(marks):
            raise DomainError(f"duplicate marks: {marks}")
        return cls(period, tuple(sorted(marks)))

    @classmethod
    def full(cls, period: int) -> "CosetPattern":
        return cls(period, tuple(range(period)))

    def __len__(self):
        return len(self.marks)


@dataclass(frozen=True)
class DifferenceSet:
    period: int
    members: frozenset[int]

    def __contains__(self, d: int) -> bool:
        return d % self.period in self.members

    def __len__(self):
        return len(self.members)

    def is_complete(self) -> bool:
        return len(self.members) == self.period


@dataclass(frozen=True)
class RulerBank:
    period: int
    patterns: tuple[CosetPattern, ...]

    def __post_init__(self):
        patterns = tuple(self.patterns)
        if not patterns:
            raise DomainError("a bank needs at least one pattern")
        for p in patterns:
            if p.period != self.period:
                raise DomainError(f"pattern period {p.period} != bank period {self.period}")
        sizes = {len(p) for p in patterns}
        if len(sizes) != 1:
            raise DomainError(f"all patterns must have the same number of marks, got {sorted(sizes)}")
        object.__setattr__(self, "patterns", patterns)

    @classmethod
    def of(cls, period: int, marks_lists: Iterable[Iterable[int]]) -> "RulerBank":
        return cls(period, tuple(CosetPattern.of(period, m) for m in marks_lists))

    @property
    def marks_per_pattern(self) -> int:
        return len(self.patterns[0])

    @property
    def num_groups(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def __len__(self):
        return len(self.patterns)


def difference_multiplicity(pattern: CosetPattern) -> Counter:
    """Count, for each residue, the ordered mark pairs producing it."""
    n = pattern.period
    return Counter((a - b) % n for a in pattern.marks for b in pattern.marks)


def difference_set(pattern: CosetPattern) -> DifferenceSet:
    n = pattern.period
    members = frozenset((a - b) % n for a in pattern.marks for b in pattern.marks)
    return DifferenceSet(n, members)


def is_complete_circular_ruler(pattern: CosetPattern) -> bool:
    return difference_set(pattern).is_complete()


def is_incomplete_circular_ruler(pattern: CosetPattern) -> bool:
    return not is_complete_circular_ruler(pattern)


def is_circular_golomb(pattern: CosetPattern) -> bool:
    """True when each nonzero difference comes from exactly one ordered pair."""
    m = len(pattern)
    return len(difference_set(pattern)) == m * (m - 1) + 1


def are_non_overlapping(bank: RulerBank) -> bool:
    """True iff no nonzero distance is measured by two different patterns."""
    if bank.num_groups < 2:
        raise DomainError("non-overlap needs at least two patterns")
    seen: set[int] = set()
    for p in bank:
        nonzero = difference_set(p).members - {0}
        if seen & nonzero:
            return False
        seen |= nonzero
    return True


def covered_distances(bank: RulerBank) -> frozenset[int]:
    out: set[int] = set()
    for p in bank:
        out |= difference_set(p).members
    return frozenset(out)


def union_covers(bank: RulerBank) -> tuple[bool, frozenset[int]]:
    """Check whether the bank measures every distance mod N.

    Returns ``(covered, missing)`` where ``missing`` holds the uncovered
    residues (empty exactly when ``covered`` is true).
    """
    missing = frozenset(range(bank.period)) - covered_distances(bank)
    return not missing, missing


def lower_bound_z(n: int, m: int) -> int:
    """Fewest patterns of ``m`` marks that could cover all ``n - 1`` nonzero distances."""
    if n < 2:
        raise DomainError(f"N must be at least 2, got {n}")
    if m < 2:
        raise DomainError("M must be at least 2: a single mark measures no nonzero distance")
    if m > n:
        raise DomainError(f"M={m} exceeds N={n}")
    return math.ceil((n - 1) / (m * (m - 1)))


# -- text serialization -------------------------------------------------------

def format_pattern(pattern: CosetPattern) -> str:
    return f"N={pattern.period}; marks={','.join(str(m) for m in pattern.marks)}"


def parse_pattern(line: str) -> CosetPattern:
    fields = {}
    for part in line.split(";"):
        key, sep, value = part.strip().partition("=")
        if not sep:
            raise DomainError(f"malformed pattern line: {line!r}")
        fields[key.strip()] = value.strip()
    try:
        period = int(fields["N"])
        marks = [int(x) for x in fields["marks"].split(",") if x.strip()]
    except (KeyError, ValueError) as exc:
        raise DomainError(f"malformed pattern line: {line!r}") from exc
    return CosetPattern(period, tuple(marks))


def format_bank(bank: RulerBank) -> str:
    header = f"Z={bank.num_groups} M={bank.marks_per_pattern} N={bank.period}"
    return "\n".join([header, *(format_pattern(p) for p in bank)]) + "\n"


def _parse_header(line: str) -> dict[str, int]:
    out = {}
    for tok in line.split():
        key, sep, value = tok.partition("=")
        if not sep:
            raise DomainError(f"malformed bank header: {line!r}")
        out[key] = int(value)
    if set(out) != {"Z", "M", "N"}:
        raise DomainError(f"bank header needs Z, M and N: {line!r}")
    return out


def parse_banks(text: str) -> list[RulerBank]:
    """Parse one or more banks; blank lines and ``#`` comments are ignored."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    banks = []
    i = 0
    while i < len(lines):
        head = _parse_header(lines[i])
        body = lines[i + 1:i + 1 + head["Z"]]
        if len(body) != head["Z"]:
            raise DomainError(f"bank header promises {head['Z']} patterns, found {len(body)}")
        patterns = [parse_pattern(ln) for ln in body]
        bank = RulerBank(head["N"], tuple(patterns))
        if bank.marks_per_pattern != head["M"]:
            raise DomainError(f"header says M={head['M']} but patterns have {bank.marks_per_pattern} marks")
        banks.append(bank)
        i += 1 + head["Z"]
    return banks


def parse_bank(text: str) -> RulerBank:
    banks = parse_banks(text)
    if len(banks) != 1:
        raise DomainError(f"expected exactly one bank, found {len(banks)}")
    return banks[0]


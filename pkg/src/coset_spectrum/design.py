"""Design of ruler banks with few groups for a given number of marks.

Two constructions are provided:

* ``design_m2`` -- the closed-form two-mark bank ``{0, z+1}`` which always
  meets the lower bound ``ceil((N-1)/2)``.
* ``design_greedy`` -- every pattern starts from the seed ``{0, z+1}`` and the
  remaining marks are picked greedily, preferring coset indices no pattern
  uses yet.  When the greedy bank is larger than the lower bound, a bounded
  exact-cover backtracking search over the same seeded structure is run to
  try to close the gap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .ruler import (
    DomainError,
    RulerBank,
    are_non_overlapping,
    difference_set,
    is_circular_golomb,
    lower_bound_z,
    union_covers,
)

log = logging.getLogger(__name__)

DEFAULT_SEARCH_BUDGET = 50_000


@dataclass
class DesignReport:
    bank: RulerBank
    achieved_z: int
    lower_bound: int
    per_pattern_golomb: list[bool]
    covered: bool
    missing: frozenset[int] = frozenset()
    non_overlapping: bool | None = None
    greedy_trace: list[tuple[int, int, int]] = field(default_factory=list)
    strategy: str = "verify"

    def summary(self) -> str:
        lines = [
            f"strategy: {self.strategy}",
            f"achieved_Z: {self.achieved_z}",
            f"lower_bound: {self.lower_bound}",
            f"covered: {str(self.covered).lower()}",
            f"missing: {','.join(str(d) for d in sorted(self.missing)) or '-'}",
            f"non_overlapping: {'n/a' if self.non_overlapping is None else str(self.non_overlapping).lower()}",
            f"golomb: {sum(self.per_pattern_golomb)}/{len(self.per_pattern_golomb)}",
        ]
        return "\n".join(lines)


def verify_bank(bank: RulerBank, *, strategy: str = "verify", trace=None) -> DesignReport:
    covered, missing = union_covers(bank)
    return DesignReport(
        bank=bank,
        achieved_z=bank.num_groups,
        lower_bound=lower_bound_z(bank.period, bank.marks_per_pattern),
        per_pattern_golomb=[is_circular_golomb(p) for p in bank],
        covered=covered,
        missing=missing,
        non_overlapping=are_non_overlapping(bank) if bank.num_groups >= 2 else None,
        greedy_trace=list(trace or []),
        strategy=strategy,
    )


def design_m2(n: int) -> DesignReport:
    if n < 3:
        raise DomainError(f"design_m2 needs N >= 3, got {n}")
    if n % 2:
        marks = [[0, z + 1] for z in range((n - 1) // 2)]
    else:
        marks = [[0, z + 1] for z in range(n // 2 - 1)] + [[0, n // 2]]
    return verify_bank(RulerBank.of(n, marks), strategy="m2")


def _new_distances(marks, c, n, covered):
    out = set()
    for a in marks:
        out.add((c - a) % n)
        out.add((a - c) % n)
    out -= covered
    return out


def _greedy(n: int, m: int):
    target = lower_bound_z(n, m)
    patterns = [[0, z + 1] for z in range(target)]
    used = {mark for p in patterns for mark in p}
    covered = {0}
    trace = []
    for z, p in enumerate(patterns):
        gain = _new_distances([0], p[1], n, covered)
        covered |= gain
        trace.append((z, p[1], len(gain)))

    z = 0
    while z < len(patterns) or len(covered) < n:
        if z == len(patterns):
            seed = [0, z + 1]
            gain = _new_distances([0], seed[1], n, covered)
            covered |= gain
            used.update(seed)
            patterns.append(seed)
            trace.append((z, seed[1], len(gain)))
        pat = patterns[z]
        while len(pat) < m:
            c, gain = _best_mark(pat, n, covered, used)
            pat.append(c)
            used.add(c)
            covered |= gain
            trace.append((z, c, len(gain)))
        z += 1
    return patterns, trace


def _best_mark(pat, n, covered, used):
    # ties go to the smallest index
    def best_of(pool):
        best, best_gain = None, None
        for c in pool:
            gain = _new_distances(pat, c, n, covered)
            if best_gain is None or len(gain) > len(best_gain):
                best, best_gain = c, gain
        return best, best_gain

    unused = [c for c in range(n) if c not in used and c not in pat]
    c, gain = best_of(unused)
    if c is None or not gain:
        c_all, gain_all = best_of(c for c in range(n) if c not in pat)
        if c is None or gain_all:
            c, gain = c_all, gain_all
    return c, gain


class _BudgetExhausted(Exception):
    pass


def _seeded_exact_cover(n: int, m: int, z_count: int, budget: int):
    """Backtracking over the ``{0, z+1}``-seeded bank with ``z_count`` groups.

    Branches on the uncovered distance with the fewest ways to be covered by
    one more unused mark.  Returns ``(patterns, trace, nodes)`` or
    ``(None, None, nodes)`` when no bank is found within ``budget`` nodes.
    """
    patterns = [[0, z + 1] for z in range(z_count)]
    used = {mark for p in patterns for mark in p}
    covered = {0}
    trace = []
    for z, p in enumerate(patterns):
        gain = _new_distances([0], p[1], n, covered)
        covered |= gain
        trace.append((z, p[1], len(gain)))
    nodes = 0

    def capacity():
        return sum(2 * j for p in patterns for j in range(len(p), m))

    def recurse():
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise _BudgetExhausted
        uncovered = n - len(covered)
        if uncovered == 0:
            return True
        if uncovered > capacity():
            return False
        options = None
        for d in range(1, n // 2 + 1):
            if d in covered:
                continue
            opts = set()
            for z, p in enumerate(patterns):
                if len(p) >= m:
                    continue
                for a in p:
                    for c in ((a + d) % n, (a - d) % n):
                        if c not in used:
                            opts.add((z, c))
            if options is None or len(opts) < len(options):
                options = opts
                if len(options) <= 1:
                    break
        if not options:
            return False
        ranked = sorted(
            options,
            key=lambda zc: (-len(_new_distances(patterns[zc[0]], zc[1], n, covered)), zc),
        )
        for z, c in ranked:
            gain = _new_distances(patterns[z], c, n, covered)
            patterns[z].append(c)
            used.add(c)
            covered.update(gain)
            trace.append((z, c, len(gain)))
            if recurse():
                return True
            trace.pop()
            covered.difference_update(gain)
            used.discard(c)
            patterns[z].pop()
        return False

    try:
        found = recurse()
    except _BudgetExhausted:
        found = False
    if not found:
        return None, None, nodes
    # distances are all covered; any remaining slots take the smallest free index
    for z, p in enumerate(patterns):
        while len(p) < m:
            free = [c for c in range(n) if c not in used and c not in p] or [c for c in range(n) if c not in p]
            p.append(free[0])
            used.add(free[0])
            trace.append((z, free[0], 0))
    return patterns, trace, nodes


def design_greedy(n: int, m: int, *, search_budget: int = DEFAULT_SEARCH_BUDGET) -> DesignReport:
    """Greedy bank for ``m`` marks per pattern, refined by backtracking.

    ``search_budget`` caps the number of backtracking nodes spent trying to
    reach a smaller group count than the greedy found; 0 disables the search.
    """
    if n < 2:
        raise DomainError(f"N must be at least 2, got {n}")
    if not 2 <= m <= n:
        raise DomainError(f"need 2 <= M <= N, got M={m}, N={n}")
    patterns, trace = _greedy(n, m)
    strategy = "greedy"
    bound = lower_bound_z(n, m)
    remaining = search_budget
    for z_count in range(bound, len(patterns)):
        if remaining <= 0:
            break
        found, found_trace, spent = _seeded_exact_cover(n, m, z_count, remaining)
        remaining -= spent
        if found is not None:
            log.debug("search closed greedy gap: Z %d -> %d", len(patterns), z_count)
            patterns, trace, strategy = found, found_trace, "greedy+search"
            break
    bank = RulerBank.of(n, patterns)
    return verify_bank(bank, strategy=strategy, trace=trace)


def extend_bank(bank: RulerBank, m: int) -> RulerBank:
    """Grow every pattern to ``m`` marks.

    Each added mark maximizes the pattern's own number of distinct
    differences, ties going to the smallest index, so coverage of a covering
    bank is preserved and each group measures as many lags as it can.
    """
    if m < bank.marks_per_pattern:
        raise DomainError(f"cannot shrink patterns from {bank.marks_per_pattern} to {m} marks")
    n = bank.period
    if m > n:
        raise DomainError(f"M={m} exceeds N={n}")
    grown = []
    for p in bank:
        marks = list(p.marks)
        own = set(difference_set(p).members)
        while len(marks) < m:
            c, gain = _best_mark(marks, n, own, set())
            marks.append(c)
            own |= gain
        grown.append(marks)
    return RulerBank.of(n, grown)


def design_for_groups(n: int, m: int, z_count: int, *, search_budget: int = DEFAULT_SEARCH_BUDGET) -> RulerBank:
    """Covering bank with exactly ``z_count`` patterns of ``m`` marks.

    Uses the smallest mark count whose designed bank fits in ``z_count``
    groups, pads with extra ``{0, z+1}`` groups if needed, then grows every
    pattern to ``m`` marks.
    """
    if z_count < 1:
        raise DomainError("need at least one group")
    for m0 in range(2, m + 1):
        if lower_bound_z(n, m0) > z_count:
            continue
        report = design_greedy(n, m0, search_budget=search_budget)
        if report.achieved_z <= z_count:
            break
    else:
        raise DomainError(f"no covering bank with Z={z_count}, M={m} for N={n}")
    marks = [list(p.marks) for p in report.bank]
    for z in range(len(marks), z_count):
        seed = [0, z % (n - 1) + 1]
        marks.append(seed + [c for c in range(n) if c not in seed][: m0 - 2])
    return extend_bank(RulerBank.of(n, marks), m)

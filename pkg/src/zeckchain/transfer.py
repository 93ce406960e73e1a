"""Big-integer transfer DP over the allowed-transition graph.

Paths ``Z_0..Z_n`` start in the start set and follow allowed transitions;
an optional finite memory rides along each path.  Accumulators are exact
integers; division happens only when a mean is requested.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable

from .chain import build_state_space
from .errors import InputError
from .recurrence import Recurrence

# (augmented state, contribution) or None when the path is rejected
Start = Callable[[int, int], "tuple[Hashable, int] | None"]
Step = Callable[[Hashable, int, int], "tuple[Hashable, int] | None"]


@dataclass
class Moments:
    """Totals over all surviving paths: number of paths, sum and sum of squares of the statistic."""

    count: int
    total: int
    total_sq: int

    @property
    def mean(self) -> Fraction:
        return Fraction(self.total, self.count)

    @property
    def second_moment(self) -> Fraction:
        return Fraction(self.total_sq, self.count)

    @property
    def variance(self) -> Fraction:
        return self.second_moment - self.mean**2


def transfer_moments(rec: Recurrence, n: int, start: Start, step: Step, squares: bool = True) -> Moments:
    """Run the (count, sum, sum of squares) DP along paths ``Z_0..Z_n``.

    ``start(i, x)`` maps a start state index and its digit to an augmented
    state plus the statistic's increment; ``step(aug, j, x)`` does the same
    for a transition into chain state ``j`` with digit ``x``.
    """
    if n < 0:
        raise InputError("BAD_LENGTH", f"n must be non-negative, got {n}")
    space = build_state_space(rec)
    succ = [space.successors(i) for i in range(len(space))]
    digit = [z.x for z in space.states]
    cur: dict = defaultdict(lambda: [0, 0, 0])
    for i in space.start_indices:
        out = start(i, digit[i])
        if out is None:
            continue
        aug, v = out
        acc = cur[(i, aug)]
        acc[0] += 1
        acc[1] += v
        acc[2] += v * v
    for _ in range(n):
        nxt: dict = defaultdict(lambda: [0, 0, 0])
        for (i, aug), (c, s, s2) in cur.items():
            for j in succ[i]:
                out = step(aug, j, digit[j])
                if out is None:
                    continue
                aug2, v = out
                acc = nxt[(j, aug2)]
                acc[0] += c
                acc[1] += s + v * c
                if squares:
                    acc[2] += s2 + 2 * v * s + v * v * c
        cur = nxt
    count = sum(a[0] for a in cur.values())
    total = sum(a[1] for a in cur.values())
    total_sq = sum(a[2] for a in cur.values())
    return Moments(count, total, total_sq)


def additive_moments(rec: Recurrence, n: int, g_int) -> Moments:
    """Moments of ``sum_j g(Z_j)`` for an integer vector ``g`` over the chain states."""
    g_int = [int(v) for v in g_int]
    return transfer_moments(rec, n, lambda i, x: (None, g_int[i]), lambda aug, j, x: (None, g_int[j]))


def gap_count_moments(rec: Recurrence, n: int, k: int) -> Moments:
    """Moments of the number of gaps of size exactly ``k``."""
    if k < 0:
        raise InputError("BAD_GAP", f"gap size must be non-negative, got {k}")
    if k == 0:
        return transfer_moments(
            rec, n, lambda i, x: (None, max(x - 1, 0)), lambda aug, j, x: (None, max(x - 1, 0)), squares=False
        )

    # memory: zeros since the last nonzero digit, capped at k
    def step(run, j, x):
        if x > 0:
            return 0, int(run == k - 1)
        return min(run + 1, k), 0

    return transfer_moments(rec, n, lambda i, x: (0, 0), step, squares=False)

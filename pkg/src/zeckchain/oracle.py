"""Exact statistics of the uniform measure on length-``n+1`` decompositions.

Two independent evaluators: explicit enumeration of every legal string
(small ``n``) and a big-integer transfer DP over the allowed-transition
graph, possibly composed with a finite memory such as the number of zeros
since the last nonzero digit.  Neither touches floating point.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chain import build_state_space
from .decomposer import ENUMERATION_LIMIT, count_legal, enumerate_legal
from .errors import BudgetError, InputError
from .gaps import gap_counts, max_gap
from .recurrence import Recurrence
from .transfer import additive_moments, gap_count_moments

TRANSFER_LIMIT = 10**4

STATISTICS = ("string-count", "mean-summands", "second-moment-summands", "gap-count", "total-gaps")


def transfer_stats(rec: Recurrence, n: int, statistic: str, k: int | None = None):
    """Exact ``Q_n`` value of a named statistic by transfer DP.

    ``string-count`` is returned as an integer; everything else as a
    :class:`~fractions.Fraction`.  ``gap-count`` needs the gap size ``k``.
    """
    if n > TRANSFER_LIMIT:
        raise BudgetError(f"n={n} exceeds the transfer DP limit {TRANSFER_LIMIT}")
    space = build_state_space(rec)
    summand = [int(z.x > 0) for z in space.states]
    if statistic == "string-count":
        return additive_moments(rec, n, summand).count
    if statistic == "mean-summands":
        return additive_moments(rec, n, summand).mean
    if statistic == "second-moment-summands":
        return additive_moments(rec, n, summand).second_moment
    if statistic == "gap-count":
        if k is None:
            raise InputError("MISSING_GAP", "gap-count needs a gap size k")
        return gap_count_moments(rec, n, k).mean
    if statistic == "total-gaps":
        m = additive_moments(rec, n, [z.x for z in space.states])
        return m.mean - 1
    raise InputError("UNKNOWN_STATISTIC", f"unknown statistic {statistic!r}; expected one of {STATISTICS}")


def transfer_gap_frequencies(rec: Recurrence, n: int, kmax: int) -> dict[int, float]:
    """``E N_n(k) / E N_n`` for ``k <= kmax`` from exact DP values."""
    total = transfer_stats(rec, n, "total-gaps")
    return {k: float(transfer_stats(rec, n, "gap-count", k) / total) for k in range(kmax + 1)}


@dataclass
class ExhaustiveStats:
    n: int
    count: int
    mean_summands: Fraction
    var_summands: Fraction
    gap_histogram: dict[int, int] = field(default_factory=dict)
    max_gap_counts: dict[int, int] = field(default_factory=dict)

    @property
    def mean_gap_counts(self) -> dict[int, Fraction]:
        return {k: Fraction(v, self.count) for k, v in self.gap_histogram.items()}

    def max_gap_cdf(self, m: int) -> Fraction:
        return Fraction(sum(v for k, v in self.max_gap_counts.items() if k <= m), self.count)


def exhaustive_stats(rec: Recurrence, n: int, limit: int = ENUMERATION_LIMIT) -> ExhaustiveStats:
    """Enumerate every legal string of length ``n+1`` and tabulate exact statistics."""
    if count_legal(rec, n) > limit:
        raise BudgetError(f"{count_legal(rec, n)} strings exceed the enumeration limit {limit}")
    count = 0
    s1 = s2 = 0
    hist: Counter = Counter()
    maxes: Counter = Counter()
    for ds in enumerate_legal(rec, n, limit):
        k = sum(1 for x in ds.a if x > 0)
        count += 1
        s1 += k
        s2 += k * k
        hist.update(gap_counts(ds))
        maxes[max_gap(ds)] += 1
    mean = Fraction(s1, count)
    return ExhaustiveStats(
        n=n,
        count=count,
        mean_summands=mean,
        var_summands=Fraction(s2, count) - mean**2,
        gap_histogram=dict(sorted(hist.items())),
        max_gap_counts=dict(sorted(maxes.items())),
    )


def summand_distribution(rec: Recurrence, n: int) -> np.ndarray:
    """``P(k = s)`` for ``s = 0..n+1`` under the uniform measure on length-``n+1`` strings.

    Float DP over (state, summands so far), renormalized every step; the
    exact-integer counterpart is too slow in the thousands.
    """
    if n < 0:
        raise InputError("BAD_LENGTH", f"n must be non-negative, got {n}")
    if n > TRANSFER_LIMIT:
        raise BudgetError(f"n={n} exceeds the transfer DP limit {TRANSFER_LIMIT}")
    space = build_state_space(rec)
    S = len(space)
    nonzero = space.digits() > 0
    T = np.zeros((S, S))
    for i in range(S):
        T[i, space.successors(i)] = 1.0
    w = np.zeros((S, n + 2))
    for i in space.start_indices:
        w[i, 1] = 1.0
    for _ in range(n):
        w = T.T @ w
        w[nonzero] = np.roll(w[nonzero], 1, axis=1)
        w /= w.sum()
    return w.sum(axis=0)

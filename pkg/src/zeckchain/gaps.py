"""Gaps between summand indices: counting, limit laws and the maximal gap.

A digit ``a_j >= 2`` contributes ``a_j - 1`` gaps of size zero; two
consecutive nonzero positions ``j < j'`` contribute one gap of size
``j' - j``.  Trailing zeros never close a gap.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .chain import ChainModel, ChainState
from .errors import BudgetError, InputError, UnsupportedModelError
from .recurrence import Recurrence
from .transfer import transfer_moments

EXACT_CDF_LIMIT = 300
CDF_BUDGET = 10**7


def gap_counts(ds: Sequence[int]) -> dict[int, int]:
    """Map gap size -> number of gaps of that size in one digit string."""
    counts: Counter = Counter()
    last = None
    for j, x in enumerate(ds):
        if x <= 0:
            continue
        if x > 1:
            counts[0] += x - 1
        if last is not None:
            counts[j - last] += 1
        last = j
    return dict(sorted(counts.items()))


def max_gap(ds: Sequence[int]) -> int:
    """Largest gap size; 0 for a string without gaps."""
    counts = gap_counts(ds)
    return max(counts) if counts else 0


def empirical_gap_distribution(strings: Iterable[Sequence[int]], weights: Iterable[float] | None = None) -> dict[int, float]:
    """Pooled gap-size frequencies of a collection, optionally weighted per string."""
    num: dict[int, float] = {}
    strings = list(strings)
    ws = [1.0] * len(strings) if weights is None else [float(w) for w in weights]
    if len(ws) != len(strings):
        raise ValueError("one weight per string is required")
    for s, w in zip(strings, ws):
        for k, v in gap_counts(s).items():
            num[k] = num.get(k, 0.0) + w * v
    total = sum(num.values())
    if total <= 0:
        return {}
    return {k: num[k] / total for k in sorted(num)}


@dataclass(frozen=True)
class ForcedRun:
    """Forced zero-run state ``(0, b+1, b+2)`` with its run length and escape probability."""

    state: ChainState
    b: int
    r: int
    rho: float
    weight: float


@dataclass(frozen=True)
class GapLaw:
    """Limit of the gap-size distribution.

    For ``k >= 2`` the mass is a geometric part from the renewal through
    ``(0, 1, 1)`` plus, for every forced zero run, a shifted geometric.
    """

    mean_digit: float
    mass0: float
    mass1: float
    h1_mass: float
    h2_entries: tuple[ForcedRun, ...]
    lambdaC: float

    def geometric(self, k: int) -> float:
        """Geometric density ``lambdaC^-(k-1) (1 - 1/lambdaC)`` on ``k >= 1``."""
        if k < 1:
            return 0.0
        q = 1.0 / self.lambdaC
        return q ** (k - 1) * (1.0 - q)

    def h(self, run: ForcedRun, k: int) -> float:
        if k < run.r + 1:
            return 0.0
        if k == run.r + 1:
            return 1.0 - run.rho
        q = 1.0 / self.lambdaC
        return run.rho * q ** (k - run.r - 2) * (1.0 - q)

    def mass(self, k: int) -> float:
        if k < 0:
            return 0.0
        if k == 0:
            return self.mass0
        if k == 1:
            return self.mass1
        q = 1.0 / self.lambdaC
        nu = self.geometric(k - 1)
        acc = (1.0 - q) * self.h1_mass * nu
        for run in self.h2_entries:
            acc += run.weight * (self.h(run, k) - run.rho * nu)
        return acc / self.mean_digit

    @property
    def tail_start(self) -> int:
        """First ``k`` from which ``mass(k+1) = mass(k) / lambdaC``."""
        return max([3] + [run.r + 3 for run in self.h2_entries])

    def tail_mass(self, start: int | None = None) -> float:
        start = self.tail_start if start is None else start
        head = sum(self.mass(k) for k in range(start))
        return 1.0 - head

    def total_mass(self) -> float:
        """Sum over all ``k``, with the geometric tails summed in closed form."""
        q = 1.0 / self.lambdaC
        k0 = self.tail_start
        return sum(self.mass(k) for k in range(k0)) + self.mass(k0) / (1.0 - q)

    def to_dict(self, kmax: int = 12) -> dict:
        k0 = self.tail_start
        return {
            "lambdaC": self.lambdaC,
            "mean_digit": self.mean_digit,
            "h1_mass": self.h1_mass,
            "h2": [
                {"state": list(r.state), "b": r.b, "r": r.r, "rho": r.rho, "piQ": r.weight} for r in self.h2_entries
            ],
            "masses": {str(k): self.mass(k) for k in range(kmax + 1)},
            "tail": {"start": k0, "coefficient": self.mass(k0), "ratio": 1.0 / self.lambdaC},
            "total_mass": self.total_mass(),
        }


def _zero_run(rec: Recurrence, b: int) -> int:
    r = 0
    while b + r + 1 <= rec.L and rec.coef(b + r + 1) == 0:
        r += 1
    return r


def limit_gap_law(model: ChainModel) -> GapLaw:
    rec = model.rec
    spec = model.spectral
    lam = spec.lambdaC
    q = 1.0 / lam
    pi = model.piQ
    states = model.space.states
    mean_digit = float(sum(z.x * p for z, p in zip(states, pi)))
    pi0 = float(model.piQ1[0])
    h1 = float(sum(p for z, p in zip(states, pi) if z.x == 0 and z.b_next == 1))
    runs = []
    for i, z in enumerate(states):
        b = z.b - 1
        if z.x == 0 and b >= 1 and z.b_next == z.b + 1 and rec.coef(b) > 0 and rec.coef(b + 1) == 0:
            r = _zero_run(rec, b)
            rho = spec.phi(1) / (lam * spec.phi(b + r + 1))
            runs.append(ForcedRun(z, b, r, rho, float(pi[i])))
    # equals 1 - (1 - pi0)/M, but stays exactly zero when no digit exceeds one
    mass0 = float(sum(max(z.x - 1, 0) * p for z, p in zip(states, pi))) / mean_digit
    mass1 = (1.0 - pi0 - (1.0 - q) * h1 - sum(r.weight * (1.0 - r.rho) for r in runs)) / mean_digit
    if abs(mass1) < 1e-14:
        mass1 = 0.0
    return GapLaw(mean_digit, mass0, mass1, h1, tuple(runs), lam)


def gap_law_by_paths(model: ChainModel, kmax: int) -> dict[int, float]:
    """Limit gap frequencies from stationary path sums ``pi_A Q_BB^(k-1) Q_BA 1``.

    Independent of the closed form: ``A`` are nonzero-digit states, ``B``
    zero-digit states.
    """
    digits = model.space.digits()
    pi, Q = model.piQ, model.Q
    A = digits > 0
    B = ~A
    mean_digit = float(pi @ digits)
    out = {0: float(pi @ np.maximum(digits - 1, 0)) / mean_digit}
    if kmax >= 1:
        out[1] = float(pi[A] @ Q[np.ix_(A, A)].sum(axis=1)) / mean_digit
    v = pi[A] @ Q[np.ix_(A, B)]
    QBB, QBA = Q[np.ix_(B, B)], Q[np.ix_(B, A)].sum(axis=1)
    for k in range(2, kmax + 1):
        out[k] = float(v @ QBA) / mean_digit
        v = v @ QBB
    return out


@dataclass(frozen=True)
class MaxGapLaw:
    """Double-exponential limit of the maximal gap, centred at ``floor(ln(n alpha) / ln(1/q))``."""

    alpha: float
    q: float

    def log_scale(self, n: int) -> float:
        return math.log(n * self.alpha) / math.log(1.0 / self.q)

    def centering(self, n: int) -> int:
        return math.floor(self.log_scale(n))

    def cdf_offset(self, k: int) -> float:
        return math.exp(-(self.q ** (k - 2)))

    def renewal_cdf(self, n: int, k: int) -> float:
        """``exp(-n alpha q^(centering + k - 1))``: the same i.i.d. geometric-maximum
        approximation without discarding the fractional part of the log scale."""
        return math.exp(-n * self.alpha * self.q ** (self.centering(n) + k - 1))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "q": self.q, "lambdaC": 1.0 / self.q}


def maxgap_law(model: ChainModel) -> MaxGapLaw:
    rec = model.rec
    if min(rec.c) == 0:
        raise UnsupportedModelError(
            f"maximal-gap law assumes every coefficient is positive; {rec} has c_j = 0 for "
            f"j in {[j + 1 for j, v in enumerate(rec.c) if v == 0]}"
        )
    q = 1.0 / model.lambdaC
    return MaxGapLaw(float(model.piQ1[0]) * (1.0 - q), q)


def spacing_margin(n: int, alpha: float, q: float) -> float:
    """Distance of ``ln(n alpha) / ln(1/q)`` to the nearest non-negative integer."""
    if n < 1:
        raise InputError("BAD_LENGTH", f"n must be >= 1, got {n}")
    x = math.log(n * alpha) / math.log(1.0 / q)
    if x <= 0:
        return -x
    return abs(x - round(x))


def _maxgap_step(m: int):
    # memory: zeros since the last nonzero digit, capped at m; a nonzero digit closes a gap of run + 1
    def step(run, j, x):
        if x > 0:
            return None if run + 1 > m else (0, 0)
        return min(run + 1, m), 0

    return step


def maxgap_exact_cdf(rec: Recurrence, n: int, m: int, exact_limit: int = EXACT_CDF_LIMIT):
    """``Q_n(M_n <= m)``: a :class:`Fraction` for ``n <= exact_limit``, a float beyond."""
    if n < 0:
        raise InputError("BAD_LENGTH", f"n must be non-negative, got {n}")
    if m < 0:
        return Fraction(0)
    if m >= n:
        return Fraction(1)
    if n * (m + 1) > CDF_BUDGET:
        raise BudgetError(f"n*(m+1) = {n * (m + 1)} exceeds the max-gap DP budget {CDF_BUDGET}")
    if n > exact_limit:
        return maxgap_cdf_float(rec, n, m)
    step = _maxgap_step(m)
    hit = transfer_moments(rec, n, lambda i, x: (0, 0), step, squares=False).count
    total = transfer_moments(rec, n, lambda i, x: (0, 0), lambda a, j, x: (0, 0), squares=False).count
    return Fraction(hit, total)


def maxgap_cdf_float(rec: Recurrence, n: int, m: int) -> float:
    """Same ratio as :func:`maxgap_exact_cdf` with per-step renormalized float weights."""
    from .chain import build_state_space

    if m >= n:
        return 1.0
    space = build_state_space(rec)
    S = len(space)
    digits = space.digits()
    T = np.zeros((S, S))
    for i in range(S):
        T[i, space.successors(i)] = 1.0
    # joint weights over (state, capped run); the unconstrained mass rides along for normalization
    w = np.zeros((S, m + 1))
    free = np.zeros(S)
    w[space.start_indices, 0] = 1.0
    free[space.start_indices] = 1.0
    nonzero = digits > 0
    for _ in range(n):
        moved = w.T @ T  # (m+1, S): mass arriving at each state from each run value
        new = np.zeros_like(w)
        new[nonzero, 0] = moved[: m, nonzero].sum(axis=0)
        zero = ~nonzero
        new[zero, 1:] += moved[:m, zero].T
        new[zero, m] += moved[m, zero]
        free = free @ T
        scale = free.sum()
        w = new / scale
        free = free / scale
    return float(w.sum() / free.sum())

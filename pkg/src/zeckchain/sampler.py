"""Importance-weighted Monte Carlo of the transformed chain.

Paths run under ``Q`` from ``tilde_phi_c``; reweighting each path by
``1/phi_c(Z_n)`` turns ratio estimates into expectations under the uniform
measure on length-``n+1`` decompositions.

Trials are simulated in fixed blocks of :data:`BLOCK` paths.  Block ``i``
draws from a Philox stream keyed by ``(seed, i)``, so a batch is the same
bitwise whatever the number of worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .chain import ChainModel
from .errors import InputError

BLOCK = 1 << 14
DEFAULT_KMAX = 24
THREADS_ENV = "ZECKCHAIN_THREADS"


@dataclass
class AliasTable:
    """Walker alias tables for every row of a stochastic matrix, padded to a common width."""

    degree: np.ndarray
    target: np.ndarray
    alias: np.ndarray
    prob: np.ndarray

    @classmethod
    def from_matrix(cls, Q: np.ndarray) -> "AliasTable":
        S = Q.shape[0]
        supports = [np.flatnonzero(Q[i] > 0) for i in range(S)]
        width = max(len(s) for s in supports)
        degree = np.array([len(s) for s in supports])
        target = np.zeros((S, width), dtype=np.int64)
        alias = np.zeros((S, width), dtype=np.int64)
        prob = np.ones((S, width))
        for i, sup in enumerate(supports):
            p = Q[i, sup] / Q[i, sup].sum()
            k = len(sup)
            scaled = p * k
            small = [j for j in range(k) if scaled[j] < 1.0]
            large = [j for j in range(k) if scaled[j] >= 1.0]
            col_alias = np.arange(k)
            col_prob = np.ones(k)
            while small and large:
                s, l = small.pop(), large.pop()
                col_prob[s] = scaled[s]
                col_alias[s] = l
                scaled[l] -= 1.0 - scaled[s]
                (small if scaled[l] < 1.0 else large).append(l)
            target[i, :k] = sup
            alias[i, :k] = sup[col_alias]
            prob[i, :k] = col_prob
        return cls(degree, target, alias, prob)

    def step(self, state: np.ndarray, u: np.ndarray) -> np.ndarray:
        # one uniform per draw: the integer part picks the column, the fractional part flips the coin
        width = self.target.shape[1]
        v = u * self.degree.take(state)
        col = v.astype(np.int64)
        coin = v - col
        flat = state * width + col
        keep = coin < self.prob.ravel().take(flat)
        alias = self.alias.ravel().take(flat)
        return alias + keep * (self.target.ravel().take(flat) - alias)


@dataclass
class SampleBatch:
    """Per-trial records of ``trials`` independent paths ``Z_0..Z_n``.

    ``gap_hist[i, k]`` counts gaps of size ``k`` in trial ``i`` for
    ``k < kmax``; column ``kmax`` lumps every larger gap.
    """

    n: int
    trials: int
    seed: int
    weights: np.ndarray
    summands: np.ndarray
    functional: np.ndarray
    gap_hist: np.ndarray
    max_gap: np.ndarray
    final_state: np.ndarray
    kmax: int = DEFAULT_KMAX
    extra: dict = field(default_factory=dict)

    @property
    def ess(self) -> float:
        w = self.weights
        return float(w.sum() ** 2 / (w * w).sum())

    def statistic(self, name: str) -> np.ndarray:
        if name in ("summand-count", "summands"):
            return self.summands.astype(float)
        if name == "functional":
            return self.functional
        if name == "max-gap":
            return self.max_gap.astype(float)
        if name == "total-gaps":
            return self.gap_hist.sum(axis=1).astype(float)
        if name.startswith("gap-count:"):
            k = int(name.split(":", 1)[1])
            if not 0 <= k < self.kmax:
                raise InputError("BAD_GAP", f"gap size {k} outside the recorded range 0..{self.kmax - 1}")
            return self.gap_hist[:, k].astype(float)
        if name.startswith("max-gap-le:"):
            m = int(name.split(":", 1)[1])
            return (self.max_gap <= m).astype(float)
        raise InputError("UNKNOWN_STATISTIC", f"unknown sample statistic {name!r}")

    def summary(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "ess": self.ess,
            "weight_min": float(self.weights.min()),
            "weight_max": float(self.weights.max()),
        }


def _block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), block])))


def _run_block(model: ChainModel, table: AliasTable, g: np.ndarray, n: int, size: int, seed: int, block: int, kmax: int):
    rng = _block_generator(seed, block)
    digits = model.space.digits()
    start_cdf = np.cumsum(model.tilde_phi_c)
    start_cdf[-1] = 1.0
    state = np.searchsorted(start_cdf, rng.random(size), side="right")
    nonzero = digits > 0
    extra_zero = np.maximum(digits - 1, 0)
    has_extra = bool(extra_zero.any())
    rows = np.arange(size)
    hist = np.zeros((size, kmax + 1), dtype=np.int64)
    summands = np.zeros(size, dtype=np.int64)
    functional = np.zeros(size)
    maxg = np.zeros(size, dtype=np.int64)
    last = np.full(size, -1, dtype=np.int64)
    for j in range(n + 1):
        if j:
            state = table.step(state, rng.random(size))
        functional += g.take(state)
        nz = nonzero.take(state)
        summands += nz
        if has_extra:
            hist[:, 0] += extra_zero.take(state)
        hit = rows[nz]
        prev = last.take(hit)
        last[hit] = j
        closed = prev >= 0
        idx, gap = hit[closed], j - prev[closed]
        hist[idx, np.minimum(gap, kmax)] += 1  # idx is duplicate-free
        maxg[idx] = np.maximum(maxg.take(idx), gap)
    weights = 1.0 / model.phi_c[state]
    return weights, summands, functional, hist, maxg, state


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise InputError("BAD_THREADS", f"{THREADS_ENV} must be an integer, got {raw!r}") from exc


def sample_paths(
    model: ChainModel,
    n: int,
    trials: int,
    seed: int,
    g=None,
    kmax: int = DEFAULT_KMAX,
    threads: int | None = None,
) -> SampleBatch:
    """Simulate ``trials`` paths of length ``n+1`` under ``Q`` and record per-trial statistics."""
    from .functionals import as_vector

    if trials < 1:
        raise InputError("BAD_TRIALS", f"trials must be >= 1, got {trials}")
    if n < 0:
        raise InputError("BAD_LENGTH", f"n must be non-negative, got {n}")
    gvec = as_vector(model.space, g)
    table = AliasTable.from_matrix(np.asarray(model.Q))
    sizes = [min(BLOCK, trials - s) for s in range(0, trials, BLOCK)]

    def job(b):
        return _run_block(model, table, gvec, n, sizes[b], seed, b, kmax)

    workers = threads or thread_count()
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(b) for b in range(len(sizes))]
    cols = [np.concatenate([p[i] for p in parts]) for i in range(6)]
    return SampleBatch(
        n=n,
        trials=trials,
        seed=seed,
        weights=cols[0],
        summands=cols[1],
        functional=cols[2],
        gap_hist=cols[3],
        max_gap=cols[4],
        final_state=cols[5],
        kmax=kmax,
    )


def weighted_ratio(values: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    """Self-normalized mean ``sum w f / sum w`` and its delta-method standard error."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not total > 0:
        raise InputError("ZERO_WEIGHT", "total importance weight is zero")
    est = float(weights @ values / total)
    resid = weights * (values - est)
    stderr = float(np.sqrt(resid @ resid) / total)
    return est, stderr


def estimate(batch: SampleBatch, statistic: str | np.ndarray) -> tuple[float, float]:
    values = batch.statistic(statistic) if isinstance(statistic, str) else np.asarray(statistic, dtype=float)
    if values.shape != batch.weights.shape:
        raise InputError("BAD_STATISTIC", "statistic needs one value per trial")
    return weighted_ratio(values, batch.weights)


def weighted_ks_normal(values: np.ndarray, weights: np.ndarray) -> float:
    """Sup distance between the weighted empirical CDF of ``values`` and the standard normal CDF.

    Both one-sided limits are compared at every atom, so ties are handled exactly.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    atoms, inverse = np.unique(values, return_inverse=True)
    mass = np.bincount(inverse, weights=weights) / weights.sum()
    upper = np.cumsum(mass)
    lower = upper - mass
    phi = ndtr(atoms)
    return float(max(np.max(np.abs(upper - phi)), np.max(np.abs(lower - phi))))


def standardized_summands(batch: SampleBatch, c_lek: float, d: float, sigma2: float) -> np.ndarray:
    n1 = batch.n + 1
    return (batch.summands - (c_lek * n1 + d)) / np.sqrt(sigma2 * n1)


def lln_tail_fraction(batch: SampleBatch, c_lek: float, eps: float = 0.01) -> float:
    """Weighted fraction of trials with ``|S_n/(n+1) - c_lek| > eps``."""
    dev = np.abs(batch.summands / (batch.n + 1) - c_lek) > eps
    return float(batch.weights @ dev / batch.weights.sum())


def empirical_gap_measure(batch: SampleBatch) -> np.ndarray:
    """Per-trial empirical gap distribution ``N(k)/sum N`` over the recorded columns."""
    tot = batch.gap_hist.sum(axis=1, keepdims=True)
    return batch.gap_hist / np.maximum(tot, 1)

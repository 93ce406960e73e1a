"""Additive functionals ``S_n = sum_j g(Z_j)`` of the transformed chain.

Closed-form constants come from the group inverse of ``Q``; exact values
under the uniform measure on decompositions come from the transfer DP.
``g`` is always a vector over the state space (any sequence, numpy array
or a callable on :class:`~zeckchain.chain.ChainState`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .chain import ChainModel, ChainState, StateSpace, build_state_space
from .errors import InternalFault
from .recurrence import Recurrence
from .transfer import additive_moments

METHODS = ("closed-form", "enumeration", "transfer-dp", "weighted-chain-dp", "monte-carlo")


def summand_indicator(space: StateSpace) -> np.ndarray:
    """``g(z) = 1`` iff the digit is nonzero; summing it counts summands."""
    return np.array([float(z.x > 0) for z in space.states])


def state_indicator(space: StateSpace, i: int) -> np.ndarray:
    g = np.zeros(len(space))
    g[i] = 1.0
    return g


def digit_set_indicator(space: StateSpace, digits) -> np.ndarray:
    digits = set(digits)
    return np.array([float(z.x in digits) for z in space.states])


def below_coefficient_indicator(space: StateSpace) -> np.ndarray:
    """``g(z) = 1`` iff the digit is strictly below the coefficient at its index."""
    rec = space.rec
    return np.array([float(z.x < rec.coef(z.b)) for z in space.states])


def as_vector(space: StateSpace, g) -> np.ndarray:
    if g is None:
        return summand_indicator(space)
    if callable(g):
        return np.array([float(g(z)) for z in space.states])
    g = np.asarray(g, dtype=float)
    if g.shape != (len(space),):
        raise ValueError(f"g must have one entry per state ({len(space)}), got shape {g.shape}")
    return g


def _as_fractions(space: StateSpace, g) -> list[Fraction]:
    if g is None:
        return [Fraction(int(z.x > 0)) for z in space.states]
    if callable(g):
        vals = [g(z) for z in space.states]
    else:
        vals = list(g)
    if len(vals) != len(space):
        raise ValueError(f"g must have one entry per state ({len(space)}), got {len(vals)}")
    return [v if isinstance(v, Fraction) else Fraction(v) for v in vals]


@dataclass
class GroupInverse:
    qsharp: np.ndarray

    def __matmul__(self, v):
        return self.qsharp @ v


@dataclass
class StatReport:
    """A statistic with the route it was obtained by.

    ``value`` is the headline number (a :class:`Fraction` for exact
    methods); ``stderr`` is set only for Monte Carlo.
    """

    method: str
    value: float | Fraction | None = None
    c_lek: float | None = None
    d: float | None = None
    sigma2: float | None = None
    n: int | None = None
    stderr: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    def to_dict(self) -> dict:
        out = {"method": self.method}
        for key in ("c_lek", "d", "sigma2", "n", "stderr"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v
        if self.value is not None:
            out["value"] = self.value
        out.update(self.extra)
        return out


def group_inverse(model: ChainModel) -> GroupInverse:
    """``(I - Q + 1 pi)^-1 - 1 pi``: inverse of ``I - Q`` on mean-zero functions, zero on constants."""
    Q, pi = model.Q, model.piQ
    n = len(pi)
    Pi = np.outer(np.ones(n), pi)
    try:
        Z = np.linalg.solve(np.eye(n) - Q + Pi, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise InternalFault("fundamental matrix is singular; chain is not ergodic") from exc
    return GroupInverse(Z - Pi)


def deviation_series(Q: np.ndarray, pi: np.ndarray, terms: int) -> np.ndarray:
    """Truncated ``sum_{j<terms} (Q^j - 1 pi)``; converges to the group inverse for ergodic ``Q``."""
    n = len(pi)
    Pi = np.outer(np.ones(n), pi)
    acc = np.zeros((n, n))
    P = np.eye(n)
    for _ in range(terms):
        acc += P - Pi
        P = P @ Q
    return acc


def lekkerkerker_constants(model: ChainModel, g=None, qsharp: GroupInverse | None = None) -> StatReport:
    """Slope and intercept of ``E S_n = C_Lek (n+1) + d + o(1)`` under the uniform measure."""
    g = as_vector(model.space, g)
    qs = (qsharp or group_inverse(model)).qsharp
    pi = model.piQ
    c_lek = float(pi @ g)
    g_tilde = g - c_lek
    d = float(model.tilde_phi_c @ (qs @ g)) + float(pi @ (g_tilde * (qs @ (1.0 / model.phi_c)))) / model.nu_c_l1
    return StatReport("closed-form", value=c_lek, c_lek=c_lek, d=d)


def asymptotic_variance(model: ChainModel, g=None, qsharp: GroupInverse | None = None) -> StatReport:
    g = as_vector(model.space, g)
    qs = (qsharp or group_inverse(model)).qsharp
    pi = model.piQ
    g_tilde = g - float(pi @ g)
    sigma2 = float(pi @ (g_tilde * (2.0 * (qs @ g_tilde) - g_tilde)))
    if sigma2 < 0:
        if sigma2 < -1e-12:
            raise InternalFault(f"negative asymptotic variance {sigma2}")
        sigma2 = 0.0
    return StatReport("closed-form", value=sigma2, sigma2=sigma2)


def _integer_scaled(space: StateSpace, g) -> tuple[list[int], int]:
    vals = _as_fractions(space, g)
    den = math.lcm(*(v.denominator for v in vals))
    return [int(v * den) for v in vals], den


def conditioned_mean_counting(rec: Recurrence, g, n: int) -> Fraction:
    """Exact ``E S_n`` under the uniform measure on length-``n+1`` decompositions."""
    space = build_state_space(rec)
    g_int, den = _integer_scaled(space, g)
    return additive_moments(rec, n, g_int).mean / den


def conditioned_variance_counting(rec: Recurrence, g, n: int) -> Fraction:
    """Exact variance of ``S_n`` under the uniform measure on length-``n+1`` decompositions."""
    space = build_state_space(rec)
    g_int, den = _integer_scaled(space, g)
    return additive_moments(rec, n, g_int).variance / den**2


def conditioned_mean_weighted_chain(model: ChainModel, g, n: int) -> float:
    """``E S_n`` as the ratio of ``1/phi_c(Z_n)``-weighted expectations of the transformed chain.

    Forward recursion carrying, per state, the occupation probability and
    the partial-sum weight ``E[S_j; Z_j = z]`` under ``Q`` started from
    ``tilde_phi_c``.
    """
    g = as_vector(model.space, g)
    Q = model.Q
    w = model.tilde_phi_c.copy()
    s = w * g
    for _ in range(n):
        w = w @ Q
        s = s @ Q + w * g
    inv_phi = 1.0 / model.phi_c
    return float(s @ inv_phi) / float(w @ inv_phi)


conditioned_mean_theorem22 = conditioned_mean_weighted_chain


def mean_prediction(model: ChainModel, n: int, g=None) -> float:
    rep = lekkerkerker_constants(model, g)
    return rep.c_lek * (n + 1) + rep.d


def group_inverse_residuals(model: ChainModel, qsharp: GroupInverse | None = None, series_terms: int = 400) -> dict:
    """Max residual of each defining identity of the group inverse."""
    qs = (qsharp or group_inverse(model)).qsharp
    Q, pi = model.Q, model.piQ
    n = len(pi)
    Pi = np.outer(np.ones(n), pi)
    I = np.eye(n)
    return {
        "annihilates_constants": float(np.max(np.abs(qs @ np.ones(n)))),
        "stationary_left_null": float(np.max(np.abs(pi @ qs))),
        "inverts_on_mean_zero": float(np.max(np.abs((I - Q) @ qs - (I - Pi)))),
        "commutes_with_Q": float(np.max(np.abs(Q @ qs - qs @ Q))),
        "deviation_series": float(np.max(np.abs(qs - deviation_series(Q, pi, series_terms)))),
    }

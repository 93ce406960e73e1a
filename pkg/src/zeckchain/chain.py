"""State space, restricted uniform chain and its Doob transform.

States are triples ``(x, b, b_next)``: the current digit, the bookkeeping
index attached to it and the index of the next digit.  A digit string is
legal exactly when its induced triple path stays inside the state space
and starts in the start set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import gcd
from typing import NamedTuple

import numpy as np

from .errors import InternalFault, ModelError
from .recurrence import DEFAULT_TOL, CompanionSpectral, Recurrence, companion_spectral


class ChainState(NamedTuple):
    x: int
    b: int
    b_next: int


def next_index(rec: Recurrence, b: int, x: int) -> int | None:
    """Index following digit ``x`` placed at index ``b``; ``None`` if illegal."""
    cb = rec.coef(b)
    if 0 <= x < cb:
        return 1
    if x == cb and b < rec.L:
        return b + 1
    return None


def in_state_space(rec: Recurrence, z: ChainState) -> bool:
    x, b, bn = z
    if not (1 <= b <= rec.L and 1 <= bn <= rec.L):
        return False
    return (0 <= x < rec.coef(b) and bn == 1) or (b < rec.L and x == rec.coef(b) and bn == b + 1)


def in_start_set(rec: Recurrence, z: ChainState) -> bool:
    return in_state_space(rec, z) and z.b == 1 and z.x > 0


@dataclass(frozen=True)
class StateSpace:
    rec: Recurrence
    states: tuple[ChainState, ...]
    start_states: tuple[ChainState, ...]
    index: dict = field(repr=False)

    def __len__(self):
        return len(self.states)

    @property
    def start_indices(self) -> list[int]:
        return [self.index[z] for z in self.start_states]

    def successors(self, i: int) -> list[int]:
        """Indices reachable from state ``i`` in one step, in increasing digit order."""
        bn = self.states[i].b_next
        return sorted((j for j, z in enumerate(self.states) if z.b == bn), key=lambda j: self.states[j].x)

    def digits(self) -> np.ndarray:
        return np.array([z.x for z in self.states])


def build_state_space(rec: Recurrence) -> StateSpace:
    states = []
    for b in range(1, rec.L + 1):
        for x in range(rec.coef(b)):
            states.append(ChainState(x, b, 1))
        if b < rec.L:
            states.append(ChainState(rec.coef(b), b, b + 1))
    states.sort(key=lambda z: (z.b, z.b_next, z.x))
    start = tuple(z for z in states if z.b == 1 and z.x > 0)
    return StateSpace(rec, tuple(states), start, {z: i for i, z in enumerate(states)})


def path_of_digits(rec: Recurrence, digits) -> list[ChainState] | None:
    """Triple path induced by a digit string starting at index 1, or ``None`` once it leaves the space."""
    path = []
    b = 1
    for x in digits:
        if not 1 <= b <= rec.L:
            return None
        bn = next_index(rec, b, x)
        if bn is None:
            return None
        path.append(ChainState(x, b, bn))
        b = bn
    return path


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChainModel:
    """Doob-transformed chain together with the restricted uniform chain it comes from.

    Normalizations: ``phi_c`` sums to one and ``nu_c * phi_c`` sums to one,
    so ``piQ = nu_c * phi_c``.
    """

    rec: Recurrence
    space: StateSpace
    spectral: CompanionSpectral
    gamma: float
    pL: np.ndarray
    lambda_c: float
    phi_c: np.ndarray
    nu_c: np.ndarray
    Q: np.ndarray
    piQ: np.ndarray
    piQ1: np.ndarray
    tilde_phi_c: np.ndarray
    norm_K1K2: float

    @property
    def lambdaC(self) -> float:
        return self.spectral.lambdaC

    @property
    def nu_c_l1(self) -> float:
        return float(self.nu_c.sum())

    def to_dict(self) -> dict:
        return {
            "recurrence": self.rec.to_dict(),
            "states": [list(z) for z in self.space.states],
            "start_states": [list(z) for z in self.space.start_states],
            "lambdaC": self.lambdaC,
            "lambda_c": self.lambda_c,
            "gamma": self.gamma,
            "norm_K1K2": self.norm_K1K2,
            "phiC": list(self.spectral.phiC),
            "nuC": list(self.spectral.nuC),
            "phi_c": self.phi_c.tolist(),
            "nu_c": self.nu_c.tolist(),
            "piQ": self.piQ.tolist(),
            "piQ1": self.piQ1.tolist(),
            "tilde_phi_c": self.tilde_phi_c.tolist(),
            "Q": self.Q.tolist(),
        }


def restricted_matrix(space: StateSpace) -> tuple[float, np.ndarray]:
    rec = space.rec
    gamma = 1.0 / ((rec.max_c + 1) * rec.L)
    n = len(space)
    pL = np.zeros((n, n))
    for i, z in enumerate(space.states):
        for j, w in enumerate(space.states):
            if z.b_next == w.b:
                pL[i, j] = gamma
    return gamma, pL


def build_chain(rec: Recurrence, tol: float = DEFAULT_TOL) -> ChainModel:
    space = build_state_space(rec)
    if not space.start_states:
        raise ModelError(f"recurrence {rec} has no admissible start state; no decompositions to condition on")
    spec = companion_spectral(rec, tol)
    lam = spec.lambdaC
    gamma, pL = restricted_matrix(space)

    phi_raw = np.array([spec.phi(z.b_next) for z in space.states])
    nu_raw = np.array([spec.nu(z.b) for z in space.states])
    phi_c = phi_raw / phi_raw.sum()
    nu_c = nu_raw / float(nu_raw @ phi_c)
    lambda_c = lam * gamma

    Q = pL * phi_c[None, :] / (lambda_c * phi_c[:, None])
    piQ = nu_c * phi_c
    piQ1 = np.zeros(rec.max_c + 1)
    for z, p in zip(space.states, piQ):
        piQ1[z.x] += p
    tilde = np.zeros(len(space))
    idx = space.start_indices
    tilde[idx] = phi_c[idx] / phi_c[idx].sum()
    K1K2 = 1.0 / (lam * math.fsum(spec.nu(b) * spec.phi(b) for b in range(1, rec.L + 1)))

    return ChainModel(
        rec=rec,
        space=space,
        spectral=spec,
        gamma=gamma,
        pL=_frozen(pL),
        lambda_c=lambda_c,
        phi_c=_frozen(phi_c),
        nu_c=_frozen(nu_c),
        Q=_frozen(Q),
        piQ=_frozen(piQ),
        piQ1=_frozen(piQ1),
        tilde_phi_c=_frozen(tilde),
        norm_K1K2=K1K2,
    )


def transition_closed_form(model: ChainModel) -> np.ndarray:
    """Transition matrix rebuilt from the two-case closed form over companion data."""
    spec = model.spectral
    lam = spec.lambdaC
    rec = model.rec
    n = len(model.space)
    Q = np.zeros((n, n))
    for i, z in enumerate(model.space.states):
        bp = z.b_next
        for j, w in enumerate(model.space.states):
            if w.b != bp:
                continue
            if w.b_next == 1:
                Q[i, j] = spec.phi(1) / (lam * spec.phi(bp))
            else:
                Q[i, j] = 1.0 - spec.phi(1) * rec.coef(bp) / (lam * spec.phi(bp))
    return Q


def stationary_by_solve(Q: np.ndarray) -> np.ndarray:
    """Stationary vector from ``pi (I - Q) = 0, sum pi = 1`` by least squares."""
    n = Q.shape[0]
    A = np.vstack([(np.eye(n) - Q).T, np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return pi


def support_period(M: np.ndarray) -> tuple[bool, int]:
    """(irreducible, period) of the directed support graph of ``M``."""
    n = M.shape[0]
    adj = [np.flatnonzero(M[i] > 0) for i in range(n)]
    level = {0: 0}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in level:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    if len(level) < n:
        return False, 0
    # reverse reachability
    radj = [[] for _ in range(n)]
    for u in range(n):
        for v in adj[u]:
            radj[v].append(u)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in radj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    if len(seen) < n:
        return False, 0
    d = 0
    for u in range(n):
        for v in adj[u]:
            d = gcd(d, level[u] + 1 - level[v])
    return True, abs(d)


@dataclass
class SpectralReport:
    residuals: dict
    tol: float

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v <= self.tol]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"tol": self.tol, "passed": self.passed, "failures": self.failures, "residuals": self.residuals}


def verify_spectral(model: ChainModel, tol: float = 1e-10) -> SpectralReport:
    """Maximum residual of every structural identity the model must satisfy."""
    pL, Q, phi, nu, pi = model.pL, model.Q, model.phi_c, model.nu_c, model.piQ
    lam_c = model.lambda_c
    spec = model.spectral
    ones = np.ones(len(pi))
    start = np.zeros(len(pi), dtype=bool)
    start[model.space.start_indices] = True
    tilde_expected = np.where(start, phi, 0.0)
    tilde_expected = tilde_expected / tilde_expected.sum()
    irreducible, period = support_period(Q)
    K1 = 1.0 / sum(spec.phi(z.b_next) for z in model.space.states)
    K2 = nu[0] / spec.nu(model.space.states[0].b)
    res = {
        "right_eigenvector": float(np.max(np.abs(pL @ phi - lam_c * phi))),
        "left_eigenvector": float(np.max(np.abs(nu @ pL - lam_c * nu))),
        "perron_root_scaling": abs(lam_c - spec.lambdaC / ((model.rec.max_c + 1) * model.rec.L)),
        "phi_c_normalized": abs(phi.sum() - 1.0),
        "nu_phi_normalized": abs(float(nu @ phi) - 1.0),
        "Q_row_sums": float(np.max(np.abs(Q @ ones - 1.0))),
        "Q_doob_form": float(np.max(np.abs(Q - pL * phi[None, :] / (lam_c * phi[:, None])))),
        "Q_closed_form": float(np.max(np.abs(Q - transition_closed_form(model)))),
        "piQ_product_form": float(np.max(np.abs(pi - nu * phi))),
        "piQ_stationary": float(np.max(np.abs(pi @ Q - pi))),
        "piQ_total_mass": abs(pi.sum() - 1.0),
        "piQ_linear_solve": float(np.max(np.abs(pi - stationary_by_solve(Q)))),
        "K1K2_closed_form": abs(K1 * K2 - model.norm_K1K2),
        "tilde_phi_c": float(np.max(np.abs(model.tilde_phi_c - tilde_expected))),
        "irreducible_aperiodic": 0.0 if irreducible and period == 1 else 1.0,
    }
    return SpectralReport({k: float(v) for k, v in res.items()}, tol)


def check_model(model: ChainModel, tol: float = 1e-10) -> None:
    report = verify_spectral(model, tol)
    if not report.passed:
        raise InternalFault(f"chain invariants failed: {report.failures}")

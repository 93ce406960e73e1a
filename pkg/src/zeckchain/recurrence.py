"""Positive linear recurrences, their scale sequences and companion spectra."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, InternalFault

DEFAULT_TOL = 1e-13


@dataclass(frozen=True)
class Recurrence:
    """Coefficients ``c_1..c_L`` of a positive linear recursion.

    Construct through :func:`new_recurrence` (or :meth:`parse`) to get
    validation; the dataclass itself only normalizes ``c`` to a tuple.
    """

    L: int
    c: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(int(v) for v in self.c))

    @property
    def max_c(self) -> int:
        return max(self.c)

    def coef(self, b: int) -> int:
        """1-based coefficient access, ``coef(b) == c_b``."""
        return self.c[b - 1]

    def charpoly(self) -> list[int]:
        """Coefficients of ``x^L - sum c_j x^(L-j)``, highest degree first."""
        return [1] + [-v for v in self.c]

    def to_text(self) -> str:
        return f"L={self.L};c={','.join(map(str, self.c))}"

    def to_dict(self) -> dict:
        return {"L": self.L, "c": list(self.c)}

    @classmethod
    def parse(cls, text: str) -> "Recurrence":
        """Read either ``"L=4;c=1,0,0,2"`` or ``{"L": 4, "c": [1, 0, 0, 2]}``."""
        text = text.strip()
        if text.startswith("{"):
            try:
                obj = json.loads(text)
                return new_recurrence(obj["L"], obj["c"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError("BAD_FORMAT", f"cannot parse recurrence JSON {text!r}") from exc
        fields = {}
        for part in text.split(";"):
            key, sep, value = part.partition("=")
            if not sep:
                raise InputError("BAD_FORMAT", f"expected key=value in {text!r}")
            fields[key.strip()] = value.strip()
        try:
            L = int(fields["L"])
            c = [int(v) for v in fields["c"].split(",") if v.strip()]
        except (KeyError, ValueError) as exc:
            raise InputError("BAD_FORMAT", f"cannot parse recurrence {text!r}") from exc
        return new_recurrence(L, c)

    def __str__(self):
        return self.to_text()


def new_recurrence(L, c) -> Recurrence:
    """Validate and build a :class:`Recurrence`.

    Raises :class:`InputError` with one of the codes ``L_NOT_POSITIVE``,
    ``LENGTH_MISMATCH``, ``NOT_INTEGER``, ``NEGATIVE_COEFFICIENT``,
    ``C1_ZERO`` or ``CL_ZERO``.
    """
    if isinstance(L, bool) or not isinstance(L, (int, np.integer)) or L < 1:
        raise InputError("L_NOT_POSITIVE", f"recurrence length must be a positive integer, got {L!r}")
    c = list(c)
    if len(c) != L:
        raise InputError("LENGTH_MISMATCH", f"expected {L} coefficients, got {len(c)}")
    if any(isinstance(v, bool) or not isinstance(v, (int, np.integer)) for v in c):
        raise InputError("NOT_INTEGER", f"coefficients must be integers, got {c!r}")
    if any(v < 0 for v in c):
        raise InputError("NEGATIVE_COEFFICIENT", f"coefficients must be non-negative, got {c!r}")
    if c[0] == 0:
        raise InputError("C1_ZERO", "leading coefficient c_1 must be positive")
    if c[-1] == 0:
        raise InputError("CL_ZERO", "last coefficient c_L must be positive")
    return Recurrence(int(L), tuple(int(v) for v in c))


def scale_sequence(rec: Recurrence, m: int) -> list[int]:
    """Exact ``G_1..G_m``.

    ``G_{n+1} = c_1 G_n + ... + c_n G_1 + 1`` while ``n < L``, after which the
    plain ``L``-term recursion takes over.
    """
    if m < 1:
        raise InputError("BAD_LENGTH", f"m must be >= 1, got {m}")
    g = [1]
    while len(g) < m:
        n = len(g)
        if n < rec.L:
            g.append(sum(rec.c[j] * g[n - 1 - j] for j in range(n)) + 1)
        else:
            g.append(sum(rec.c[j] * g[n - 1 - j] for j in range(rec.L)))
    return g


def _root_function(rec: Recurrence, lam: float) -> tuple[float, float]:
    # f(x) = 1 - sum c_j x^-j is strictly increasing on (0, inf); same positive root as charpoly
    f = 1.0
    df = 0.0
    inv = 1.0 / lam
    p = 1.0
    for j, cj in enumerate(rec.c, start=1):
        p *= inv
        if cj:
            f -= cj * p
            df += j * cj * p * inv
    return f, df


def perron_root(rec: Recurrence, tol: float = DEFAULT_TOL) -> float:
    """Largest real root of the characteristic polynomial.

    Safeguarded Newton iteration inside the bracket ``[1, 1 + max c]``:
    any Newton step leaving the current bracket is replaced by bisection.
    """
    if tol <= 0:
        raise InputError("BAD_TOLERANCE", "tol must be positive")
    lo, hi = 1.0, 1.0 + rec.max_c
    if _root_function(rec, lo)[0] >= 0.0:
        # only L=1, c=[1]: root sits on the bracket edge
        return lo
    x = hi
    for _ in range(200):
        f, df = _root_function(rec, x)
        if f == 0.0:
            return x
        if f < 0.0:
            lo = x
        else:
            hi = x
        step = x - f / df if df > 0 else lo
        x_new = step if lo < step < hi else 0.5 * (lo + hi)
        if abs(x_new - x) <= 0.25 * tol * x_new or hi - lo <= tol * lo:
            return x_new
        x = x_new
    raise InternalFault("Perron root iteration did not converge")


@dataclass(frozen=True)
class CompanionSpectral:
    """Perron data of the companion matrix with its canonical scalings.

    ``phiC[b-1]`` is the right eigenvector entry at ``b`` scaled so that
    ``phiC(1) = lambdaC``; ``nuC[b-1] = lambdaC**-b``.
    """

    lambdaC: float
    phiC: tuple[float, ...]
    nuC: tuple[float, ...]
    charpoly: tuple[int, ...]

    def phi(self, b: int) -> float:
        return self.phiC[b - 1]

    def nu(self, b: int) -> float:
        return self.nuC[b - 1]


def companion_matrix(rec: Recurrence) -> np.ndarray:
    """Dense ``L x L`` matrix with ``c`` in the first column and ones on the superdiagonal."""
    C = np.zeros((rec.L, rec.L))
    C[:, 0] = rec.c
    C[np.arange(rec.L - 1), np.arange(1, rec.L)] = 1.0
    return C


def companion_spectral(rec: Recurrence, tol: float = DEFAULT_TOL) -> CompanionSpectral:
    lam = perron_root(rec, tol)
    # lam^b' - sum_{j<b'} c_j lam^(b'-j) equals the positive tail sum below at the root;
    # the tail form avoids cancellation.
    phi = tuple(
        math.fsum(rec.c[j - 1] * lam ** (b - j) for j in range(b, rec.L + 1)) for b in range(1, rec.L + 1)
    )
    nu = tuple(lam ** (-b) for b in range(1, rec.L + 1))
    if min(phi) <= 0 or min(nu) <= 0:
        raise InternalFault("non-positive companion eigenvector entry; Perron root is wrong")
    return CompanionSpectral(lam, phi, nu, tuple(rec.charpoly()))


def phi_subtractive_form(rec: Recurrence, lam: float) -> list[float]:
    """Right eigenvector written as ``lam^b - sum_{j<b} c_j lam^(b-j)`` (no simplification)."""
    return [lam**b - sum(rec.c[j - 1] * lam ** (b - j) for j in range(1, b)) for b in range(1, rec.L + 1)]

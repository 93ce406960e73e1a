"""Legal digit strings: encoding, decoding, legality tests and enumeration.

Digits are stored most significant first, so a length ``n+1`` string
``(a_0, ..., a_n)`` stands for ``sum a_j G_{n-j+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from .chain import ChainState, build_state_space, in_start_set, in_state_space, next_index
from .errors import BudgetError, InputError, InternalFault, ModelError
from .recurrence import Recurrence, scale_sequence

ENUMERATION_LIMIT = 10**7


@dataclass(frozen=True)
class DigitString:
    rec: Recurrence
    a: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(v) for v in self.a))

    def __len__(self):
        return len(self.a)

    def __iter__(self):
        return iter(self.a)

    def __str__(self):
        return ",".join(map(str, self.a))

    def to_list(self) -> list[int]:
        return list(self.a)


def recompose(ds: DigitString | Sequence[int], rec: Recurrence | None = None) -> int:
    a = tuple(ds)
    rec = rec if rec is not None else ds.rec
    if not a:
        return 0
    g = scale_sequence(rec, len(a))
    return sum(x * g[len(a) - 1 - j] for j, x in enumerate(a))


def is_legal(rec: Recurrence, a: Sequence[int]) -> bool:
    """Prefix-case recursion defining legality (empty tails are legal)."""
    a = tuple(a)
    if not a:
        return True
    if a[0] < 1 or any(x < 0 or x > rec.max_c for x in a):
        return False
    n, L, c = len(a), rec.L, rec.c
    if n < L and a == c[:n]:
        return True
    for s in range(1, min(L, n) + 1):
        if a[: s - 1] != c[: s - 1] or not a[s - 1] < c[s - 1]:
            continue
        ell = 0
        while True:
            if is_legal(rec, a[s + ell :]):
                return True
            if s + ell < n and a[s + ell] == 0:
                ell += 1
            else:
                break
    return False


def is_legal_realization(rec: Recurrence, path: Sequence[ChainState]) -> bool:
    """Whether a finite triple path is the prefix of a legal realization."""
    path = [ChainState(*z) for z in path]
    if not path or not in_start_set(rec, path[0]):
        return False
    for z, w in zip(path, path[1:]):
        if not in_state_space(rec, z) or z.b_next != w.b:
            return False
    return in_state_space(rec, path[-1])


def _max_tail_values(rec: Recurrence, g: list[int], length: int) -> list[dict[int, int]]:
    # best[m][b]: largest value writable in the last m places when the next index is b
    best: list[dict[int, int]] = [{b: 0 for b in range(1, rec.L + 1)}]
    for m in range(1, length + 1):
        row = {}
        for b in range(1, rec.L + 1):
            top = 0
            for x in range(rec.max_c + 1):
                bn = next_index(rec, b, x)
                if bn is not None:
                    top = max(top, x * g[m - 1] + best[m - 1][bn])
            row[b] = top
        best.append(row)
    return best


def _length_of(rec: Recurrence, N: int) -> tuple[int, list[int]]:
    g = [1]
    m = 16
    while True:
        g = scale_sequence(rec, m)
        if g[-1] > N:
            break
        if g[-1] == g[-2]:
            raise ModelError(f"recurrence {rec} has a constant scale sequence; integers > 1 have no decomposition")
        m *= 2
    # G_{n+1} <= N < G_{n+2}
    n = max(i for i, v in enumerate(g) if v <= N)
    return n, g


def decompose(rec: Recurrence, N: int) -> DigitString:
    """Legal decomposition of ``N`` by greedy extraction with reachability lookahead."""
    if isinstance(N, bool) or not isinstance(N, int) or N < 1:
        raise InputError("BAD_INTEGER", f"N must be a positive integer, got {N!r}")
    if rec.L == 1 and rec.c[0] == 1:
        raise ModelError(f"recurrence {rec} has no legal decompositions")
    n, g = _length_of(rec, N)
    best = _max_tail_values(rec, g, n)
    digits = []
    r = N
    b = 1
    for pos in range(n, -1, -1):
        scale = g[pos]
        chosen = None
        for x in range(rec.max_c, -1, -1):
            bn = next_index(rec, b, x)
            if bn is None or x * scale > r:
                continue
            if r - x * scale <= best[pos][bn]:
                chosen = (x, bn)
                break
        if chosen is None:
            raise InternalFault(f"greedy decomposition of {N} got stuck at position {pos}")
        x, b = chosen
        digits.append(x)
        r -= x * scale
    ds = DigitString(rec, digits)
    if r != 0 or ds.a[0] < 1 or not is_legal(rec, ds.a):
        raise InternalFault(f"greedy decomposition of {N} produced an illegal string {ds}")
    return ds


def count_legal(rec: Recurrence, n: int) -> int:
    """Number of legal strings of length ``n+1``."""
    g = scale_sequence(rec, n + 2)
    return g[n + 1] - g[n]


def enumerate_legal(rec: Recurrence, n: int, limit: int = ENUMERATION_LIMIT) -> Iterator[DigitString]:
    """All legal strings of length ``n+1`` in lexicographic order, by depth-first extension."""
    if n < 0:
        raise InputError("BAD_LENGTH", f"n must be non-negative, got {n}")
    total = count_legal(rec, n)
    if total > limit:
        raise BudgetError(f"{total} strings of length {n + 1} exceed the enumeration limit {limit}")
    space = build_state_space(rec)
    succ = [space.successors(i) for i in range(len(space))]
    digit = [z.x for z in space.states]

    def extend(i, prefix):
        prefix.append(digit[i])
        if len(prefix) == n + 1:
            yield DigitString(rec, prefix)
        else:
            for j in succ[i]:
                yield from extend(j, prefix)
        prefix.pop()

    for i in sorted(space.start_indices, key=lambda i: digit[i]):
        yield from extend(i, [])

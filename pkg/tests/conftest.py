from functools import lru_cache

import numpy as np
import pytest

from zeckchain.chain import build_chain
from zeckchain.recurrence import new_recurrence

TEST_RECS = [(2, (1, 1)), (1, (2,)), (3, (1, 1, 1)), (4, (1, 0, 0, 2)), (2, (2, 1))]
# extra shapes with interior zeros, used where the gap machinery needs them
ZERO_RECS = [(3, (2, 0, 3)), (5, (1, 0, 2, 0, 1)), (4, (3, 0, 0, 1))]

PHI = (1 + 5**0.5) / 2


@lru_cache(maxsize=None)
def rec_of(L, c):
    return new_recurrence(L, list(c))


@lru_cache(maxsize=None)
def model_of(L, c):
    return build_chain(rec_of(L, c))


def rec_id(rc):
    L, c = rc
    return f"L{L}-" + "".join(map(str, c))


def random_recurrences(count=20, seed=20240601, max_L=6, max_c=5):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        L = int(rng.integers(1, max_L + 1))
        c = [int(v) for v in rng.integers(0, max_c + 1, size=L)]
        c[0] = max(c[0], 1)
        c[-1] = max(c[-1], 1)
        if L == 1 and c[0] == 1:
            continue
        out.append((L, tuple(c)))
    return out


@pytest.fixture(params=TEST_RECS, ids=rec_id)
def test_rec(request):
    return request.param


@pytest.fixture
def fib():
    return model_of(2, (1, 1))


@lru_cache(maxsize=None)
def fib_batch(n, trials, seed):
    """Monte Carlo batches shared between the sampler tests and the acceptance suite."""
    from zeckchain.sampler import sample_paths

    return sample_paths(model_of(2, (1, 1)), n, trials, seed)


ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

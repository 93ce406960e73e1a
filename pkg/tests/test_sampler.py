import numpy as np
import pytest

from zeckchain.errors import InputError
from zeckchain.functionals import asymptotic_variance, conditioned_mean_counting, lekkerkerker_constants
from zeckchain.gaps import gap_counts, max_gap, maxgap_law
from zeckchain.sampler import (
    BLOCK,
    AliasTable,
    estimate,
    sample_paths,
    standardized_summands,
    weighted_ks_normal,
    weighted_ratio,
)
from zeckchain.chain import build_state_space
from zeckchain.decomposer import is_legal

from conftest import TEST_RECS, fib_batch, model_of


class TestAlias:
    def test_reproduces_row_distributions(self):
        rng = np.random.default_rng(0)
        Q = np.array([[0.2, 0.0, 0.8], [0.5, 0.5, 0.0], [0.0, 1.0, 0.0]])
        table = AliasTable.from_matrix(Q)
        for i in range(3):
            draws = table.step(np.full(200_000, i), rng.random(200_000))
            freq = np.bincount(draws, minlength=3) / 200_000
            assert np.max(np.abs(freq - Q[i])) < 5e-3
            assert set(np.unique(draws)) <= set(np.flatnonzero(Q[i] > 0))


class TestBatch:
    def test_determinism(self, fib):
        a = sample_paths(fib, 50, 1000, seed=7)
        b = sample_paths(fib, 50, 1000, seed=7)
        for field in ("weights", "summands", "gap_hist", "max_gap", "final_state"):
            assert np.array_equal(getattr(a, field), getattr(b, field))
        c = sample_paths(fib, 50, 1000, seed=8)
        assert not np.array_equal(a.summands, c.summands)

    def test_independent_of_thread_count(self, fib):
        trials = 2 * BLOCK + 17
        a = sample_paths(fib, 20, trials, seed=3, threads=1)
        b = sample_paths(fib, 20, trials, seed=3, threads=3)
        assert np.array_equal(a.summands, b.summands) and np.array_equal(a.weights, b.weights)

    def test_weight_bounds_and_ess(self, fib):
        b = sample_paths(fib, 30, 5000, seed=1)
        assert b.weights.min() >= 1 / fib.phi_c.max() - 1e-12
        assert b.weights.max() <= 1 / fib.phi_c.min() + 1e-12
        assert 0 < b.ess <= b.trials

    def test_per_trial_records_match_gap_module(self):
        # replay the paths and compare with the gap extraction applied to the digits
        model = model_of(2, (2, 1))
        b = sample_paths(model, 40, 300, seed=11, kmax=8)
        sp = build_state_space(model.rec)
        rng_paths = _replay(model, b, 300, 40, 11)
        for i, digits in enumerate(rng_paths):
            assert is_legal(model.rec, digits)
            counts = gap_counts(digits)
            assert b.summands[i] == sum(1 for x in digits if x > 0)
            assert b.max_gap[i] == max_gap(digits)
            for k in range(8):
                assert b.gap_hist[i, k] == counts.get(k, 0)
            assert b.gap_hist[i, 8] == sum(v for k, v in counts.items() if k >= 8)
            assert sp.states[b.final_state[i]].x == digits[-1]

    def test_errors(self, fib):
        with pytest.raises(InputError):
            sample_paths(fib, 10, 0, seed=1)
        with pytest.raises(InputError):
            sample_paths(fib, -1, 10, seed=1)
        b = sample_paths(fib, 5, 10, seed=1)
        with pytest.raises(InputError):
            b.statistic("mode")
        with pytest.raises(InputError):
            b.statistic(f"gap-count:{b.kmax}")


def _replay(model, batch, trials, n, seed):
    # re-run the block generator by hand to recover full digit paths
    from zeckchain.sampler import _block_generator

    table = AliasTable.from_matrix(np.asarray(model.Q))
    digits = model.space.digits()
    rng = _block_generator(seed, 0)
    cdf = np.cumsum(model.tilde_phi_c)
    cdf[-1] = 1.0
    state = np.searchsorted(cdf, rng.random(trials), side="right")
    path = [digits[state]]
    for _ in range(n):
        state = table.step(state, rng.random(trials))
        path.append(digits[state])
    return [tuple(int(v) for v in col) for col in np.array(path).T]


class TestEstimator:
    def test_constant_statistic(self):
        est, se = weighted_ratio(np.full(10, 3.5), np.linspace(1, 2, 10))
        assert est == pytest.approx(3.5) and se == pytest.approx(0.0, abs=1e-15)

    def test_zero_weight(self):
        with pytest.raises(InputError):
            weighted_ratio(np.ones(3), np.zeros(3))

    @pytest.mark.parametrize("L,c", TEST_RECS)
    def test_consistency_at_small_length(self, L, c):
        model = model_of(L, c)
        n = 12
        b = sample_paths(model, n, 10**6, seed=1000 + L)
        est, se = estimate(b, "summand-count")
        exact = float(conditioned_mean_counting(model.rec, None, n))
        assert abs(est - exact) <= 4 * se

    def test_mean_at_length_2000(self, fib):
        b = fib_batch(2000, 100_000, 42)
        lek = lekkerkerker_constants(fib)
        est, se = estimate(b, "summand-count")
        assert abs(est - (lek.c_lek * 2001 + lek.d)) <= 3 * se
        assert b.ess / b.trials >= 0.5

    def test_mean_at_length_5000(self, fib):
        b = fib_batch(5000, 100_000, 5000)
        lek = lekkerkerker_constants(fib)
        sigma = asymptotic_variance(fib).sigma2 ** 0.5
        est, _ = estimate(b, "summand-count")
        assert abs(est - (lek.c_lek * 5001 + lek.d)) <= 0.02 * 5001**0.5 * sigma

    def test_max_gap_agrees_with_exact_at_300(self, fib):
        from zeckchain.gaps import maxgap_exact_cdf

        b = fib_batch(300, 100_000, 300)
        law = maxgap_law(fib)
        for k in range(-1, 4):
            m = law.centering(300) + k
            est, se = estimate(b, f"max-gap-le:{m}")
            assert abs(est - float(maxgap_exact_cdf(fib.rec, 300, m))) <= 3 * se

    def test_max_gap_against_limit_at_2000(self, fib):
        b = fib_batch(2000, 100_000, 42)
        law = maxgap_law(fib)
        for k in range(-1, 4):
            est, _ = estimate(b, f"max-gap-le:{law.centering(2000) + k}")
            assert abs(est - law.cdf_offset(k)) <= 0.02, k


class TestNormalApproximation:
    def test_ks_identical_sample(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(50_000)
        assert weighted_ks_normal(x, np.ones_like(x)) < 0.01

    def test_ks_detects_shift(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(50_000) + 0.2
        assert weighted_ks_normal(x, np.ones_like(x)) > 0.05

    def test_ks_ties(self):
        assert weighted_ks_normal(np.zeros(4), np.ones(4)) == pytest.approx(0.5)

    def test_standardization(self, fib):
        b = sample_paths(fib, 100, 2000, seed=9)
        z = standardized_summands(b, 0.25, 1.0, 0.09)
        assert np.allclose(z, (b.summands - 0.25 * 101 - 1.0) / np.sqrt(0.09 * 101))

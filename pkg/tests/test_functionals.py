import math
from fractions import Fraction

import numpy as np
import pytest

from zeckchain.errors import InternalFault
from zeckchain.functionals import (
    StatReport,
    as_vector,
    asymptotic_variance,
    below_coefficient_indicator,
    conditioned_mean_counting,
    conditioned_mean_weighted_chain,
    conditioned_variance_counting,
    deviation_series,
    digit_set_indicator,
    group_inverse,
    group_inverse_residuals,
    lekkerkerker_constants,
    mean_prediction,
    state_indicator,
)
from zeckchain.chain import ChainState

from conftest import PHI, TEST_RECS, ZERO_RECS, model_of, random_recurrences, rec_of

SQRT5 = math.sqrt(5)


def indicators(model):
    sp = model.space
    return [None] + [state_indicator(sp, i) for i in range(len(sp))]


class TestGroupInverse:
    def test_fibonacci_matrix(self, fib):
        order = [fib.space.index[z] for z in (ChainState(0, 1, 1), ChainState(0, 2, 1), ChainState(1, 1, 2))]
        qs = group_inverse(fib).qsharp[np.ix_(order, order)]
        expected = np.array([[5 - PHI, PHI - 4, -1], [-PHI, PHI + 1, -1], [1 - 3 * PHI, 2 * PHI - 2, PHI + 1]]) / 5
        assert np.max(np.abs(qs - expected)) <= 1e-10

    @pytest.mark.parametrize("L,c", TEST_RECS + random_recurrences())
    def test_identities(self, L, c):
        model = model_of(L, c)
        res = group_inverse_residuals(model, series_terms=2000)
        assert res["annihilates_constants"] <= 1e-12
        assert res["inverts_on_mean_zero"] <= 1e-10
        assert res["commutes_with_Q"] <= 1e-10
        assert res["stationary_left_null"] <= 1e-10

    def test_random_three_state_chain_matches_series(self):
        from dataclasses import dataclass

        rng = np.random.default_rng(5)
        Q = rng.random((3, 3)) + 0.1
        Q /= Q.sum(axis=1, keepdims=True)
        w, v = np.linalg.eig(Q.T)
        pi = np.real(v[:, np.argmin(np.abs(w - 1))])
        pi /= pi.sum()

        @dataclass
        class Bare:
            Q: np.ndarray
            piQ: np.ndarray

        qs = group_inverse(Bare(Q, pi)).qsharp
        assert np.max(np.abs(qs - deviation_series(Q, pi, 200))) <= 1e-8
        assert np.max(np.abs(qs @ np.ones(3))) <= 1e-12


class TestConstants:
    def test_fibonacci(self, fib):
        lek = lekkerkerker_constants(fib)
        assert lek.c_lek == pytest.approx((5 - SQRT5) / 10, abs=1e-10)
        assert lek.c_lek == pytest.approx(1 / (PHI + 2), abs=1e-12)
        assert lek.d == pytest.approx(0.6, abs=1e-9)
        assert asymptotic_variance(fib).sigma2 == pytest.approx(SQRT5 / 25, abs=1e-10)
        assert asymptotic_variance(fib).sigma2 == pytest.approx((2 * PHI - 1) / 25, abs=1e-12)

    def test_constant_functional(self, fib):
        lek = lekkerkerker_constants(fib, np.ones(3))
        assert lek.c_lek == pytest.approx(1.0, abs=1e-12)
        assert lek.d == pytest.approx(0.0, abs=1e-12)
        assert asymptotic_variance(fib, np.full(3, 2.5)).sigma2 == 0.0

    def test_zero_coefficient_example(self):
        model = model_of(4, (1, 0, 0, 2))
        lam = model.lambdaC
        p = (lam - 1) / (4 * lam - 3)
        assert lekkerkerker_constants(model).c_lek == pytest.approx(1.5 * p, abs=1e-12)

    @pytest.mark.parametrize("L,c", TEST_RECS)
    def test_ranges(self, L, c):
        m = model_of(L, c)
        assert 0 < lekkerkerker_constants(m).c_lek < 1
        assert asymptotic_variance(m).sigma2 >= 0

    def test_report_rejects_unknown_method(self):
        with pytest.raises(ValueError):
            StatReport("guess")
        rep = lekkerkerker_constants(model_of(2, (1, 1)))
        assert rep.to_dict()["method"] == "closed-form" and rep.stderr is None

    def test_large_negative_variance_is_a_fault(self, fib, monkeypatch):
        import zeckchain.functionals as F

        monkeypatch.setattr(F, "group_inverse", lambda m: F.GroupInverse(-np.eye(3) * 10))
        with pytest.raises(InternalFault):
            F.asymptotic_variance(fib)

    def test_vector_shape_check(self, fib):
        with pytest.raises(ValueError):
            as_vector(fib.space, [1.0, 2.0])


class TestWeightedChainMean:
    def test_small_examples(self, fib):
        rec = fib.rec
        assert conditioned_mean_counting(rec, None, 2) == Fraction(3, 2)
        assert conditioned_mean_counting(rec, None, 4) == 2
        assert conditioned_variance_counting(rec, None, 4) == Fraction(2, 5)
        assert conditioned_mean_weighted_chain(fib, None, 2) == pytest.approx(1.5, abs=1e-12)
        for n in (0, 5, 17):
            assert conditioned_mean_counting(rec, np.ones(3), n) == n + 1
            assert conditioned_variance_counting(rec, np.ones(3), n) == 0
            assert conditioned_mean_weighted_chain(fib, np.ones(3), n) == pytest.approx(n + 1, abs=1e-12)

    @pytest.mark.parametrize("L,c", TEST_RECS + ZERO_RECS)
    def test_agreement_for_state_indicators(self, L, c):
        model = model_of(L, c)
        for g in indicators(model):
            for n in range(13):
                exact = float(conditioned_mean_counting(model.rec, g, n))
                assert abs(conditioned_mean_weighted_chain(model, g, n) - exact) <= 1e-9

    @pytest.mark.parametrize("L,c", TEST_RECS + ZERO_RECS)
    def test_agreement_for_digit_functionals(self, L, c):
        model = model_of(L, c)
        sp = model.space
        gs = [digit_set_indicator(sp, {0}), digit_set_indicator(sp, range(1, 6)), below_coefficient_indicator(sp)]
        gs.append(lambda z: Fraction(z.x, 3) + z.b)
        for g in gs:
            for n in (3, 9, 12):
                exact = float(conditioned_mean_counting(model.rec, g, n))
                assert abs(conditioned_mean_weighted_chain(model, g, n) - exact) <= 1e-9


class TestAsymptotics:
    def test_lekkerkerker_convergence(self, fib):
        errs = []
        for n in (10, 20, 40, 80):
            exact = conditioned_mean_counting(fib.rec, None, n)
            errs.append(abs(float(exact - Fraction(mean_prediction(fib, n)))))
        assert errs[-1] <= 5e-3
        # past n = 40 both sides agree to rounding
        assert all(b <= max(a, 1e-12) for a, b in zip(errs, errs[1:]))

    @pytest.mark.parametrize("L,c", TEST_RECS)
    def test_variance_linearity(self, L, c):
        m = model_of(L, c)
        v = float(conditioned_variance_counting(m.rec, None, 2000)) / 2001
        assert abs(v / asymptotic_variance(m).sigma2 - 1) <= 0.01

    def test_state_indicator_variance(self, fib):
        g = state_indicator(fib.space, fib.space.index[ChainState(0, 2, 1)])
        v = float(conditioned_variance_counting(fib.rec, g, 2000)) / 2001
        assert abs(v / asymptotic_variance(fib, g).sigma2 - 1) <= 0.01

    @pytest.mark.parametrize("L,c", TEST_RECS + ZERO_RECS)
    def test_mean_slope_and_intercept(self, L, c):
        m = model_of(L, c)
        n = 300
        exact = float(conditioned_mean_counting(m.rec, None, n))
        assert exact == pytest.approx(mean_prediction(m, n), abs=1e-6)


def test_contract_alias_is_the_weighted_chain_mean():
    from zeckchain.functionals import conditioned_mean_theorem22

    assert conditioned_mean_theorem22 is conditioned_mean_weighted_chain

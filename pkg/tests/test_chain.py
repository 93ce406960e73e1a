import dataclasses

import numpy as np
import pytest

from zeckchain.chain import (
    ChainState,
    build_chain,
    build_state_space,
    check_model,
    in_start_set,
    in_state_space,
    path_of_digits,
    support_period,
    transition_closed_form,
    verify_spectral,
)
from zeckchain.errors import InternalFault, ModelError
from zeckchain.recurrence import new_recurrence

from conftest import PHI, TEST_RECS, model_of, random_recurrences, rec_of

# package order is (b, b_next, x); the worked Fibonacci example lists (0,1,1),(0,2,1),(1,1,2)
EXAMPLE_ORDER = [ChainState(0, 1, 1), ChainState(0, 2, 1), ChainState(1, 1, 2)]


def in_example_order(model, vec_or_mat):
    idx = [model.space.index[z] for z in EXAMPLE_ORDER]
    a = np.asarray(vec_or_mat)
    return a[np.ix_(idx, idx)] if a.ndim == 2 else a[idx]


class TestStateSpace:
    def test_fibonacci(self):
        sp = build_state_space(rec_of(2, (1, 1)))
        assert set(sp.states) == set(EXAMPLE_ORDER)
        assert sp.start_states == (ChainState(1, 1, 2),)

    def test_zero_coefficients_has_six_states(self):
        sp = build_state_space(rec_of(4, (1, 0, 0, 2)))
        assert set(sp.states) == {
            ChainState(0, 1, 1),
            ChainState(1, 1, 2),
            ChainState(0, 2, 3),
            ChainState(0, 3, 4),
            ChainState(0, 4, 1),
            ChainState(1, 4, 1),
        }

    def test_degenerate(self):
        sp = build_state_space(new_recurrence(1, [1]))
        assert sp.states == (ChainState(0, 1, 1),)
        assert sp.start_states == ()
        with pytest.raises(ModelError):
            build_chain(new_recurrence(1, [1]))

    @pytest.mark.parametrize("L,c", TEST_RECS + random_recurrences(10))
    def test_membership_predicate_and_order(self, L, c):
        rec = new_recurrence(L, list(c))
        sp = build_state_space(rec)
        universe = [
            ChainState(x, b, bn) for x in range(rec.max_c + 1) for b in range(1, L + 1) for bn in range(1, L + 1)
        ]
        assert set(sp.states) == {z for z in universe if in_state_space(rec, z)}
        assert set(sp.start_states) == {z for z in universe if in_start_set(rec, z)}
        keys = [(z.b, z.b_next, z.x) for z in sp.states]
        assert keys == sorted(keys)
        assert all(sp.index[z] == i for i, z in enumerate(sp.states))

    def test_digit_path(self):
        rec = rec_of(2, (1, 1))
        assert path_of_digits(rec, [1, 0, 1]) == [ChainState(1, 1, 2), ChainState(0, 2, 1), ChainState(1, 1, 2)]
        assert path_of_digits(rec, [1, 1]) is None


class TestFibonacciChain:
    def test_transition_matrix(self, fib):
        Q = in_example_order(fib, fib.Q)
        expected = np.array([[1 / PHI, 0, 1 - 1 / PHI], [1 / PHI, 0, 1 - 1 / PHI], [0, 1, 0]])
        assert np.max(np.abs(Q - expected)) <= 1e-10

    def test_stationary(self, fib):
        pi = in_example_order(fib, fib.piQ)
        assert np.max(np.abs(pi - np.array([PHI, 1, 1]) / (PHI + 2))) <= 1e-10

    def test_scaled_root(self, fib):
        assert fib.lambda_c == pytest.approx(PHI / 4, abs=1e-12)

    def test_left_vector_normalization(self, fib):
        nu = in_example_order(fib, fib.nu_c)
        expected = np.array([2 * PHI + 1, PHI + 1, 2 * PHI + 1]) / (PHI + 2)
        assert np.max(np.abs(nu - expected)) <= 1e-10
        assert fib.nu_c_l1 == pytest.approx((5 * PHI + 3) / (PHI + 2), abs=1e-10)

    def test_start_distribution(self, fib):
        assert fib.tilde_phi_c[fib.space.index[ChainState(1, 1, 2)]] == 1.0


class TestInvariants:
    @pytest.mark.parametrize("L,c", TEST_RECS + random_recurrences())
    def test_verify_spectral_passes(self, L, c):
        model = build_chain(new_recurrence(L, list(c)))
        report = verify_spectral(model, 1e-10)
        assert report.passed, report.failures
        assert np.max(np.abs(model.Q.sum(axis=1) - 1)) <= 1e-12
        assert np.max(np.abs(model.piQ @ model.Q - model.piQ)) <= 1e-12
        assert np.max(np.abs(model.Q - transition_closed_form(model))) <= 1e-12
        assert model.lambda_c == pytest.approx(model.lambdaC / ((model.rec.max_c + 1) * L), abs=1e-12)

    def test_perturbed_model_fails_with_named_invariant(self, fib):
        pi = fib.piQ.copy()
        pi[0] += 1e-3
        bad = dataclasses.replace(fib, piQ=pi)
        report = verify_spectral(bad, 1e-10)
        assert not report.passed
        assert "piQ_stationary" in report.failures
        with pytest.raises(InternalFault):
            check_model(bad)

    @pytest.mark.parametrize("L,c", TEST_RECS)
    def test_irreducible_aperiodic(self, L, c):
        assert support_period(model_of(L, c).Q) == (True, 1)

    def test_period_detection(self):
        assert support_period(np.array([[0.0, 1.0], [1.0, 0.0]])) == (True, 2)
        assert support_period(np.array([[1.0, 0.0], [0.0, 1.0]]))[0] is False

    def test_model_is_read_only(self, fib):
        with pytest.raises(ValueError):
            fib.Q[0, 0] = 1.0

    def test_json_dump(self, fib):
        d = fib.to_dict()
        assert d["states"] == [list(z) for z in fib.space.states]
        assert len(d["Q"]) == 3

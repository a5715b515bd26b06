import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dosefind import BetaPosterior, DoseTally, Interval, ParameterError
from dosefind.posteriors import interval_probability, posterior, prob_above, upm

from oracles import binomial_tail_betainc, oracle_interval_prob


def test_posterior_conjugate_update():
    assert posterior(DoseTally(0, 0)) == BetaPosterior(1, 1)
    assert posterior(DoseTally(3, 6)) == BetaPosterior(4, 4)
    assert posterior(DoseTally(5, 10)) == BetaPosterior(6, 6)


def test_posterior_rejects_bad_prior():
    with pytest.raises(ParameterError):
        posterior(DoseTally(1, 3), prior_a=0.0)
    with pytest.raises(ParameterError):
        posterior(DoseTally(1, 3), prior_b=-1.0)


def test_interval_probability_uniform():
    assert interval_probability(BetaPosterior(1, 1), Interval(0.25, 0.35)) == pytest.approx(0.10, abs=1e-12)


def test_interval_probability_binomial_tail_identity():
    # I_q(a,b) = P(Bin(a+b-1, q) >= a) for integer shapes
    post = BetaPosterior(4, 4)
    want_oi = 1.0 - binomial_tail_betainc(4, 4, 0.35)
    want_ei = binomial_tail_betainc(4, 4, 0.35) - binomial_tail_betainc(4, 4, 0.25)
    assert interval_probability(post, Interval(0.35, 1.0)) == pytest.approx(want_oi, abs=1e-10)
    assert interval_probability(post, Interval(0.25, 0.35)) == pytest.approx(want_ei, abs=1e-10)
    # frozen values from the identity
    assert interval_probability(post, Interval(0.35, 1.0)) == pytest.approx(0.80015, abs=1e-4)
    assert interval_probability(post, Interval(0.25, 0.35)) == pytest.approx(0.12929, abs=1e-4)


@pytest.mark.parametrize(
    "a,b",
    [(1, 1), (1, 31), (31, 1), (4, 4), (17, 45), (60, 60), (60, 1), (1, 60), (2, 59), (45, 17)],
)
def test_interval_probability_matches_grid_integration(a, b):
    post = BetaPosterior(a, b)
    for lo, hi in [(0.0, 0.25), (0.25, 0.35), (0.35, 1.0), (0.1, 0.9), (0.0, 1.0), (0.45, 0.55)]:
        assert interval_probability(post, Interval(lo, hi)) == pytest.approx(
            oracle_interval_prob(a, b, lo, hi), abs=1e-6
        )


@settings(max_examples=40, deadline=None)
@given(
    x=st.integers(min_value=0, max_value=59),
    n=st.integers(min_value=0, max_value=59),
    lo=st.floats(min_value=0.0, max_value=0.98),
    width=st.floats(min_value=0.01, max_value=1.0),
)
def test_interval_probability_grid_property(x, n, lo, width):
    n = max(n, x)
    hi = min(lo + width, 1.0)
    if hi <= lo:
        return
    post = posterior(DoseTally(x, n))
    assert interval_probability(post, Interval(lo, hi)) == pytest.approx(
        oracle_interval_prob(post.alpha, post.beta, lo, hi), abs=1e-6
    )


def test_upm_values():
    assert upm(BetaPosterior(1, 1), Interval(0.25, 0.35)) == pytest.approx(1.0, abs=1e-12)
    assert upm(BetaPosterior(4, 4), Interval(0.25, 0.35)) == pytest.approx(1.2929, abs=1e-3)
    assert upm(BetaPosterior(4, 4), Interval(0.35, 1.0)) == pytest.approx(1.2310, abs=1e-3)


def test_zero_length_interval_rejected():
    with pytest.raises(ParameterError):
        Interval(0.3, 0.3)


def test_prob_above_hand_values():
    # Pr(p > 0.3 | Beta(4,1)) = 1 - 0.3^4
    assert prob_above(BetaPosterior(4, 1), 0.3) == pytest.approx(1 - 0.3**4, abs=1e-12)
    assert prob_above(BetaPosterior(3, 2), 0.3) == pytest.approx(
        1 - binomial_tail_betainc(3, 2, 0.3), abs=1e-10
    )

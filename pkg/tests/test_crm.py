import numpy as np
import pytest

from dosefind import Decision, ParameterError
from dosefind.crm import (
    CrmEngine,
    CrmModel,
    crm_next_dose,
    crm_posterior_tox,
    crm_relative_decision,
    default_skeleton,
)

from oracles import riemann_crm_means

SKELETON = (0.05, 0.10, 0.20, 0.30, 0.40, 0.50)
MODEL = CrmModel(SKELETON, prior_sd=1.34)
NO_DATA = ([0] * 6, [0] * 6)


def test_model_validation():
    with pytest.raises(ParameterError):
        CrmModel((0.2, 0.2, 0.3))  # not strictly increasing
    with pytest.raises(ParameterError):
        CrmModel((0.3,))
    with pytest.raises(ParameterError):
        CrmModel(SKELETON, prior_sd=0.0)


def test_default_skeleton_shapes():
    assert default_skeleton(6) == SKELETON
    assert default_skeleton(3) == (0.05, 0.10, 0.20)
    ext = default_skeleton(10)
    assert len(ext) == 10
    assert all(b > a for a, b in zip(ext, ext[1:]))
    assert ext[-1] < 1.0


def test_prior_means_differ_from_skeleton():
    means = crm_posterior_tox(MODEL, *NO_DATA)
    # averaging q^exp(theta) over theta does not return q itself
    assert not np.allclose(means, SKELETON, atol=1e-3)
    want = riemann_crm_means(SKELETON, 1.34, *NO_DATA)
    assert np.max(np.abs(means - want)) < 1e-6


def test_quadrature_matches_riemann_oracle():
    rng = np.random.default_rng(11)
    engine = CrmEngine(MODEL)
    for _ in range(20):
        ns = [int(rng.integers(0, 9)) for _ in range(6)]
        xs = [int(rng.integers(0, n + 1)) for n in ns]
        got = engine.posterior_tox(xs, ns)
        want = riemann_crm_means(SKELETON, 1.34, xs, ns)
        assert np.max(np.abs(got - want)) < 1e-6


def test_all_safe_data_shifts_means_down():
    prior = crm_posterior_tox(MODEL, *NO_DATA)
    safe = crm_posterior_tox(MODEL, [0] * 6, [3, 3, 3, 0, 0, 0])
    assert np.all(safe < prior)


def test_wider_prior_widens_toxicity_spread():
    # grid-oracle check on the no-data distribution of each p_i
    def oracle_var(prior_sd):
        half = 10.0 * prior_sd
        theta = np.arange(-half + 5e-5, half, 1e-4)
        w = np.exp(-0.5 * (theta / prior_sd) ** 2)
        p = np.asarray(SKELETON)[:, None] ** np.exp(theta)[None, :]
        m1 = (p * w).sum(axis=1) / w.sum()
        m2 = (p * p * w).sum(axis=1) / w.sum()
        return m2 - m1 * m1

    assert np.all(oracle_var(2.68) > oracle_var(1.34))
    # and the engine's means agree with the same oracle at both spreads
    for sd in (1.34, 2.68):
        got = crm_posterior_tox(CrmModel(SKELETON, sd), *NO_DATA)
        want = riemann_crm_means(SKELETON, sd, *NO_DATA)
        assert np.max(np.abs(got - want)) < 1e-6


def test_posterior_means_strictly_increasing():
    rng = np.random.default_rng(3)
    engine = CrmEngine(MODEL)
    for _ in range(20):
        ns = [int(rng.integers(0, 9)) for _ in range(6)]
        xs = [int(rng.integers(0, n + 1)) for n in ns]
        means = engine.posterior_tox(xs, ns)
        assert np.all(np.diff(means) > 0)


def test_no_skip_caps_at_one_above_highest_tried():
    # nothing tried: at most one above the current (start) dose
    assert crm_next_dose(MODEL, *NO_DATA, p_t=0.3, current=0) <= 1


def test_zero_of_three_at_dose_one_escalates():
    xs, ns = [0, 0, 0, 0, 0, 0], [3, 0, 0, 0, 0, 0]
    nxt = crm_next_dose(MODEL, xs, ns, p_t=0.3, current=0)
    assert nxt == 1
    # verify the uncapped argmin via the oracle: the capped pick is the
    # closest eligible dose at or below the cap
    means = riemann_crm_means(SKELETON, 1.34, xs, ns)
    assert abs(means[1] - 0.3) == min(abs(means[i] - 0.3) for i in range(2))


def test_argmin_tie_prefers_lower_dose():
    engine = CrmEngine(MODEL)

    class TieEngine:
        model = MODEL

        def posterior_tox(self, xs, ns):
            return np.array([0.1, 0.25, 0.35, 0.5, 0.6, 0.7])  # doses 2,3 tie at 0.05

    nxt = crm_next_dose(MODEL, [0] * 6, [3, 3, 3, 3, 3, 3], p_t=0.3, current=2, engine=TieEngine())
    assert nxt == 1
    assert engine is not None


def test_excluded_doses_never_returned():
    xs, ns = [0] * 6, [3, 3, 0, 0, 0, 0]
    excluded = [False, False, True, True, True, True]
    nxt = crm_next_dose(MODEL, xs, ns, p_t=0.3, current=1, excluded=excluded)
    assert nxt in (0, 1)
    assert crm_next_dose(MODEL, xs, ns, p_t=0.3, current=1, excluded=[True] * 6) is None


def test_relative_decision_mapping():
    assert crm_relative_decision(2, 3) is Decision.ESCALATE
    assert crm_relative_decision(2, 2) is Decision.STAY
    assert crm_relative_decision(4, 1) is Decision.DE_ESCALATE

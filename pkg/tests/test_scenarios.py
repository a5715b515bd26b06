import os

import numpy as np
import pytest
from scipy import stats

from dosefind import ParameterError
from dosefind.scenarios import (
    PaolettiConfig,
    RandomScenarioAxes,
    Scenario,
    builtin_jiwang,
    builtin_jiwang_all,
    paoletti_generate,
    random_scenario,
    scenarios_from_csv,
    scenarios_from_json,
    scenarios_to_csv,
    scenarios_to_json,
)
from dosefind.scenarios import ScenarioParseError

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


# -- built-in set ----------------------------------------------------------------


def test_builtin_anchor_rows():
    assert builtin_jiwang(0.3)[0].probs == (0.02, 0.05, 0.10, 0.15, 0.20, 0.25)
    assert builtin_jiwang(0.1)[4].probs == (0.05, 0.40, 0.50, 0.60, 0.65, 0.70)
    assert builtin_jiwang(0.2)[12].probs == (0.20, 0.25, 0.30, 0.35, 0.40, 0.45)


def test_builtin_shape():
    all_scenarios = builtin_jiwang_all()
    assert len(all_scenarios) == 42
    assert all(sc.num_doses == 6 for sc in all_scenarios)
    for p_t in (0.1, 0.2, 0.3):
        assert len(builtin_jiwang(p_t)) == 14


def test_builtin_rejects_other_targets():
    with pytest.raises(ParameterError):
        builtin_jiwang(0.25)


def test_builtin_matches_golden_csv():
    with open(os.path.join(GOLDEN, "jiwang_scenarios.csv"), encoding="utf-8") as fh:
        golden = fh.read()
    assert scenarios_to_csv(builtin_jiwang_all()) == golden
    reparsed = scenarios_from_csv(golden)
    assert [sc.probs for sc in reparsed] == [sc.probs for sc in builtin_jiwang_all()]


# -- probit generator ---------------------------------------------------------------


def test_paoletti_degenerate_collapses_to_target():
    cfg = PaolettiConfig(num_doses=6, p_t=0.2, mu1=0.5, mu2=0.5, mu3=0.5, mu4=0.5,
                         sd_mtd=0.0, sd_adj=0.0, sd_far=0.0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        sc = paoletti_generate(cfg, rng)
        assert np.allclose(sc.probs, 0.2, atol=1e-12)


def test_paoletti_always_monotone():
    cfg = PaolettiConfig(num_doses=6, p_t=0.2)
    rng = np.random.default_rng(123)
    for _ in range(100_000):
        sc = paoletti_generate(cfg, rng)
        assert all(b >= a for a, b in zip(sc.probs, sc.probs[1:]))


def test_paoletti_calibration():
    cfg = PaolettiConfig(num_doses=6, p_t=0.2)
    rng = np.random.default_rng(7)
    counts = np.zeros(6, dtype=int)
    gaps = []
    for _ in range(10_000):
        sc = paoletti_generate(cfg, rng)
        mtd = int(sc.label.split("mtd")[1]) - 1
        counts[mtd] += 1
        if mtd > 0:
            gaps.append(sc.probs[mtd] - sc.probs[mtd - 1])
        if mtd < 5:
            gaps.append(sc.probs[mtd + 1] - sc.probs[mtd])
    chi2 = stats.chisquare(counts)
    assert chi2.pvalue > 0.01
    assert np.mean(gaps) < 0.1


def test_paoletti_reproducible():
    cfg = PaolettiConfig(num_doses=6, p_t=0.2)
    a = paoletti_generate(cfg, np.random.default_rng(99))
    b = paoletti_generate(cfg, np.random.default_rng(99))
    assert a == b


# -- generic generator ---------------------------------------------------------------


def test_random_scenario_reproducible_and_monotone():
    axes = RandomScenarioAxes()
    a = random_scenario(axes, np.random.default_rng(5))
    b = random_scenario(axes, np.random.default_rng(5))
    assert a == b
    rng = np.random.default_rng(17)
    for _ in range(2000):
        sc = random_scenario(axes, rng)
        assert all(b2 >= a2 for a2, b2 in zip(sc.probs, sc.probs[1:]))
        assert sc.p_t in axes.p_t_choices


def test_random_scenario_dose_count_uniform():
    axes = RandomScenarioAxes(dose_count_range=(3, 8))
    rng = np.random.default_rng(21)
    counts = np.zeros(6, dtype=int)
    for _ in range(10_000):
        sc = random_scenario(axes, rng)
        counts[sc.num_doses - 3] += 1
    assert stats.chisquare(counts).pvalue > 0.01


# -- IO ----------------------------------------------------------------------------------


def test_csv_roundtrip_identity():
    scenarios = builtin_jiwang(0.2) + [Scenario((0.123456789, 0.5), 0.25, "odd,label")]
    text = scenarios_to_csv(scenarios)
    assert scenarios_from_csv(text) == scenarios


def test_json_roundtrip_identity():
    scenarios = builtin_jiwang(0.1)
    assert scenarios_from_json(scenarios_to_json(scenarios)) == scenarios


def test_ragged_tails_accepted():
    text = "label,p_T,p1,p2,p3\nshort,0.3,0.1,0.2,\nfull,0.3,0.1,0.2,0.3\n"
    parsed = scenarios_from_csv(text)
    assert parsed[0].probs == (0.1, 0.2)
    assert parsed[1].probs == (0.1, 0.2, 0.3)


def test_rejects_out_of_range_probability():
    text = "label,p_T,p1,p2\nbad,0.3,0.5,1.2\n"
    with pytest.raises(ScenarioParseError) as err:
        scenarios_from_csv(text)
    assert err.value.line == 2


def test_rejects_garbage_cell_with_position():
    text = "label,p_T,p1\nbad,0.3,oops\n"
    with pytest.raises(ScenarioParseError) as err:
        scenarios_from_csv(text)
    assert err.value.line == 2 and err.value.column == 3


def test_rejects_bad_header():
    with pytest.raises(ScenarioParseError):
        scenarios_from_csv("a,b,c\nx,0.3,0.1\n")

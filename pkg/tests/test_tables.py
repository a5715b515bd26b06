import os

import numpy as np
import pytest

from dosefind import Decision, DesignSpec, DoseTally, ParameterError, TargetSpec
from dosefind.rules import decide_tally
from dosefind.scenarios import builtin_jiwang
from dosefind.simulate import TrialConfig, run_batch, simulate_trial, trial_stream
from dosefind.tables import (
    EmpiricalTable,
    crm_empirical_table,
    decision_table,
    diff_grid,
    diff_grid_to_csv,
    empirical_table_to_csv,
    mean_decision_score,
    table_diff,
    table_to_csv,
)

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")
T03 = TargetSpec(0.3, 0.05, 0.05)


def test_mtpi2_table_cells():
    table = decision_table(DesignSpec.mtpi2(T03), 15)
    assert table.decision(1, 3) is Decision.STAY
    assert table.decision(3, 3) is Decision.DE_ESCALATE_EXCLUDE
    assert table.decision(0, 1) is Decision.ESCALATE
    assert table.decision(3, 6) is Decision.DE_ESCALATE


@pytest.mark.parametrize("name,golden", [
    ("mtpi2", "table_mtpi2_pt030_eps005_n15.csv"),
    ("boin-lambda", "table_boin-lambda_pt030_eps005_n15.csv"),
])
def test_tables_match_goldens(name, golden):
    spec = DesignSpec.from_name(name, T03)
    got = table_to_csv(decision_table(spec, 15))
    with open(os.path.join(GOLDEN, golden), encoding="utf-8") as fh:
        assert got == fh.read()


def test_table_equals_direct_decisions():
    spec = DesignSpec.mtpi(T03)
    table = decision_table(spec, 12)
    for n in range(13):
        for x in range(n + 1):
            assert table.decision(x, n) is decide_tally(spec, DoseTally(x, n))


def test_du_propagates_down_columns():
    for name in ("mtpi", "mtpi2", "tpi", "boin-lambda"):
        table = decision_table(DesignSpec.from_name(name, T03), 20)
        for n in range(1, 21):
            seen_du = False
            for x in range(n + 1):
                cell = table.decision(x, n)
                if seen_du:
                    assert cell is Decision.DE_ESCALATE_EXCLUDE
                seen_du = seen_du or cell is Decision.DE_ESCALATE_EXCLUDE


def test_columns_monotone():
    level = {Decision.ESCALATE: 0, Decision.STAY: 1, Decision.DE_ESCALATE: 2,
             Decision.DE_ESCALATE_EXCLUDE: 2}
    for name in ("tpi", "mtpi", "mtpi2", "ccd", "boin-default", "boin-epsilon", "boin-lambda"):
        table = decision_table(DesignSpec.from_name(name, T03), 15)
        for n in range(1, 16):
            seq = [level[table.decision(x, n)] for x in range(n + 1)]
            assert seq == sorted(seq), (name, n)


def test_table_rejects_crm_and_walk_designs():
    with pytest.raises(ParameterError, match="empirical"):
        decision_table(DesignSpec.crm(T03), 10)
    with pytest.raises(ParameterError):
        decision_table(DesignSpec.three_plus_three(T03), 10)


# -- empirical tables -----------------------------------------------------------


def _crm_records(n_trials=60, sample_size=18):
    spec = DesignSpec.crm(T03)
    sc = builtin_jiwang(0.3)[7]
    cfg = TrialConfig(sample_size, 3, 0, 5)
    return [simulate_trial(spec, sc, cfg, trial_stream(5, 0, 0, t)) for t in range(n_trials)]


def test_empirical_table_proportions():
    records = _crm_records()
    table = crm_empirical_table(records, 18)
    assert table.proportions(17, 18) is None  # unreachable cell stays unvisited
    q = table.proportions(0, 3)
    if q is not None:
        assert sum(q) == pytest.approx(1.0, abs=1e-9)
    # counts add up to the number of cohort events
    events = sum(len(r.cohorts) for r in records)
    assert int(table.visits.sum()) == events


def test_empirical_table_single_kind_cell():
    records = _crm_records()
    table = crm_empirical_table(records, 18)
    letters = {"E": Decision.ESCALATE, "S": Decision.STAY, "D": Decision.DE_ESCALATE}
    for n in range(1, 19):
        for x in range(n + 1):
            q = table.proportions(x, n)
            if q is None:
                continue
            if q[0] == 1.0:
                assert table.counts["S"][n, x] == 0 and table.counts["D"][n, x] == 0


def test_empirical_table_requires_records():
    with pytest.raises(ParameterError):
        crm_empirical_table([], 10)


def test_empirical_csv_lists_visited_cells():
    table = crm_empirical_table(_crm_records(), 18)
    text = empirical_table_to_csv(table)
    assert text.splitlines()[0] == "x,n,visits,q_E,q_S,q_D"
    assert len(text.splitlines()) == int((table.visits > 0).sum()) + 1


# -- scores and diffs ---------------------------------------------------------------


def test_mean_decision_score_values():
    assert mean_decision_score((1.0, 0.0, 0.0)) == 1.0
    assert mean_decision_score((0.0, 0.0, 1.0)) == 3.0
    assert mean_decision_score((0.25, 0.5, 0.25)) == 2.0
    with pytest.raises(ParameterError):
        mean_decision_score((0.5, 0.1, 0.1))


def test_table_diff_self_and_antisymmetry():
    a = decision_table(DesignSpec.mtpi2(T03), 20)
    b = decision_table(DesignSpec.boin(T03, "lambda"), 20)
    assert table_diff(a, a, 20) == 0.0
    assert table_diff(a, b, 20) == -table_diff(b, a, 20)


def test_table_diff_shape_mismatch():
    a = decision_table(DesignSpec.mtpi2(T03), 10)
    b = decision_table(DesignSpec.boin(T03, "lambda"), 20)
    with pytest.raises(ParameterError):
        table_diff(a, b, 20)


def test_diff_grid_single_cell_matches_table_diff():
    grid = diff_grid("mtpi2", "boin-lambda", 0.3, [0.05], [0.05], 20)
    a = decision_table(DesignSpec.mtpi2(T03), 20)
    b = decision_table(DesignSpec.boin(T03, "lambda"), 20)
    assert grid.shape == (1, 1)
    assert grid[0, 0] == table_diff(a, b, 20)


def test_diff_grid_reproducible():
    eps = [0.01, 0.03, 0.05]
    g1 = diff_grid("mtpi2", "mtpi", 0.3, eps, eps, 12)
    g2 = diff_grid("mtpi2", "mtpi", 0.3, eps, eps, 12)
    assert np.array_equal(g1, g2)
    text = diff_grid_to_csv(g1, eps, eps)
    assert text.splitlines()[0] == "eps1/eps2,0.01,0.03,0.05"


def test_diff_grid_requires_crm_table():
    with pytest.raises(ParameterError):
        diff_grid("mtpi2", "crm", 0.3, [0.05], [0.05], 10)


def test_diff_against_empirical_skips_unvisited():
    records = _crm_records()
    emp = crm_empirical_table(records, 18)
    fixed = decision_table(DesignSpec.mtpi2(T03), 18)
    # manual recomputation over visited cells only
    want = 0.0
    for n in range(1, 19):
        for x in range(1, n + 1):
            q = emp.proportions(x, n)
            if q is None:
                continue
            want += fixed.score(x, n) - mean_decision_score(q)
    assert table_diff(fixed, emp, 18) == pytest.approx(want)


def test_run_batch_counts_match_record_tabulation():
    spec = DesignSpec.crm(T03)
    sc = builtin_jiwang(0.3)[7]
    cfg = TrialConfig(18, 3, 0, 5)
    res = run_batch([spec], [sc], cfg, 60, collect_counts_n_max=18)
    streamed = EmpiricalTable(18, res.decision_counts[0])
    direct = crm_empirical_table(
        [simulate_trial(spec, sc, cfg, trial_stream(5, 0, 0, t)) for t in range(60)], 18
    )
    for k in ("E", "S", "D"):
        assert np.array_equal(streamed.counts[k], direct.counts[k])

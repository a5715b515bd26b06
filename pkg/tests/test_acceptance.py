"""Acceptance suite: one test per release criterion, each printing a
[ACCEPTANCE] PASS/FAIL line (run with ``pytest -s`` to watch them live).

The Monte Carlo criteria use the fixed comparison set (14 scenarios per
target), 2,000 trials per scenario, sample size 30, cohort size 3 and a
pinned seed; they are directional contrasts, not exact reproductions, since
the reference CRM configuration and elicited scenario pools are not
reproducible bit-for-bit.
"""

import statistics
import time

import numpy as np
import pytest
from scipy import stats

from dosefind import DesignSpec, DoseTally, TargetSpec
from dosefind.rules import (
    boin_boundaries,
    boin_inverse,
    ccd_delta,
    decide_tally,
    mtpi2_decide,
    mtpi_decide,
)
from dosefind.scenarios import PaolettiConfig, builtin_jiwang, paoletti_generate
from dosefind.selection import true_mtd
from dosefind.simulate import TrialConfig, run_batch
from dosefind.tables import EmpiricalTable, decision_table, table_diff
from dosefind.types import Decision

from oracles import oracle_table

SEED = 20260810
EPS = (0.05, 0.05)


def report(name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"[ACCEPTANCE] {name}: {status}" + (f"  ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


# -- 1. BOIN boundary vectors ----------------------------------------------------


def test_boin_boundary_vectors():
    b1 = boin_boundaries(0.3, 0.18, 0.42)
    b2 = boin_boundaries(0.3, 0.25, 0.35)
    phi1, phi2 = boin_inverse(0.3, 0.25, 0.35)
    ok = (
        abs(b1.lambda_e - 0.236) <= 1e-3 and abs(b1.lambda_d - 0.358) <= 1e-3
        and abs(b2.lambda_e - 0.275) <= 1e-3 and abs(b2.lambda_d - 0.325) <= 1e-3
        and abs(phi1 - 0.205) <= 1e-3 and abs(phi2 - 0.402) <= 1e-3
    )
    report("BOIN boundary vectors", ok,
           f"default=({b1.lambda_e:.4f},{b1.lambda_d:.4f}) eps=({b2.lambda_e:.4f},{b2.lambda_d:.4f}) "
           f"inverse=({phi1:.4f},{phi2:.4f})")


# -- 2. mTPI / mTPI-2 published decisions ------------------------------------------


def test_mtpi_family_decisions():
    t = TargetSpec(0.3, *EPS)
    got = {
        "mtpi(3,6)": mtpi_decide(t, DoseTally(3, 6)).letter,
        "mtpi(4,8)": mtpi_decide(t, DoseTally(4, 8)).letter,
        "mtpi(5,10)": mtpi_decide(t, DoseTally(5, 10)).letter,
        "mtpi2(1,3)": mtpi2_decide(t, DoseTally(1, 3)).letter,
        "mtpi2(3,6)": mtpi2_decide(t, DoseTally(3, 6)).letter,
    }
    want = {"mtpi(3,6)": "S", "mtpi(4,8)": "D", "mtpi(5,10)": "D",
            "mtpi2(1,3)": "S", "mtpi2(3,6)": "D"}
    report("mTPI/mTPI-2 published decisions", got == want, f"{got}")


# -- 3. oracle equivalence of every fixed table ---------------------------------------


def test_fixed_tables_match_grid_oracle():
    t0 = time.time()
    n_max = 30
    combos = [(d, 0.3) for d in ("tpi", "mtpi", "mtpi2", "ccd",
                                 "boin-default", "boin-epsilon", "boin-lambda")]
    combos += [(d, p) for p in (0.1, 0.2) for d in ("mtpi", "mtpi2", "ccd", "boin-lambda")]
    mismatches = []
    for name, p_t in combos:
        spec = DesignSpec.from_name(name, TargetSpec(p_t, *EPS))
        table = decision_table(spec, n_max)
        want = oracle_table(name, p_t, *EPS, n_max)
        for n in range(n_max + 1):
            for x in range(n + 1):
                if table.decision(x, n).letter != want[n][x]:
                    mismatches.append((name, p_t, x, n, table.decision(x, n).letter, want[n][x]))
    dt = time.time() - t0
    report("fixed tables equal fine-grid oracle (N=30)",
           not mismatches and dt < 60.0,
           f"{len(combos)} tables, {dt:.1f}s" + (f", first mismatch {mismatches[0]}" if mismatches else ""))


# -- 4. CCD half-width lookup ------------------------------------------------------------


def test_ccd_delta_lookup():
    want = {0.10: 0.09, 0.15: 0.09, 0.20: 0.09, 0.25: 0.09,
            0.30: 0.10, 0.35: 0.10, 0.40: 0.12, 0.45: 0.13, 0.50: 0.13}
    got = {p: ccd_delta(p) for p in want}
    report("CCD half-width lookup", got == want, f"{got}")


# -- 5. true-MTD rules over the comparison set ----------------------------------------------


def test_true_mtd_rules_on_builtin_set():
    ok = True
    details = []
    for p_t in (0.1, 0.2, 0.3):
        target = TargetSpec(p_t, *EPS)
        for sc in builtin_jiwang(p_t):
            truth = true_mtd(sc.probs, target)
            lo, hi = p_t - 0.05, p_t + 0.05
            rule1 = {i for i, p in enumerate(sc.probs) if lo <= p <= hi}
            if rule1:
                ok &= truth.doses == frozenset(rule1)
            else:
                below = [i for i, p in enumerate(sc.probs) if p < p_t]
                if below:
                    ok &= truth.doses == frozenset({max(below)})
                else:
                    ok &= truth.is_none
    anchor8 = true_mtd(builtin_jiwang(0.3)[7].probs, TargetSpec(0.3, *EPS)).doses
    anchor1 = true_mtd(builtin_jiwang(0.3)[0].probs, TargetSpec(0.3, *EPS)).doses
    ok &= anchor8 == frozenset({0, 1, 2, 3}) and anchor1 == frozenset({5})
    details.append(f"scenario8->{sorted(i+1 for i in anchor8)} scenario1->{sorted(i+1 for i in anchor1)}")
    report("true-MTD rules on the 42 scenarios", ok, "; ".join(details))


# -- 6. directional operating characteristics ----------------------------------------------


@pytest.fixture(scope="module")
def oc_rows():
    rows = {}
    t0 = time.time()
    for p_t in (0.1, 0.2, 0.3):
        target = TargetSpec(p_t, *EPS)
        designs = [
            DesignSpec.mtpi(target),
            DesignSpec.mtpi2(target),
            DesignSpec.boin(target, "lambda"),
            DesignSpec.crm(target),
            DesignSpec.three_plus_three(target),
        ]
        cfg = TrialConfig(sample_size=30, cohort_size=3, start_dose=0, seed=SEED)
        result = run_batch(designs, builtin_jiwang(p_t), cfg, trials_per_scenario=2000)
        for row in result.rows:
            rows.setdefault(row.design, []).append(row)
    print(f"\n[ACCEPTANCE] OC batch: 5 designs x 42 scenarios x 2000 trials in {time.time()-t0:.0f}s")
    return rows


def test_oc_safety_ordering(oc_rows):
    med = {d: statistics.median(r.safety for r in rows if r.safety is not None)
           for d, rows in oc_rows.items()}
    ok = med["mtpi2"] >= med["mtpi"] and med["mtpi2"] >= med["boin-lambda"]
    report("median safety: mTPI-2 >= mTPI and >= BOIN_lambda", ok,
           ", ".join(f"{d}={v:.4f}" for d, v in sorted(med.items())))


def test_oc_three_plus_three_least_reliable(oc_rows):
    mean_rel = {d: statistics.mean(r.reliability for r in rows) for d, rows in oc_rows.items()}
    others = [v for d, v in mean_rel.items() if d != "3+3"]
    ok = all(mean_rel["3+3"] < v for v in others)
    report("3+3 mean reliability strictly lowest", ok,
           ", ".join(f"{d}={v:.4f}" for d, v in sorted(mean_rel.items())))


def test_oc_model_designs_similar_reliability(oc_rows):
    mean_rel = {d: statistics.mean(r.reliability for r in rows) for d, rows in oc_rows.items()}
    trio = [mean_rel["mtpi2"], mean_rel["boin-lambda"], mean_rel["crm"]]
    spread = max(trio) - min(trio)
    report("mTPI-2 / BOIN_lambda / CRM reliability within 5pp", spread <= 0.05,
           f"mtpi2={trio[0]:.4f} boin-lambda={trio[1]:.4f} crm={trio[2]:.4f} spread={spread:.4f}")


# -- 7. probit generator calibration -------------------------------------------------------


def test_paoletti_calibration():
    cfg = PaolettiConfig(num_doses=6, p_t=0.2)
    rng = np.random.default_rng(SEED)
    counts = np.zeros(6, dtype=int)
    gaps = []
    monotone = True
    for _ in range(10_000):
        sc = paoletti_generate(cfg, rng)
        mtd = int(sc.label.split("mtd")[1]) - 1
        counts[mtd] += 1
        monotone &= all(b >= a for a, b in zip(sc.probs, sc.probs[1:]))
        if mtd > 0:
            gaps.append(sc.probs[mtd] - sc.probs[mtd - 1])
        if mtd < 5:
            gaps.append(sc.probs[mtd + 1] - sc.probs[mtd])
    pvalue = stats.chisquare(counts).pvalue
    gap = float(np.mean(gaps))
    ok = pvalue > 0.01 and monotone and gap < 0.1
    report("probit generator calibration", ok,
           f"chi2 p={pvalue:.3f}, monotone={monotone}, mean adjacent gap={gap:.4f}")


# -- 8. decision-table difference signs ------------------------------------------------------


def test_diff_sign_checks():
    t0 = time.time()
    target = TargetSpec(0.3, *EPS)
    n = 51
    mtpi2 = decision_table(DesignSpec.mtpi2(target), n)
    boin = decision_table(DesignSpec.boin(target, "lambda"), n)
    d_boin = table_diff(mtpi2, boin, n)

    crm_cfg = TrialConfig(sample_size=n, cohort_size=3, start_dose=0, seed=SEED)
    result = run_batch([DesignSpec.crm(target)], builtin_jiwang(0.3), crm_cfg,
                       trials_per_scenario=1000, collect_counts_n_max=n)
    crm = EmpiricalTable(n, result.decision_counts[0])
    d_crm = table_diff(mtpi2, crm, n)

    exact = table_diff(mtpi2, mtpi2, n) == 0.0 and table_diff(boin, mtpi2, n) == -d_boin
    ok = d_boin > 0 and d_crm > 0 and exact
    report("diff-grid signs at p_T=0.3, N=51", ok,
           f"mtpi2-boin={d_boin:.1f}, mtpi2-crm={d_crm:.1f}, antisymmetry={exact}, {time.time()-t0:.0f}s")


# -- 9. batch determinism ----------------------------------------------------------------------


def test_simulate_determinism_across_workers():
    target = TargetSpec(0.3, *EPS)
    designs = [DesignSpec.mtpi2(target), DesignSpec.boin(target, "lambda")]
    scenarios = builtin_jiwang(0.3)[:3]
    cfg = TrialConfig(sample_size=30, cohort_size=3, start_dose=0, seed=SEED)
    first = run_batch(designs, scenarios, cfg, 50, workers=1).to_csv()
    again = run_batch(designs, scenarios, cfg, 50, workers=1).to_csv()
    wide = run_batch(designs, scenarios, cfg, 50, workers=8).to_csv()
    ok = first == again == wide
    report("simulate byte-identical at 1 and 8 workers", ok,
           f"{len(first.splitlines())-2} OC rows compared")

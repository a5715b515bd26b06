"""Monte Carlo trial simulation and operating-characteristic metrics.

Reproducibility contract: every trial draws from its own counter-based
random stream keyed by (seed, design index, scenario index, trial index),
so batch results are byte-identical for any worker count or schedule.

OC export format (``# dosefind-oc-v1``): one CSV row per design x scenario
with the safety / reliability / accuracy metrics, the selection distribution
(including 'none') and the patient-allocation distribution. Floats are
written with ``repr``; undefined metrics (e.g. safety when the true MTD is
'none') are empty fields.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import CohortOutcome, TrialEngine, crm_engine_for
from .errors import ConfigError, ParameterError
from .scenarios import Scenario
from .selection import TrueMtd, true_mtd
from .tables import DecisionTable, accumulate_decision_counts, decision_table, empty_decision_counts
from .types import DesignFamily, DesignSpec, TABLE_FAMILIES

OC_SCHEMA = "dosefind-oc-v1"

_MASK64 = (1 << 64) - 1
_MAX_DESIGNS = 1 << 12
_MAX_SCENARIOS = 1 << 20
_MAX_TRIALS = 1 << 32


@dataclass(frozen=True)
class TrialConfig:
    """Sample-size cap, cohort size, 0-based start dose and the batch seed."""

    sample_size: int
    cohort_size: int = 3
    start_dose: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.cohort_size < 1 or self.sample_size < self.cohort_size:
            raise ConfigError("need sample_size >= cohort_size >= 1")
        if self.start_dose < 0:
            raise ConfigError("start_dose must be a 0-based dose index")


@dataclass(frozen=True)
class TrialRecord:
    """Full trajectory of one simulated trial."""

    design: str
    scenario: str
    cohorts: tuple[CohortOutcome, ...]
    xs: tuple[int, ...]
    ns: tuple[int, ...]
    excluded: tuple[bool, ...]
    stop_reason: str
    selected: int | None

    @property
    def n_treated(self) -> int:
        return sum(self.ns)

    @property
    def n_dlt(self) -> int:
        return sum(self.xs)


def trial_stream(seed: int, design_idx: int, scenario_idx: int, trial_idx: int) -> np.random.Generator:
    """Independent Philox stream for one trial.

    The Philox key packs the three indices into its second word
    (design << 52 | scenario << 32 | trial), so streams never collide and the
    derivation needs no hashing.
    """
    if not 0 <= design_idx < _MAX_DESIGNS:
        raise ParameterError(f"design index must be < {_MAX_DESIGNS}")
    if not 0 <= scenario_idx < _MAX_SCENARIOS:
        raise ParameterError(f"scenario index must be < {_MAX_SCENARIOS}")
    if not 0 <= trial_idx < _MAX_TRIALS:
        raise ParameterError(f"trial index must be < {_MAX_TRIALS}")
    word = (design_idx << 52) | (scenario_idx << 32) | trial_idx
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, word]))


def simulate_trial(
    spec: DesignSpec,
    scenario: Scenario,
    cfg: TrialConfig,
    rng: np.random.Generator,
    tally_rule=None,
    crm_engine=None,
) -> TrialRecord:
    """Run one trial: binomial cohort outcomes against the scenario's true rates.

    ``tally_rule``/``crm_engine`` are optional shared caches (see TrialEngine);
    they never change the outcome.
    """
    engine = TrialEngine(
        spec, scenario.num_doses, cfg.sample_size, cfg.start_dose,
        tally_rule=tally_rule, crm_engine=crm_engine,
    )
    while engine.room_for(cfg.cohort_size):
        dlt = int(rng.binomial(cfg.cohort_size, scenario.probs[engine.current]))
        engine.apply(dlt, cfg.cohort_size)
    engine.finalize()
    return TrialRecord(
        design=spec.label,
        scenario=scenario.label,
        cohorts=tuple(engine.outcomes),
        xs=tuple(engine.xs),
        ns=tuple(engine.ns),
        excluded=tuple(engine.excluded),
        stop_reason=engine.stop_reason,
        selected=engine.selected,
    )


# ---------------------------------------------------------------------------
# Operating-characteristic metrics
# ---------------------------------------------------------------------------


def metric_safety(record: TrialRecord, truth: TrueMtd) -> float | None:
    """Fraction of patients treated at or below the highest true MTD.

    Undefined (None) when the true MTD is 'none'; such trials are excluded
    from scenario averages rather than scored arbitrarily.
    """
    if truth.is_none:
        return None
    top = max(truth.doses)
    total = record.n_treated
    if total == 0:
        return None
    return sum(n for i, n in enumerate(record.ns) if i <= top) / total


def metric_reliability(records: Sequence[TrialRecord], truth: TrueMtd) -> float:
    """Fraction of trials selecting a true MTD.

    When the true MTD is 'none', only selecting no dose counts as correct.
    """
    if not records:
        raise ParameterError("need at least one trial record")
    if truth.is_none:
        hits = sum(1 for r in records if r.selected is None)
    else:
        hits = sum(1 for r in records if r.selected in truth.doses)
    return hits / len(records)


def metric_accuracy(record: TrialRecord, scenario: Scenario, p_t: float) -> float | None:
    """Allocation accuracy index: 1 minus the normalized mean distance-to-target.

    Equals 1 exactly when every patient sits at a dose with the target rate;
    undefined when every dose already has the target rate.
    """
    dist = [abs(p - p_t) for p in scenario.probs]
    denom = sum(dist)
    if denom == 0.0:
        return None
    total = record.n_treated
    if total == 0:
        return None
    d = scenario.num_doses
    weighted = sum(dd * n for dd, n in zip(dist, record.ns))
    return 1.0 - d * weighted / (total * denom)


@dataclass(frozen=True)
class OcSummary:
    """Aggregated operating characteristics for one design on one scenario."""

    design: str
    scenario: str
    p_t: float
    num_doses: int
    trials: int
    true_doses: tuple[int, ...]  # empty means 'none'
    safety: float | None
    reliability: float
    accuracy: float | None
    selection_none: float
    selection_dist: tuple[float, ...]
    allocation: tuple[float, ...]
    mean_n: float
    mean_dlt: float

    def __post_init__(self):
        total = self.selection_none + sum(self.selection_dist)
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"selection distribution sums to {total}, not 1")


def summarize(records: Sequence[TrialRecord], scenario: Scenario, truth: TrueMtd, p_t: float) -> OcSummary:
    """Aggregate per-trial metrics; undefined per-trial values are dropped."""
    if not records:
        raise ParameterError("need at least one trial record")
    d = scenario.num_doses
    sel_counts = [0] * d
    none_count = 0
    alloc = [0] * d
    safeties = []
    accuracies = []
    dlts = 0
    patients = 0
    for r in records:
        if r.selected is None:
            none_count += 1
        else:
            sel_counts[r.selected] += 1
        for i, n in enumerate(r.ns):
            alloc[i] += n
        s = metric_safety(r, truth)
        if s is not None:
            safeties.append(s)
        a = metric_accuracy(r, scenario, p_t)
        if a is not None:
            accuracies.append(a)
        dlts += r.n_dlt
        patients += r.n_treated
    m = len(records)
    return OcSummary(
        design=records[0].design,
        scenario=scenario.label,
        p_t=p_t,
        num_doses=d,
        trials=m,
        true_doses=tuple(sorted(truth.doses)),
        safety=sum(safeties) / len(safeties) if safeties else None,
        reliability=metric_reliability(records, truth),
        accuracy=sum(accuracies) / len(accuracies) if accuracies else None,
        selection_none=none_count / m,
        selection_dist=tuple(c / m for c in sel_counts),
        allocation=tuple(a / patients if patients else 0.0 for a in alloc),
        mean_n=patients / m,
        mean_dlt=dlts / m,
    )


# ---------------------------------------------------------------------------
# Batch runner
# ---------------------------------------------------------------------------


def _run_chunk(payload) -> tuple[int, int, OcSummary, dict | None]:
    """All trials of one (design, scenario) cell; runs in a worker process."""
    spec, scenario, cfg, trials, d_idx, s_idx, table, counts_n_max = payload
    tally_rule = table.as_rule() if table is not None else None
    crm_engine = crm_engine_for(spec, scenario.num_doses) if spec.family is DesignFamily.CRM else None
    truth = true_mtd(scenario.probs, spec.target)
    records = []
    for t in range(trials):
        rng = trial_stream(cfg.seed, d_idx, s_idx, t)
        records.append(simulate_trial(spec, scenario, cfg, rng, tally_rule, crm_engine))
    counts = None
    if counts_n_max is not None:
        counts = empty_decision_counts(counts_n_max)
        accumulate_decision_counts(counts, records)
    return d_idx, s_idx, summarize(records, scenario, truth, spec.target.p_t), counts


@dataclass(frozen=True)
class BatchResult:
    """OC rows ordered by (design, scenario) plus optional decision counts."""

    rows: tuple[OcSummary, ...]
    decision_counts: dict[int, dict] | None = None  # design index -> letter -> array

    def to_csv(self) -> str:
        width = max(r.num_doses for r in self.rows)
        buf = io.StringIO()
        buf.write(f"# {OC_SCHEMA}\n")
        writer = csv.writer(buf, lineterminator="\n")
        header = (
            ["design", "scenario", "p_T", "doses", "trials", "true_mtd",
             "safety", "reliability", "accuracy", "mean_n", "mean_dlt", "sel_none"]
            + [f"sel_{i + 1}" for i in range(width)]
            + [f"alloc_{i + 1}" for i in range(width)]
        )
        writer.writerow(header)

        def fmt(v):
            return "" if v is None else repr(v)

        for r in self.rows:
            truth = "none" if not r.true_doses else "+".join(str(i + 1) for i in r.true_doses)
            row = [
                r.design, r.scenario, repr(r.p_t), r.num_doses, r.trials, truth,
                fmt(r.safety), fmt(r.reliability), fmt(r.accuracy),
                repr(r.mean_n), repr(r.mean_dlt), repr(r.selection_none),
            ]
            row += [repr(v) for v in r.selection_dist] + [""] * (width - r.num_doses)
            row += [repr(v) for v in r.allocation] + [""] * (width - r.num_doses)
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "schema": OC_SCHEMA,
            "rows": [
                {
                    "design": r.design,
                    "scenario": r.scenario,
                    "p_T": r.p_t,
                    "doses": r.num_doses,
                    "trials": r.trials,
                    "true_mtd": [i + 1 for i in r.true_doses],
                    "safety": r.safety,
                    "reliability": r.reliability,
                    "accuracy": r.accuracy,
                    "mean_n": r.mean_n,
                    "mean_dlt": r.mean_dlt,
                    "selection_none": r.selection_none,
                    "selection": list(r.selection_dist),
                    "allocation": list(r.allocation),
                }
                for r in self.rows
            ],
        }
        return json.dumps(doc, indent=2) + "\n"


def run_batch(
    designs: Sequence[DesignSpec],
    scenarios: Sequence[Scenario],
    cfg: TrialConfig,
    trials_per_scenario: int,
    workers: int = 1,
    collect_counts_n_max: int | None = None,
) -> BatchResult:
    """Simulate every design on every scenario with per-trial derived streams.

    Results are independent of ``workers``: each (design, scenario) cell is
    self-contained and cells are assembled in index order. Setting
    ``collect_counts_n_max`` additionally tallies per-(x, n) decision counts
    (the input for empirical CRM tables).
    """
    if trials_per_scenario < 1:
        raise ParameterError("trials_per_scenario must be >= 1")
    if not designs or not scenarios:
        raise ParameterError("need at least one design and one scenario")
    if workers < 1:
        raise ParameterError("workers must be >= 1")

    # fixed-rule designs: tabulate once per design, share across scenarios
    tables: list[DecisionTable | None] = [
        decision_table(spec, cfg.sample_size) if spec.family in TABLE_FAMILIES else None
        for spec in designs
    ]
    payloads = [
        (spec, sc, cfg, trials_per_scenario, d_idx, s_idx, tables[d_idx], collect_counts_n_max)
        for d_idx, spec in enumerate(designs)
        for s_idx, sc in enumerate(scenarios)
    ]
    results: dict[tuple[int, int], tuple[OcSummary, dict | None]] = {}
    if workers == 1:
        for payload in payloads:
            d_idx, s_idx, summary, counts = _run_chunk(payload)
            results[(d_idx, s_idx)] = (summary, counts)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for d_idx, s_idx, summary, counts in pool.map(_run_chunk, payloads, chunksize=1):
                results[(d_idx, s_idx)] = (summary, counts)

    rows = []
    merged_counts: dict[int, dict] | None = {} if collect_counts_n_max is not None else None
    for d_idx in range(len(designs)):
        for s_idx in range(len(scenarios)):
            summary, counts = results[(d_idx, s_idx)]
            rows.append(summary)
            if merged_counts is not None and counts is not None:
                tgt = merged_counts.setdefault(d_idx, empty_decision_counts(collect_counts_n_max))
                for k in tgt:
                    tgt[k] += counts[k]
    return BatchResult(tuple(rows), merged_counts)

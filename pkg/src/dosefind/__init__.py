"""Interval-based phase-I dose-finding designs: decision rules, decision
tables, Monte Carlo operating characteristics and live trial conduct.
"""

from .crm import CrmEngine, CrmModel, crm_next_dose, crm_posterior_tox, crm_relative_decision, default_skeleton
from .engine import CohortOutcome, TrialEngine, three_plus_three_decide
from .errors import ComputationError, ConfigError, ConflictError, DoseFindError, ParameterError
from .posteriors import interval_probability, posterior, prob_above, upm
from .rules import (
    boin_boundaries,
    boin_decide,
    boin_inverse,
    boin_variant_bounds,
    ccd_decide,
    ccd_delta,
    decide_tally,
    mtpi2_decide,
    mtpi2_partition,
    mtpi_decide,
    rule_decision,
    safety_exclude,
    tpi_decide,
)
from .scenarios import (
    PaolettiConfig,
    RandomScenarioAxes,
    Scenario,
    builtin_jiwang,
    builtin_jiwang_all,
    paoletti_generate,
    random_scenario,
)
from .selection import SelectionResult, TrueMtd, pava, select_mtd, true_mtd
from .simulate import (
    BatchResult,
    OcSummary,
    TrialConfig,
    TrialRecord,
    metric_accuracy,
    metric_reliability,
    metric_safety,
    run_batch,
    simulate_trial,
    trial_stream,
)
from .tables import (
    DecisionTable,
    EmpiricalTable,
    crm_empirical_table,
    decision_table,
    diff_grid,
    mean_decision_score,
    table_diff,
)
from .types import (
    BetaPosterior,
    BoinBoundaries,
    Decision,
    DesignFamily,
    DesignSpec,
    DoseTally,
    Interval,
    TargetSpec,
)

__version__ = "0.1.0"

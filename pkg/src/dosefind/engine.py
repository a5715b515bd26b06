"""Trial-level state machine: applies a design's per-cohort decisions to a
dose grid, handling movement caps, dose exclusion, safety stops and the
end-of-trial selection.

One engine instance drives one trial (simulated or live). The per-cohort
rules themselves are pure; the engine owns the mutable tallies, the exclusion
frontier and the event history. ``preview`` computes the outcome of a
hypothetical cohort without touching state, which is what the what-if service
endpoint uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .crm import CrmEngine, CrmModel, crm_next_dose, crm_relative_decision, default_skeleton
from .errors import ConfigError, ParameterError
from .rules import decide_tally, safety_exclude
from .selection import SelectionResult, select_mtd
from .types import Decision, DesignFamily, DesignSpec, DoseTally

STOP_MAX_N = "max_n"
STOP_SAFETY = "safety_stop"
STOP_DESIGN = "design_complete"

STATUS_ACTIVE = "active"
STATUS_STOPPED = "stopped"
STATUS_COMPLETED = "completed"


@dataclass(frozen=True)
class CohortOutcome:
    """What one cohort did to the trial."""

    dose: int  # dose the cohort was treated at
    dlt_count: int
    cohort_size: int
    x: int  # cumulative tally at that dose afterwards
    n: int
    decision: Decision
    next_dose: int | None  # None once the trial is over
    newly_excluded: tuple[int, ...] = ()
    capped: bool = False  # an E/D move was blocked by the dose-grid edge or an exclusion
    stop_reason: str | None = None
    declared_mtd: int | None = None  # 3+3 only

    def to_dict(self) -> dict[str, Any]:
        return {
            "dose": self.dose + 1,
            "dlt_count": self.dlt_count,
            "cohort_size": self.cohort_size,
            "x": self.x,
            "n": self.n,
            "decision": self.decision.letter,
            "next_dose": None if self.next_dose is None else self.next_dose + 1,
            "newly_excluded": [i + 1 for i in self.newly_excluded],
            "capped": self.capped,
            "stop_reason": self.stop_reason,
            "declared_mtd": None if self.declared_mtd is None else self.declared_mtd + 1,
        }


@dataclass(frozen=True)
class ThreePlusThreeStep:
    """Resolution of one 3+3 decision point."""

    decision: Decision
    next_dose: int | None
    exclude_current: bool = False
    declared_mtd: int | None = None
    complete: bool = False


def three_plus_three_decide(
    xs: list[int],
    ns: list[int],
    current: int,
    excluded: list[bool],
) -> ThreePlusThreeStep:
    """The classical 3+3 walk, resolved against the whole trial state.

    0/3 escalate, 1/3 expand to six, >=2/3 de-escalate and drop the dose;
    at six patients <=1/6 escalates and >=2/6 de-escalates with the dose
    dropped. A blocked escalation expands the current dose to six, or, if
    already at six, ends the trial declaring the current dose the MTD (the
    highest dose observed at <=1/6). De-escalating off the lowest dose stops
    the trial with no MTD.
    """
    num_doses = len(xs)
    x, n = xs[current], ns[current]
    if n < 3:
        return ThreePlusThreeStep(Decision.STAY, current)
    if n == 3:
        desired = Decision.ESCALATE if x == 0 else Decision.STAY if x == 1 else Decision.DE_ESCALATE
    else:
        desired = Decision.ESCALATE if x <= 1 else Decision.DE_ESCALATE

    if desired is Decision.STAY:
        return ThreePlusThreeStep(Decision.STAY, current)

    if desired is Decision.ESCALATE:
        nxt = current + 1
        blocked = nxt >= num_doses or excluded[nxt] or ns[nxt] >= 6
        if not blocked:
            return ThreePlusThreeStep(Decision.ESCALATE, nxt)
        if n < 6:
            return ThreePlusThreeStep(Decision.STAY, current)
        return ThreePlusThreeStep(Decision.STAY, None, declared_mtd=current, complete=True)

    # de-escalate, dropping the current dose
    if current == 0:
        return ThreePlusThreeStep(Decision.STOP_TRIAL, None, exclude_current=True, complete=True)
    below = current - 1
    if ns[below] >= 6 and xs[below] <= 1:
        return ThreePlusThreeStep(
            Decision.DE_ESCALATE_EXCLUDE, None, exclude_current=True, declared_mtd=below, complete=True
        )
    return ThreePlusThreeStep(Decision.DE_ESCALATE_EXCLUDE, below, exclude_current=True)


def crm_engine_for(spec: DesignSpec, num_doses: int) -> CrmEngine:
    """Quadrature engine for a CRM spec, resolving the default skeleton."""
    skeleton = spec.skeleton if spec.skeleton is not None else default_skeleton(num_doses)
    if len(skeleton) != num_doses:
        raise ConfigError(f"CRM skeleton has {len(skeleton)} entries for {num_doses} doses")
    return CrmEngine(CrmModel(tuple(skeleton), spec.crm_prior_sd))


class TrialEngine:
    """Mutable trial state plus the design-specific movement semantics.

    ``tally_rule`` and ``crm_engine`` let the batch simulator inject cached
    decision lookups shared across trials; both default to computing from the
    spec directly and never change the produced decisions.
    """

    def __init__(
        self,
        spec: DesignSpec,
        num_doses: int,
        sample_size: int,
        start_dose: int = 0,
        tally_rule=None,
        crm_engine: CrmEngine | None = None,
    ):
        if num_doses < 1:
            raise ConfigError("need at least one dose")
        if not 0 <= start_dose < num_doses:
            raise ConfigError("start dose out of range")
        if sample_size < 1:
            raise ConfigError("sample size must be positive")
        if spec.family is DesignFamily.CRM and num_doses < 2:
            raise ConfigError("CRM needs at least two doses")
        self.spec = spec
        self.num_doses = num_doses
        self.sample_size = sample_size
        self.xs = [0] * num_doses
        self.ns = [0] * num_doses
        self.excluded = [False] * num_doses
        self.current = start_dose
        self.n_treated = 0
        self.status = STATUS_ACTIVE
        self.stop_reason: str | None = None
        self.selected: int | None = None
        self.selection: SelectionResult | None = None
        self.outcomes: list[CohortOutcome] = []
        self._tally_rule = tally_rule
        self._crm_engine: CrmEngine | None = None
        if spec.family is DesignFamily.CRM:
            self._crm_engine = crm_engine if crm_engine is not None else crm_engine_for(spec, num_doses)

    # -- core decision logic ---------------------------------------------------

    def _resolve(self, dose: int, xs: list[int], ns: list[int], excluded: list[bool]) -> CohortOutcome:
        """Outcome of the cohort just treated at ``dose`` given hypothetical state."""
        spec = self.spec
        x, n = xs[dose], ns[dose]
        tally = DoseTally(x, n)

        if spec.family is DesignFamily.THREE_PLUS_THREE:
            step = three_plus_three_decide(xs, ns, dose, excluded)
            newly = tuple(range(dose, self.num_doses)) if step.exclude_current else ()
            reason = None
            if step.complete:
                reason = STOP_SAFETY if step.decision is Decision.STOP_TRIAL else STOP_DESIGN
            return CohortOutcome(
                dose, 0, 0, x, n, step.decision, step.next_dose,
                newly_excluded=tuple(i for i in newly if not excluded[i]),
                stop_reason=reason, declared_mtd=step.declared_mtd,
            )

        if spec.family is DesignFamily.CRM:
            # optional safety overlay first, then the model-based next dose
            if spec.safety_enabled and safety_exclude(
                spec.target, tally, spec.safety_threshold, spec.safety_min_n, spec.prior_a, spec.prior_b
            ):
                return self._exclusion_outcome(dose, x, n, excluded)
            nxt = crm_next_dose(
                self._crm_engine.model, xs, ns, spec.target.p_t, dose,
                excluded=excluded, no_skip=spec.no_skip, engine=self._crm_engine,
            )
            if nxt is None:
                return CohortOutcome(
                    dose, 0, 0, x, n, Decision.STOP_TRIAL, None, stop_reason=STOP_SAFETY
                )
            return CohortOutcome(dose, 0, 0, x, n, crm_relative_decision(dose, nxt), nxt)

        # interval designs: fixed per-tally rule with the safety overlay baked in
        decision = self._tally_rule(x, n) if self._tally_rule is not None else decide_tally(spec, tally)
        if decision is Decision.DE_ESCALATE_EXCLUDE:
            return self._exclusion_outcome(dose, x, n, excluded)
        nxt, capped = dose, False
        if decision is Decision.ESCALATE:
            up = dose + 1
            if up >= self.num_doses or excluded[up]:
                capped = True  # stays; an E into the wall or an excluded dose is a de-facto S
            else:
                nxt = up
        elif decision is Decision.DE_ESCALATE:
            if dose == 0:
                capped = True
            else:
                nxt = dose - 1
        return CohortOutcome(dose, 0, 0, x, n, decision, nxt, capped=capped)

    def _exclusion_outcome(self, dose: int, x: int, n: int, excluded: list[bool]) -> CohortOutcome:
        """The safety rule fired at ``dose``: drop it and everything above."""
        newly = tuple(i for i in range(dose, self.num_doses) if not excluded[i])
        if dose == 0:
            return CohortOutcome(
                dose, 0, 0, x, n, Decision.STOP_TRIAL, None,
                newly_excluded=newly, stop_reason=STOP_SAFETY,
            )
        return CohortOutcome(
            dose, 0, 0, x, n, Decision.DE_ESCALATE_EXCLUDE, dose - 1, newly_excluded=newly
        )

    # -- public API --------------------------------------------------------------

    def preview(self, dlt_count: int, cohort_size: int) -> CohortOutcome:
        """Outcome a cohort with ``dlt_count`` DLTs would produce; no state change."""
        self._check_cohort(dlt_count, cohort_size)
        xs, ns = list(self.xs), list(self.ns)
        xs[self.current] += dlt_count
        ns[self.current] += cohort_size
        out = self._resolve(self.current, xs, ns, list(self.excluded))
        return self._with_cohort(out, dlt_count, cohort_size)

    def apply(self, dlt_count: int, cohort_size: int) -> CohortOutcome:
        """Record a cohort at the current dose and advance the trial."""
        self._check_cohort(dlt_count, cohort_size)
        self.xs[self.current] += dlt_count
        self.ns[self.current] += cohort_size
        self.n_treated += cohort_size
        out = self._resolve(self.current, self.xs, self.ns, self.excluded)
        out = self._with_cohort(out, dlt_count, cohort_size)
        for i in out.newly_excluded:
            self.excluded[i] = True
        if out.stop_reason == STOP_SAFETY:
            self._finish(STATUS_STOPPED, STOP_SAFETY, out.declared_mtd)
        elif out.stop_reason == STOP_DESIGN:
            self._finish(STATUS_COMPLETED, STOP_DESIGN, out.declared_mtd)
        else:
            self.current = out.next_dose
            if self.n_treated >= self.sample_size:
                self._finish(STATUS_COMPLETED, STOP_MAX_N, None)
        self.outcomes.append(out)
        return out

    def room_for(self, cohort_size: int) -> bool:
        return self.status == STATUS_ACTIVE and self.n_treated + cohort_size <= self.sample_size

    def finalize(self):
        """Close an active trial that cannot take another cohort (sample cap)."""
        if self.status == STATUS_ACTIVE:
            self._finish(STATUS_COMPLETED, STOP_MAX_N, None)

    def _check_cohort(self, dlt_count: int, cohort_size: int):
        if self.status != STATUS_ACTIVE:
            raise ParameterError(f"trial is {self.status}")
        if cohort_size < 1:
            raise ParameterError("cohort size must be positive")
        if not 0 <= dlt_count <= cohort_size:
            raise ParameterError("dlt_count must be between 0 and the cohort size")
        if self.n_treated + cohort_size > self.sample_size:
            raise ParameterError(
                f"cohort of {cohort_size} would exceed the sample size {self.sample_size}"
            )
        if self.spec.family is DesignFamily.THREE_PLUS_THREE and cohort_size != 3:
            raise ConfigError("the 3+3 design requires cohorts of exactly 3")

    def _with_cohort(self, out: CohortOutcome, dlt_count: int, cohort_size: int) -> CohortOutcome:
        return CohortOutcome(
            out.dose, dlt_count, cohort_size, out.x, out.n, out.decision, out.next_dose,
            newly_excluded=out.newly_excluded, capped=out.capped,
            stop_reason=out.stop_reason, declared_mtd=out.declared_mtd,
        )

    def _finish(self, status: str, reason: str, declared: int | None):
        self.status = status
        self.stop_reason = reason
        if self.spec.family is DesignFamily.THREE_PLUS_THREE:
            if reason == STOP_SAFETY:
                self.selected = None  # de-escalation off dose 1: no MTD
            elif declared is not None:
                self.selected = declared
            else:
                self.selected = self._three_plus_three_fallback()
            self.selection = None
        elif reason == STOP_SAFETY and self.excluded[0]:
            self.selected = None
            self.selection = None
        elif self.spec.family is DesignFamily.CRM:
            # CRM recommends from its own model: the dose it would treat next
            # given all final data (the reference implementations' convention)
            self.selected = crm_next_dose(
                self._crm_engine.model, self.xs, self.ns, self.spec.target.p_t,
                self.current, excluded=self.excluded, no_skip=self.spec.no_skip,
                engine=self._crm_engine,
            )
            self.selection = None
        else:
            tallies = [DoseTally(x, n) for x, n in zip(self.xs, self.ns)]
            self.selection = select_mtd(
                tallies, self.excluded, self.spec.target,
                self.spec.selection_prior_a, self.spec.selection_prior_b,
            )
            self.selected = self.selection.selected

    def _three_plus_three_fallback(self) -> int | None:
        """MTD when the sample-size cap truncates a 3+3 walk mid-flight.

        Highest non-excluded dose observed at <=1/6 with six patients; failing
        that, the highest non-excluded tried dose with rate <= 1/6.
        """
        full = [i for i in range(self.num_doses) if not self.excluded[i] and self.ns[i] >= 6 and self.xs[i] <= 1]
        if full:
            return max(full)
        part = [
            i for i in range(self.num_doses)
            if not self.excluded[i] and self.ns[i] > 0 and self.xs[i] / self.ns[i] <= 1.0 / 6.0
        ]
        return max(part) if part else None

    def state_dict(self) -> dict[str, Any]:
        return {
            "num_doses": self.num_doses,
            "sample_size": self.sample_size,
            "current_dose": None if self.status != STATUS_ACTIVE else self.current + 1,
            "n_treated": self.n_treated,
            "tallies": [{"dose": i + 1, "x": x, "n": n} for i, (x, n) in enumerate(zip(self.xs, self.ns))],
            "excluded": [i + 1 for i, f in enumerate(self.excluded) if f],
            "status": self.status,
            "stop_reason": self.stop_reason,
            "selected": None if self.selected is None else self.selected + 1,
        }

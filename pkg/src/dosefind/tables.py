"""Decision tables: the fixed R(x,n) grids of the interval designs, empirical
decision distributions for CRM, mean decision scores and pairwise table
differences.

CSV layout (goldens under tests/golden/): header ``x/n,1,2,...,N``; one row
per DLT count x from 0 to N; cells hold the letters E/S/D/DU and are empty
for x > n. Diff grids are matrices with eps1 down the rows and eps2 across
the columns.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError
from .rules import decide_tally
from .types import Decision, DesignFamily, DesignSpec, DoseTally, TABLE_FAMILIES, TargetSpec

# E/S/D coding used for mean scores and table differences; DU counts as a
# de-escalation.
_SCORE = {
    Decision.ESCALATE: 1.0,
    Decision.STAY: 2.0,
    Decision.DE_ESCALATE: 3.0,
    Decision.DE_ESCALATE_EXCLUDE: 3.0,
}


@dataclass(frozen=True)
class DecisionTable:
    """Fixed decisions R(x,n) for 0 <= x <= n <= n_max (dose-level independent)."""

    design: DesignSpec
    n_max: int
    entries: tuple[tuple[Decision, ...], ...]  # entries[n][x]

    def decision(self, x: int, n: int) -> Decision:
        if not 0 <= x <= n <= self.n_max:
            raise ParameterError(f"cell ({x}, {n}) outside table (n_max={self.n_max})")
        return self.entries[n][x]

    def score(self, x: int, n: int) -> float:
        return _SCORE[self.decision(x, n)]

    def as_rule(self) -> Callable[[int, int], Decision]:
        """Fast (x, n) -> Decision lookup for the simulator hot loop."""
        entries = self.entries
        return lambda x, n: entries[n][x]


def decision_table(spec: DesignSpec, n_max: int) -> DecisionTable:
    """Tabulate a fixed-rule design's decisions, safety overlay included.

    Only the interval designs admit such a table; CRM's decisions are random
    (use ``crm_empirical_table``) and the 3+3 walk depends on neighbouring
    doses.
    """
    if spec.family not in TABLE_FAMILIES:
        if spec.family is DesignFamily.CRM:
            raise ParameterError("CRM has no fixed decision table; tabulate it empirically")
        raise ParameterError(f"{spec.family.value} has no fixed per-tally decision table")
    if n_max < 1:
        raise ParameterError("n_max must be >= 1")
    rows = []
    for n in range(n_max + 1):
        rows.append(tuple(decide_tally(spec, DoseTally(x, n)) for x in range(n + 1)))
    return DecisionTable(spec, n_max, tuple(rows))


def table_to_csv(table: DecisionTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x/n"] + [str(n) for n in range(1, table.n_max + 1)])
    for x in range(table.n_max + 1):
        row = [str(x)]
        for n in range(1, table.n_max + 1):
            row.append(table.entries[n][x].letter if x <= n else "")
        writer.writerow(row)
    return buf.getvalue()


@dataclass(frozen=True)
class EmpiricalTable:
    """Monte Carlo distribution of CRM decisions per (x, n) cell.

    ``counts[kind][n][x]`` holds how often each relative decision was taken
    at cumulative tally (x, n); unvisited cells have no distribution and are
    excluded from scores and diffs.
    """

    n_max: int
    counts: dict[str, np.ndarray]

    @property
    def visits(self) -> np.ndarray:
        return self.counts["E"] + self.counts["S"] + self.counts["D"]

    def proportions(self, x: int, n: int) -> tuple[float, float, float] | None:
        """(qE, qS, qD) for a visited cell, None for an unvisited one."""
        if not 0 <= x <= n <= self.n_max:
            raise ParameterError(f"cell ({x}, {n}) outside table (n_max={self.n_max})")
        total = float(self.visits[n, x])
        if total == 0.0:
            return None
        return (
            float(self.counts["E"][n, x]) / total,
            float(self.counts["S"][n, x]) / total,
            float(self.counts["D"][n, x]) / total,
        )

    def score(self, x: int, n: int) -> float | None:
        q = self.proportions(x, n)
        return None if q is None else mean_decision_score(q)


def empty_decision_counts(n_max: int) -> dict[str, np.ndarray]:
    return {k: np.zeros((n_max + 1, n_max + 1), dtype=np.int64) for k in ("E", "S", "D")}


def accumulate_decision_counts(counts: dict[str, np.ndarray], records: Sequence) -> None:
    """Fold the per-cohort relative decisions of simulated trials into counts.

    DU and STOP events count as de-escalations; tallies beyond n_max are
    ignored (they cannot occur when n_max is at least the sample size).
    """
    n_max = counts["E"].shape[0] - 1
    for rec in records:
        for ev in rec.cohorts:
            if ev.n > n_max:
                continue
            kind = ev.decision
            if kind in (Decision.DE_ESCALATE_EXCLUDE, Decision.STOP_TRIAL):
                kind = Decision.DE_ESCALATE
            counts[kind.letter][ev.n, ev.x] += 1


def crm_empirical_table(records: Sequence, n_max: int) -> EmpiricalTable:
    """Tabulate decision frequencies per (x, n) from simulated trial records."""
    if n_max < 1:
        raise ParameterError("n_max must be >= 1")
    if not records:
        raise ParameterError("no trial records to tabulate")
    counts = empty_decision_counts(n_max)
    accumulate_decision_counts(counts, records)
    return EmpiricalTable(n_max, counts)


def empirical_table_to_csv(table: EmpiricalTable) -> str:
    """Long-form CSV: one row per visited cell with the three proportions."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "n", "visits", "q_E", "q_S", "q_D"])
    for n in range(1, table.n_max + 1):
        for x in range(n + 1):
            q = table.proportions(x, n)
            if q is None:
                continue
            writer.writerow([x, n, int(table.visits[n, x]), repr(q[0]), repr(q[1]), repr(q[2])])
    return buf.getvalue()


def mean_decision_score(q: tuple[float, float, float]) -> float:
    """Linear decision score 1*qE + 2*qS + 3*qD; requires the q's to sum to 1."""
    if abs(sum(q) - 1.0) > 1e-9:
        raise ParameterError("decision proportions must sum to 1")
    return 1.0 * q[0] + 2.0 * q[1] + 3.0 * q[2]


def table_diff(t1, t2, n_max: int | None = None) -> float:
    """Sum of per-cell score differences (t1 - t2) over 1 <= x <= n <= N.

    Positive means t1 is the more conservative (de-escalation-prone) design.
    Cells where either side has no score (unvisited empirical cells) are
    skipped. The x=0 row is excluded by convention.
    """
    n = n_max if n_max is not None else min(t1.n_max, t2.n_max)
    if t1.n_max < n or t2.n_max < n:
        raise ParameterError(f"tables too small for N={n}")
    total = 0.0
    for nn in range(1, n + 1):
        for x in range(1, nn + 1):
            s1 = t1.score(x, nn)
            s2 = t2.score(x, nn)
            if s1 is None or s2 is None:
                continue
            total += s1 - s2
    return total


def diff_grid(
    family1: str,
    family2: str,
    p_t: float,
    eps1_values: Sequence[float],
    eps2_values: Sequence[float],
    n_max: int,
    crm_table: EmpiricalTable | None = None,
    prior_a: float = 1.0,
    prior_b: float = 1.0,
) -> np.ndarray:
    """table_diff on a grid of epsilon pairs; rows follow eps1, columns eps2.

    ``family1``/``family2`` are design names (``mtpi2``, ``boin-lambda``,
    ...); the name ``crm`` uses the supplied empirical table, which does not
    depend on the epsilons.
    """

    def source(name: str):
        if name.strip().lower() == "crm":
            if crm_table is None:
                raise ParameterError("diffing against CRM requires an empirical table")
            if crm_table.n_max < n_max:
                raise ParameterError("empirical table smaller than the requested N")
            return lambda target: crm_table
        return lambda target: decision_table(
            DesignSpec.from_name(name, target, prior_a=prior_a, prior_b=prior_b), n_max
        )

    make1, make2 = source(family1), source(family2)
    grid = np.empty((len(eps1_values), len(eps2_values)), dtype=float)
    for i, e1 in enumerate(eps1_values):
        for j, e2 in enumerate(eps2_values):
            target = TargetSpec(p_t, e1, e2)
            grid[i, j] = table_diff(make1(target), make2(target), n_max)
    return grid


def diff_grid_to_csv(grid: np.ndarray, eps1_values: Sequence[float], eps2_values: Sequence[float]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["eps1/eps2"] + [repr(float(e)) for e in eps2_values])
    for i, e1 in enumerate(eps1_values):
        writer.writerow([repr(float(e1))] + [repr(float(v)) for v in grid[i]])
    return buf.getvalue()

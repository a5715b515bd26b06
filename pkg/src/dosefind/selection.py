"""End-of-trial MTD selection via isotonic regression, and the true-MTD rules
used to score simulated trials.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .types import DoseTally, TargetSpec


@dataclass(frozen=True)
class SelectionResult:
    """Selected dose index (or None) plus the isotonic estimates over tried doses.

    ``isotonic_estimates`` is aligned to the full dose grid with NaN at
    untried doses; the tried subsequence is non-decreasing.
    """

    selected: int | None
    isotonic_estimates: tuple[float, ...]


@dataclass(frozen=True)
class TrueMtd:
    """Set of true-MTD dose indices for a scenario; empty means 'none'."""

    doses: frozenset[int]

    @property
    def is_none(self) -> bool:
        return len(self.doses) == 0


def pava(values: Sequence[float], weights: Sequence[float]) -> np.ndarray:
    """Weighted least-squares non-decreasing fit (pool adjacent violators).

    Pooled blocks take their weighted mean; the fit is idempotent.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.shape != w.shape or v.ndim != 1:
        raise ParameterError("values and weights must be 1-d and the same length")
    if np.any(w <= 0.0):
        raise ParameterError("weights must be positive")
    # blocks of (mean, weight, count), merged while out of order
    means: list[float] = []
    wts: list[float] = []
    counts: list[int] = []
    for val, wt in zip(v, w):
        means.append(float(val))
        wts.append(float(wt))
        counts.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, c2 = means.pop(), wts.pop(), counts.pop()
            m1, w1, c1 = means.pop(), wts.pop(), counts.pop()
            wt_sum = w1 + w2
            means.append((m1 * w1 + m2 * w2) / wt_sum)
            wts.append(wt_sum)
            counts.append(c1 + c2)
    out = np.empty_like(v)
    pos = 0
    for m, c in zip(means, counts):
        out[pos : pos + c] = m
        pos += c
    return out


def select_mtd(
    tallies: Sequence[DoseTally],
    excluded: Sequence[bool],
    target: TargetSpec,
    prior_a: float = 1.0,
    prior_b: float = 1.0,
) -> SelectionResult:
    """Pick the MTD among tried, non-excluded doses.

    Posterior means (a+x)/(a+b+n) are isotonized with posterior pseudo-count
    weights n+a+b, then the estimate closest to the target wins. At equal
    distance: the lower dose if its estimate exceeds the target, else the
    higher dose.
    """
    if len(tallies) != len(excluded):
        raise ParameterError("tallies and exclusion flags must align")
    tried = [i for i, t in enumerate(tallies) if t.n > 0]
    estimates = [float("nan")] * len(tallies)
    if not tried:
        return SelectionResult(None, tuple(estimates))
    raw = [(prior_a + tallies[i].x) / (prior_a + prior_b + tallies[i].n) for i in tried]
    wts = [tallies[i].n + prior_a + prior_b for i in tried]
    iso = pava(raw, wts)
    for i, est in zip(tried, iso):
        estimates[i] = float(est)
    eligible = [i for i in tried if not excluded[i]]
    if not eligible:
        return SelectionResult(None, tuple(estimates))
    dist = {i: abs(estimates[i] - target.p_t) for i in eligible}
    best = min(dist.values())
    # distances equal up to float noise count as ties so the stated tie rule
    # actually governs hand-computable cases like (0.2, 0.4) around 0.3
    candidates = sorted(i for i in eligible if dist[i] <= best + 1e-9)
    if estimates[candidates[0]] > target.p_t:
        pick = candidates[0]
    else:
        pick = candidates[-1]
    return SelectionResult(pick, tuple(estimates))


def true_mtd(probs: Sequence[float], target: TargetSpec) -> TrueMtd:
    """Ground-truth MTD set for a scenario.

    Rule 1: every dose inside the closed equivalence interval. Rule 2 (when
    rule 1 is empty): the highest dose strictly below the target. Rule 3:
    nothing qualifies, the correct selection is 'none'.
    """
    lo, hi = target.p_t - target.eps1, target.p_t + target.eps2
    in_interval = frozenset(i for i, p in enumerate(probs) if lo <= p <= hi)
    if in_interval:
        return TrueMtd(in_interval)
    below = [i for i, p in enumerate(probs) if p < target.p_t]
    if below:
        return TrueMtd(frozenset({max(below)}))
    return TrueMtd(frozenset())

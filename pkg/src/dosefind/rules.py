"""Per-cohort decision rules for the interval designs (TPI, mTPI, mTPI-2, CCD, BOIN).

Every rule is a pure function of the current dose's cumulative tally; the
trial-level movement semantics (dose caps, exclusions, stopping) live in
``engine``. By convention a tally with n=0 yields STAY: decisions are only
requested after a cohort completes, so this is a defensive default.

Exact ties in the interval comparisons are broken toward the safer decision
(D over S over E). They only occur in degenerate configurations such as a
uniform posterior over symmetric intervals.
"""

from __future__ import annotations

import math
from typing import Iterable

from scipy import optimize

from .errors import ComputationError, ParameterError
from .posteriors import interval_probability, posterior, prob_above, upm
from .types import (
    BoinBoundaries,
    Decision,
    DesignFamily,
    DesignSpec,
    DoseTally,
    Interval,
    SAFETY_ORDER,
    TargetSpec,
)

_TILE_EPS = 1e-12  # drop partition tiles shorter than this


def _safest_argmax(scored: Iterable[tuple[Decision, float]]) -> Decision:
    """Decision with the largest score; exact ties resolve to the safer decision."""
    best: dict[Decision, float] = {}
    for kind, value in scored:
        if kind not in best or value > best[kind]:
            best[kind] = value
    top = max(best.values())
    for kind in SAFETY_ORDER:
        if kind in best and best[kind] == top:
            return kind
    raise ComputationError("no candidate decisions")  # pragma: no cover


# ---------------------------------------------------------------------------
# iDesigns: decisions from posterior probabilities of toxicity intervals
# ---------------------------------------------------------------------------


def mtpi_decide(target: TargetSpec, tally: DoseTally, prior_a: float = 1.0, prior_b: float = 1.0) -> Decision:
    """mTPI rule: largest unit probability mass among UI / EI / OI."""
    if tally.n == 0:
        return Decision.STAY
    post = posterior(tally, prior_a, prior_b)
    lo, hi = target.p_t - target.eps1, target.p_t + target.eps2
    scored = [
        (Decision.ESCALATE, upm(post, Interval(0.0, lo))),
        (Decision.STAY, upm(post, Interval(lo, hi))),
        (Decision.DE_ESCALATE, upm(post, Interval(hi, 1.0))),
    ]
    return _safest_argmax(scored)


def mtpi2_partition(target: TargetSpec) -> list[tuple[Interval, Decision]]:
    """Tile (0,1) with equivalence-interval-length subintervals.

    The under- and over-dosing regions are cut into tiles of the same length
    as the equivalence interval, the outermost tiles clipped at 0 and 1.
    Returned in ascending order; each tile carries its associated decision.
    """
    delta = target.eps1 + target.eps2
    ei_lo, ei_hi = target.p_t - target.eps1, target.p_t + target.eps2
    tiles: list[tuple[Interval, Decision]] = []
    b = ei_lo
    while b > _TILE_EPS:
        lo = max(0.0, b - delta)
        tiles.append((Interval(lo, b), Decision.ESCALATE))
        b = lo
    tiles.reverse()
    tiles.append((Interval(ei_lo, ei_hi), Decision.STAY))
    b = ei_hi
    while b < 1.0 - _TILE_EPS:
        hi = min(1.0, b + delta)
        tiles.append((Interval(b, hi), Decision.DE_ESCALATE))
        b = hi
    return tiles


def mtpi2_decide(target: TargetSpec, tally: DoseTally, prior_a: float = 1.0, prior_b: float = 1.0) -> Decision:
    """mTPI-2 rule: largest UPM over the full subinterval partition.

    Clipped boundary tiles use their actual (shorter) length in the UPM.
    """
    if tally.n == 0:
        return Decision.STAY
    post = posterior(tally, prior_a, prior_b)
    scored = [(kind, upm(post, iv)) for iv, kind in mtpi2_partition(target)]
    return _safest_argmax(scored)


def tpi_decide(
    target: TargetSpec,
    k1: float,
    k2: float,
    tally: DoseTally,
    prior_a: float = 1.0,
    prior_b: float = 1.0,
) -> Decision:
    """TPI rule: posterior-sd-scaled intervals, largest posterior probability wins.

    An interval whose sd-scaled boundary leaves [0,1] is clipped; if it
    collapses entirely its probability is 0.
    """
    if k1 <= 0.0 or k2 <= 0.0:
        raise ParameterError("K1 and K2 must be positive")
    if tally.n == 0:
        return Decision.STAY
    post = posterior(tally, prior_a, prior_b)
    lo = target.p_t - k1 * post.sd
    hi = target.p_t + k2 * post.sd
    p_ui = interval_probability(post, Interval(0.0, lo)) if lo > 0.0 else 0.0
    lo_c, hi_c = max(lo, 0.0), min(hi, 1.0)
    p_ei = interval_probability(post, Interval(lo_c, hi_c)) if lo_c < hi_c else 0.0
    p_oi = interval_probability(post, Interval(hi, 1.0)) if hi < 1.0 else 0.0
    return _safest_argmax(
        [(Decision.ESCALATE, p_ui), (Decision.STAY, p_ei), (Decision.DE_ESCALATE, p_oi)]
    )


# ---------------------------------------------------------------------------
# IB-Designs: decisions from the point estimate x/n against fixed boundaries
# ---------------------------------------------------------------------------

# Published CCD half-widths for moderate sample sizes and six dose levels.
_CCD_DELTAS = (
    ((0.10, 0.15, 0.20, 0.25), 0.09),
    ((0.30, 0.35), 0.10),
    ((0.40,), 0.12),
    ((0.45, 0.50), 0.13),
)


def ccd_delta(p_t: float) -> float:
    """Recommended CCD half-width for the tabulated targets; error otherwise."""
    for grid, delta in _CCD_DELTAS:
        if any(math.isclose(p_t, g, abs_tol=1e-9) for g in grid):
            return delta
    raise ParameterError(
        f"no published CCD half-width for p_t={p_t}; supply an explicit delta override"
    )


def ccd_decide(p_t: float, delta: float, tally: DoseTally) -> Decision:
    """CCD rule on the empirical rate; boundary equality stays (closed middle interval)."""
    if tally.n == 0:
        return Decision.STAY
    phat = tally.phat
    if phat < p_t - delta:
        return Decision.ESCALATE
    if phat > p_t + delta:
        return Decision.DE_ESCALATE
    return Decision.STAY


def _boin_lambda_e(p_t: float, phi1: float) -> float:
    return math.log((1.0 - phi1) / (1.0 - p_t)) / math.log(p_t * (1.0 - phi1) / (phi1 * (1.0 - p_t)))


def _boin_lambda_d(p_t: float, phi2: float) -> float:
    return math.log((1.0 - p_t) / (1.0 - phi2)) / math.log(phi2 * (1.0 - p_t) / (p_t * (1.0 - phi2)))


def boin_boundaries(p_t: float, phi1: float, phi2: float) -> BoinBoundaries:
    """Optimal local-BOIN decision boundaries for a user interval (phi1, phi2)."""
    if not 0.0 < phi1 < p_t < phi2 < 1.0:
        raise ParameterError(f"need 0 < phi1 < p_t < phi2 < 1, got ({phi1}, {p_t}, {phi2})")
    return BoinBoundaries(phi1, phi2, _boin_lambda_e(p_t, phi1), _boin_lambda_d(p_t, phi2))


def boin_inverse(p_t: float, lambda_e: float, lambda_d: float, tol: float = 1e-12) -> tuple[float, float]:
    """Invert the boundary maps: find (phi1, phi2) producing the given lambdas.

    Each boundary map is monotone on its side of p_t, so a bracketed scalar
    root-find recovers the user interval to well under 1e-6.
    """
    if not 0.0 < lambda_e < p_t < lambda_d < 1.0:
        raise ParameterError("need 0 < lambda_e < p_t < lambda_d < 1")
    lo, hi = 1e-12, p_t - 1e-12
    try:
        phi1 = float(optimize.brentq(lambda f: _boin_lambda_e(p_t, f) - lambda_e, lo, hi, xtol=tol))
        phi2 = float(
            optimize.brentq(lambda f: _boin_lambda_d(p_t, f) - lambda_d, p_t + 1e-12, 1 - 1e-12, xtol=tol)
        )
    except ValueError as exc:
        raise ComputationError(f"no boundary inverse for (p_t={p_t}, {lambda_e}, {lambda_d})") from exc
    return phi1, phi2


def boin_decide(bounds: BoinBoundaries, tally: DoseTally) -> Decision:
    """BOIN rule: escalate on (0, lambda_e], stay inside, de-escalate on [lambda_d, 1)."""
    if tally.n == 0:
        return Decision.STAY
    phat = tally.phat
    if phat <= bounds.lambda_e:
        return Decision.ESCALATE
    if phat >= bounds.lambda_d:
        return Decision.DE_ESCALATE
    return Decision.STAY


def boin_variant_bounds(p_t: float, variant: str, target: TargetSpec) -> BoinBoundaries:
    """The three BOIN parameterizations compared in the study.

    default: phi = (0.6 p_t, 1.4 p_t); epsilon: phi = equivalence interval;
    lambda: the equivalence interval is used as the decision boundaries
    directly, with phi recovered by inversion.
    """
    if variant == "default":
        return boin_boundaries(p_t, 0.6 * p_t, 1.4 * p_t)
    if variant == "epsilon":
        return boin_boundaries(p_t, p_t - target.eps1, p_t + target.eps2)
    if variant == "lambda":
        lam_e, lam_d = p_t - target.eps1, p_t + target.eps2
        phi1, phi2 = boin_inverse(p_t, lam_e, lam_d)
        return BoinBoundaries(phi1, phi2, lam_e, lam_d)
    raise ParameterError(f"unknown BOIN variant: {variant!r}")


# ---------------------------------------------------------------------------
# Safety / dose-exclusion rule
# ---------------------------------------------------------------------------


def safety_exclude(
    target: TargetSpec,
    tally: DoseTally,
    threshold: float = 0.95,
    min_n: int = 3,
    prior_a: float = 1.0,
    prior_b: float = 1.0,
) -> bool:
    """True when the dose is too toxic: Pr(p > p_t | data) exceeds the threshold.

    Fires only with at least ``min_n`` patients so that a single event cannot
    exclude a dose. The comparison is strict.
    """
    if not 0.5 < threshold < 1.0:
        raise ParameterError("threshold must be in (0.5, 1)")
    if min_n < 1:
        raise ParameterError("min_n must be >= 1")
    if tally.n < min_n:
        return False
    return prob_above(posterior(tally, prior_a, prior_b), target.p_t) > threshold


# ---------------------------------------------------------------------------
# Unified tally-level dispatch (decision tables, CLI, service)
# ---------------------------------------------------------------------------


def rule_decision(spec: DesignSpec, tally: DoseTally) -> Decision:
    """The design's raw E/S/D rule for one tally, without the safety overlay."""
    fam = spec.family
    if fam is DesignFamily.MTPI:
        return mtpi_decide(spec.target, tally, spec.prior_a, spec.prior_b)
    if fam is DesignFamily.MTPI2:
        return mtpi2_decide(spec.target, tally, spec.prior_a, spec.prior_b)
    if fam is DesignFamily.TPI:
        k1, k2 = spec.tpi_k
        return tpi_decide(spec.target, k1, k2, tally, spec.prior_a, spec.prior_b)
    if fam is DesignFamily.CCD:
        delta = spec.delta if spec.delta is not None else ccd_delta(spec.target.p_t)
        return ccd_decide(spec.target.p_t, delta, tally)
    if fam is DesignFamily.BOIN:
        bounds = boin_variant_bounds(spec.target.p_t, spec.boin_variant, spec.target)
        return boin_decide(bounds, tally)
    raise ParameterError(f"{fam.value} has no fixed per-tally rule")


def decide_tally(spec: DesignSpec, tally: DoseTally) -> Decision:
    """Rule decision with the safety overlay applied (DU when the dose must go)."""
    if spec.safety_enabled and safety_exclude(
        spec.target, tally, spec.safety_threshold, spec.safety_min_n, spec.prior_a, spec.prior_b
    ):
        return Decision.DE_ESCALATE_EXCLUDE
    return rule_decision(spec, tally)


def decision_diagnostics(spec: DesignSpec, tally: DoseTally) -> dict:
    """Human-readable numbers behind a decision (UPMs, boundaries, tail probability)."""
    diag: dict = {}
    fam = spec.family
    if fam in (DesignFamily.MTPI, DesignFamily.MTPI2, DesignFamily.TPI) and tally.n > 0:
        post = posterior(tally, spec.prior_a, spec.prior_b)
        diag["posterior"] = {"alpha": post.alpha, "beta": post.beta, "mean": post.mean, "sd": post.sd}
        t = spec.target
        if fam is DesignFamily.MTPI:
            lo, hi = t.p_t - t.eps1, t.p_t + t.eps2
            diag["upm"] = {
                "E": upm(post, Interval(0.0, lo)),
                "S": upm(post, Interval(lo, hi)),
                "D": upm(post, Interval(hi, 1.0)),
            }
        elif fam is DesignFamily.MTPI2:
            diag["tiles"] = [
                {"lo": iv.lo, "hi": iv.hi, "decision": kind.letter, "upm": upm(post, iv)}
                for iv, kind in mtpi2_partition(t)
            ]
        else:
            k1, k2 = spec.tpi_k
            lo, hi = t.p_t - k1 * post.sd, t.p_t + k2 * post.sd
            diag["intervals"] = {
                "E": {"lo": 0.0, "hi": max(lo, 0.0)},
                "S": {"lo": max(lo, 0.0), "hi": min(hi, 1.0)},
                "D": {"lo": min(hi, 1.0), "hi": 1.0},
            }
    if fam is DesignFamily.CCD and tally.n > 0:
        delta = spec.delta if spec.delta is not None else ccd_delta(spec.target.p_t)
        diag["phat"] = tally.phat
        diag["bounds"] = {"lo": spec.target.p_t - delta, "hi": spec.target.p_t + delta}
    if fam is DesignFamily.BOIN and tally.n > 0:
        b = boin_variant_bounds(spec.target.p_t, spec.boin_variant, spec.target)
        diag["phat"] = tally.phat
        diag["bounds"] = {"phi1": b.phi1, "phi2": b.phi2, "lambda_e": b.lambda_e, "lambda_d": b.lambda_d}
    if spec.safety_enabled and tally.n > 0:
        diag["safety"] = {
            "prob_above_target": prob_above(posterior(tally, spec.prior_a, spec.prior_b), spec.target.p_t),
            "threshold": spec.safety_threshold,
            "min_n": spec.safety_min_n,
        }
    return diag

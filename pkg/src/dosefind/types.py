"""Core domain types shared by every design family.

Dose levels are 0-based indices everywhere inside the package; the CLI, CSV
exports and the HTTP service present 1-based dose numbers to users.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Any

from .errors import ConfigError, ParameterError

# Sanity cap on the equivalence-interval half widths; clinically these are
# "small fractions" (typically <= 0.05).
MAX_EPSILON = 0.3


@dataclass(frozen=True)
class TargetSpec:
    """Target toxicity probability and the equivalence-interval margins around it."""

    p_t: float
    eps1: float = 0.05
    eps2: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.p_t < 1.0:
            raise ParameterError(f"p_t must be in (0,1), got {self.p_t}")
        if self.eps1 < 0.0 or self.eps2 < 0.0:
            raise ParameterError("eps1 and eps2 must be non-negative")
        if self.eps1 > MAX_EPSILON or self.eps2 > MAX_EPSILON:
            raise ParameterError(f"eps margins capped at {MAX_EPSILON}")
        if self.p_t - self.eps1 <= 0.0:
            raise ParameterError("p_t - eps1 must be positive")
        if self.p_t + self.eps2 >= 1.0:
            raise ParameterError("p_t + eps2 must be below 1")

    @property
    def equivalence(self) -> "Interval":
        return Interval(self.p_t - self.eps1, self.p_t + self.eps2)


@dataclass(frozen=True)
class DoseTally:
    """Cumulative DLT count x out of n patients treated at one dose."""

    x: int
    n: int

    def __post_init__(self):
        if self.n < 0 or self.x < 0 or self.x > self.n:
            raise ParameterError(f"tally requires 0 <= x <= n, got x={self.x}, n={self.n}")

    @property
    def phat(self) -> float:
        if self.n == 0:
            raise ParameterError("empirical rate undefined for n=0")
        return self.x / self.n


@dataclass(frozen=True)
class Interval:
    """Half-open-by-convention probability interval (lo, hi) with 0 <= lo < hi <= 1."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi <= 1.0):
            raise ParameterError(f"interval requires 0 <= lo < hi <= 1, got ({self.lo}, {self.hi})")

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class BetaPosterior:
    """Beta(alpha, beta) posterior for a dose's toxicity probability."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise ParameterError("beta parameters must be positive")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def sd(self) -> float:
        a, b = self.alpha, self.beta
        return math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1.0)))


class Decision(Enum):
    """Per-cohort dose-assignment decision.

    DE_ESCALATE_EXCLUDE and STOP_TRIAL only arise from the safety rule (or the
    3+3 walk); the plain rules emit E/S/D.
    """

    ESCALATE = "E"
    STAY = "S"
    DE_ESCALATE = "D"
    DE_ESCALATE_EXCLUDE = "DU"
    STOP_TRIAL = "STOP"

    @property
    def letter(self) -> str:
        return self.value


# Scan order for breaking exact ties between candidate decisions: the safer
# decision wins (ethical principle; ties only occur in degenerate configurations).
SAFETY_ORDER = (Decision.DE_ESCALATE, Decision.STAY, Decision.ESCALATE)


@dataclass(frozen=True)
class BoinBoundaries:
    """User interval (phi1, phi2) and the derived decision boundaries (lambda_e, lambda_d)."""

    phi1: float
    phi2: float
    lambda_e: float
    lambda_d: float

    def __post_init__(self):
        if not (0.0 < self.phi1 < self.lambda_e < self.lambda_d < self.phi2 < 1.0):
            raise ParameterError(
                "boundaries must satisfy 0 < phi1 < lambda_e < lambda_d < phi2 < 1, got "
                f"({self.phi1}, {self.lambda_e}, {self.lambda_d}, {self.phi2})"
            )


class DesignFamily(Enum):
    TPI = "tpi"
    MTPI = "mtpi"
    MTPI2 = "mtpi2"
    CCD = "ccd"
    BOIN = "boin"
    THREE_PLUS_THREE = "3+3"
    CRM = "crm"


BOIN_VARIANTS = ("default", "epsilon", "lambda")

# Families whose per-cohort rule is a fixed function of the current-dose tally
# (and therefore admit a deterministic decision table).
TABLE_FAMILIES = (
    DesignFamily.TPI,
    DesignFamily.MTPI,
    DesignFamily.MTPI2,
    DesignFamily.CCD,
    DesignFamily.BOIN,
)

# Families that apply the posterior-tail safety/exclusion rule by default.
_SAFETY_DEFAULT_ON = (DesignFamily.TPI, DesignFamily.MTPI, DesignFamily.MTPI2, DesignFamily.BOIN)

_TPI_DEFAULT_K1 = 1.0
_TPI_DEFAULT_K2 = 1.5
_CRM_DEFAULT_PRIOR_SD = 1.34


@dataclass(frozen=True)
class DesignSpec:
    """A fully parameterized design: family + target + family-specific knobs.

    Family-specific fields must only be set for the family that uses them;
    construction through the classmethod factories guarantees that.
    """

    family: DesignFamily
    target: TargetSpec
    prior_a: float = 1.0
    prior_b: float = 1.0
    # TPI
    k1: float | None = None
    k2: float | None = None
    # CCD
    delta: float | None = None
    ccd_safety: bool = False
    # BOIN
    boin_variant: str | None = None
    # CRM
    skeleton: tuple[float, ...] | None = None
    prior_sd: float | None = None
    no_skip: bool = True
    crm_safety: bool = False
    # safety/exclusion rule
    safety_threshold: float = 0.95
    safety_min_n: int = 3
    # near-noninformative prior for end-of-trial isotonic selection; the
    # informative Beta(1,1) would drag barely-tried doses toward 0.5 and
    # wreck selection at low targets
    selection_prior_a: float = 0.005
    selection_prior_b: float = 0.005

    def __post_init__(self):
        if self.prior_a <= 0.0 or self.prior_b <= 0.0:
            raise ParameterError("prior pseudo-counts must be positive")
        if self.selection_prior_a <= 0.0 or self.selection_prior_b <= 0.0:
            raise ParameterError("selection prior pseudo-counts must be positive")
        if not 0.5 < self.safety_threshold < 1.0:
            raise ParameterError("safety_threshold must be in (0.5, 1)")
        if self.safety_min_n < 1:
            raise ParameterError("safety_min_n must be >= 1")
        self._check_family_params()

    def _check_family_params(self):
        fam = self.family
        if (self.k1 is not None or self.k2 is not None) and fam is not DesignFamily.TPI:
            raise ParameterError("k1/k2 are TPI parameters")
        if self.delta is not None and fam is not DesignFamily.CCD:
            raise ParameterError("delta is a CCD parameter")
        if self.boin_variant is not None:
            if fam is not DesignFamily.BOIN:
                raise ParameterError("boin_variant is a BOIN parameter")
            if self.boin_variant not in BOIN_VARIANTS:
                raise ParameterError(f"boin_variant must be one of {BOIN_VARIANTS}")
        if fam is DesignFamily.BOIN and self.boin_variant is None:
            raise ParameterError("BOIN requires a variant")
        if (self.skeleton is not None or self.prior_sd is not None) and fam is not DesignFamily.CRM:
            raise ParameterError("skeleton/prior_sd are CRM parameters")
        if self.skeleton is not None:
            probs = self.skeleton
            if len(probs) < 2 or len(probs) > 20:
                raise ParameterError("skeleton length must be in [2, 20]")
            if any(not 0.0 < q < 1.0 for q in probs):
                raise ParameterError("skeleton entries must be in (0,1)")
            if any(b <= a for a, b in zip(probs, probs[1:])):
                raise ParameterError("skeleton must be strictly increasing")

    # -- factories -----------------------------------------------------------

    @classmethod
    def tpi(cls, target: TargetSpec, k1: float = _TPI_DEFAULT_K1, k2: float = _TPI_DEFAULT_K2, **kw) -> "DesignSpec":
        if k1 <= 0.0 or k2 <= 0.0:
            raise ParameterError("K1 and K2 must be positive")
        return cls(DesignFamily.TPI, target, k1=k1, k2=k2, **kw)

    @classmethod
    def mtpi(cls, target: TargetSpec, **kw) -> "DesignSpec":
        return cls(DesignFamily.MTPI, target, **kw)

    @classmethod
    def mtpi2(cls, target: TargetSpec, **kw) -> "DesignSpec":
        return cls(DesignFamily.MTPI2, target, **kw)

    @classmethod
    def ccd(cls, target: TargetSpec, delta: float | None = None, safety: bool = False, **kw) -> "DesignSpec":
        return cls(DesignFamily.CCD, target, delta=delta, ccd_safety=safety, **kw)

    @classmethod
    def boin(cls, target: TargetSpec, variant: str = "default", **kw) -> "DesignSpec":
        return cls(DesignFamily.BOIN, target, boin_variant=variant, **kw)

    @classmethod
    def three_plus_three(cls, target: TargetSpec, **kw) -> "DesignSpec":
        return cls(DesignFamily.THREE_PLUS_THREE, target, **kw)

    @classmethod
    def crm(
        cls,
        target: TargetSpec,
        skeleton: tuple[float, ...] | None = None,
        prior_sd: float = _CRM_DEFAULT_PRIOR_SD,
        no_skip: bool = True,
        **kw,
    ) -> "DesignSpec":
        return cls(
            DesignFamily.CRM,
            target,
            skeleton=tuple(skeleton) if skeleton is not None else None,
            prior_sd=prior_sd,
            no_skip=no_skip,
            **kw,
        )

    # -- derived defaults ----------------------------------------------------

    @property
    def safety_enabled(self) -> bool:
        if self.family in _SAFETY_DEFAULT_ON:
            return True
        if self.family is DesignFamily.CCD:
            return self.ccd_safety
        if self.family is DesignFamily.CRM:
            return self.crm_safety
        return False

    @property
    def tpi_k(self) -> tuple[float, float]:
        return (
            self.k1 if self.k1 is not None else _TPI_DEFAULT_K1,
            self.k2 if self.k2 is not None else _TPI_DEFAULT_K2,
        )

    @property
    def crm_prior_sd(self) -> float:
        return self.prior_sd if self.prior_sd is not None else _CRM_DEFAULT_PRIOR_SD

    @property
    def label(self) -> str:
        if self.family is DesignFamily.BOIN:
            return f"boin-{self.boin_variant}"
        return self.family.value

    # -- (de)serialization for CLI / service / session logs -------------------

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "family": self.label,
            "p_t": self.target.p_t,
            "eps1": self.target.eps1,
            "eps2": self.target.eps2,
            "prior_a": self.prior_a,
            "prior_b": self.prior_b,
            "safety_threshold": self.safety_threshold,
            "safety_min_n": self.safety_min_n,
            "selection_prior_a": self.selection_prior_a,
            "selection_prior_b": self.selection_prior_b,
        }
        if self.family is DesignFamily.TPI:
            d["k1"], d["k2"] = self.tpi_k
        if self.family is DesignFamily.CCD:
            if self.delta is not None:
                d["delta"] = self.delta
            d["safety"] = self.ccd_safety
        if self.family is DesignFamily.CRM:
            if self.skeleton is not None:
                d["skeleton"] = list(self.skeleton)
            d["prior_sd"] = self.crm_prior_sd
            d["no_skip"] = self.no_skip
            d["safety"] = self.crm_safety
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DesignSpec":
        try:
            name = d["family"]
            target = TargetSpec(float(d["p_t"]), float(d.get("eps1", 0.05)), float(d.get("eps2", 0.05)))
        except KeyError as exc:
            raise ConfigError(f"design spec missing field: {exc}") from exc
        kw: dict[str, Any] = {}
        for k in ("prior_a", "prior_b", "safety_threshold", "selection_prior_a", "selection_prior_b"):
            if k in d:
                kw[k] = float(d[k])
        if "safety_min_n" in d:
            kw["safety_min_n"] = int(d["safety_min_n"])
        return cls.from_name(name, target, params=d, **kw)

    @classmethod
    def from_name(cls, name: str, target: TargetSpec, params: dict[str, Any] | None = None, **kw) -> "DesignSpec":
        """Build a spec from a CLI-style design name like ``mtpi2`` or ``boin-lambda``."""
        p = params or {}
        key = name.strip().lower()
        try:
            if key == "tpi":
                return cls.tpi(target, k1=float(p.get("k1", _TPI_DEFAULT_K1)), k2=float(p.get("k2", _TPI_DEFAULT_K2)), **kw)
            if key == "mtpi":
                return cls.mtpi(target, **kw)
            if key in ("mtpi2", "mtpi-2"):
                return cls.mtpi2(target, **kw)
            if key == "ccd":
                delta = p.get("delta")
                return cls.ccd(target, delta=float(delta) if delta is not None else None, safety=bool(p.get("safety", False)), **kw)
            if key == "boin":
                return cls.boin(target, variant=str(p.get("variant", "default")), **kw)
            if key.startswith("boin-") or key.startswith("boin_"):
                return cls.boin(target, variant=key[5:], **kw)
            if key in ("3+3", "three-plus-three", "threeplusthree"):
                return cls.three_plus_three(target, **kw)
            if key == "crm":
                skeleton = p.get("skeleton")
                return cls.crm(
                    target,
                    skeleton=tuple(float(q) for q in skeleton) if skeleton else None,
                    prior_sd=float(p.get("prior_sd", _CRM_DEFAULT_PRIOR_SD)),
                    no_skip=bool(p.get("no_skip", True)),
                    crm_safety=bool(p.get("safety", False)),
                    **kw,
                )
        except ParameterError:
            raise
        raise ConfigError(f"unknown design name: {name!r}")


DESIGN_NAMES = ("tpi", "mtpi", "mtpi2", "ccd", "boin-default", "boin-epsilon", "boin-lambda", "3+3", "crm")

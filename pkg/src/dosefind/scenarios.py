"""Scenario types and generators: the built-in 42-scenario comparison set, the
probit-recursion random-scenario model, a configurable generic generator, and
lossless CSV / JSON round-trips.

File formats (documented bit-exactly, goldens under tests/golden/):

* CSV: header ``label,p_T,p1,p2,...,p{K}`` with K = widest scenario in the
  file; shorter rows leave their trailing probability fields empty (ragged
  tails are accepted on input). Floats are written with ``repr`` so a
  serialize/parse round-trip is exact.
* JSON: ``{"schema": "dosefind-scenarios-v1", "scenarios": [{"label": ...,
  "p_T": ..., "probs": [...]}]}``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .errors import ComputationError, ParameterError

SCENARIO_SCHEMA = "dosefind-scenarios-v1"


@dataclass(frozen=True)
class Scenario:
    """True per-dose toxicity probabilities plus the target they were built for."""

    probs: tuple[float, ...]
    p_t: float
    label: str = ""

    def __post_init__(self):
        if not 1 <= len(self.probs) <= 20:
            raise ParameterError("scenario must have 1..20 doses")
        if any(not 0.0 < p < 1.0 for p in self.probs):
            raise ParameterError("toxicity probabilities must be in (0,1)")
        if not 0.0 < self.p_t < 1.0:
            raise ParameterError("p_t must be in (0,1)")

    @property
    def num_doses(self) -> int:
        return len(self.probs)


# ---------------------------------------------------------------------------
# Built-in comparison set: 14 six-dose scenarios per target (0.1, 0.2, 0.3)
# ---------------------------------------------------------------------------

_BUILTIN_SET: dict[float, tuple[tuple[float, ...], ...]] = {
    0.1: (
        (0.04, 0.05, 0.06, 0.07, 0.08, 0.09),
        (0.15, 0.20, 0.25, 0.30, 0.35, 0.40),
        (0.01, 0.10, 0.20, 0.25, 0.30, 0.35),
        (0.01, 0.02, 0.03, 0.04, 0.10, 0.25),
        (0.05, 0.40, 0.50, 0.60, 0.65, 0.70),
        (0.01, 0.03, 0.05, 0.40, 0.50, 0.60),
        (0.01, 0.02, 0.03, 0.04, 0.05, 0.40),
        (0.09, 0.11, 0.13, 0.15, 0.17, 0.19),
        (0.05, 0.07, 0.09, 0.11, 0.13, 0.15),
        (0.01, 0.03, 0.05, 0.07, 0.09, 0.11),
        (0.02, 0.04, 0.08, 0.12, 0.17, 0.25),
        (0.02, 0.04, 0.07, 0.10, 0.15, 0.20),
        (0.10, 0.15, 0.20, 0.25, 0.30, 0.35),
        (0.01, 0.03, 0.05, 0.06, 0.08, 0.10),
    ),
    0.2: (
        (0.02, 0.05, 0.08, 0.11, 0.14, 0.17),
        (0.25, 0.35, 0.40, 0.50, 0.60, 0.70),
        (0.01, 0.20, 0.40, 0.60, 0.80, 0.95),
        (0.04, 0.06, 0.08, 0.10, 0.20, 0.50),
        (0.05, 0.50, 0.80, 0.90, 0.95, 0.99),
        (0.01, 0.05, 0.10, 0.50, 0.70, 0.90),
        (0.01, 0.03, 0.07, 0.10, 0.15, 0.70),
        (0.19, 0.21, 0.23, 0.25, 0.27, 0.29),
        (0.15, 0.17, 0.19, 0.21, 0.23, 0.25),
        (0.11, 0.13, 0.15, 0.17, 0.19, 0.21),
        (0.05, 0.11, 0.17, 0.23, 0.29, 0.35),
        (0.05, 0.10, 0.15, 0.20, 0.30, 0.40),
        (0.20, 0.25, 0.30, 0.35, 0.40, 0.45),
        (0.05, 0.08, 0.11, 0.14, 0.17, 0.20),
    ),
    0.3: (
        (0.02, 0.05, 0.10, 0.15, 0.20, 0.25),
        (0.35, 0.45, 0.50, 0.60, 0.70, 0.80),
        (0.01, 0.30, 0.55, 0.65, 0.80, 0.95),
        (0.04, 0.06, 0.08, 0.10, 0.30, 0.60),
        (0.05, 0.60, 0.80, 0.90, 0.95, 0.99),
        (0.01, 0.05, 0.10, 0.60, 0.70, 0.90),
        (0.01, 0.03, 0.07, 0.10, 0.15, 0.75),
        (0.29, 0.31, 0.33, 0.35, 0.37, 0.39),
        (0.25, 0.27, 0.29, 0.31, 0.33, 0.35),
        (0.21, 0.23, 0.25, 0.27, 0.29, 0.31),
        (0.05, 0.20, 0.27, 0.33, 0.39, 0.45),
        (0.05, 0.10, 0.20, 0.30, 0.40, 0.40),
        (0.30, 0.35, 0.40, 0.45, 0.50, 0.55),
        (0.15, 0.18, 0.21, 0.24, 0.27, 0.30),
    ),
}


def builtin_jiwang(p_t: float) -> list[Scenario]:
    """The 14 built-in six-dose scenarios for one of the targets 0.1, 0.2, 0.3."""
    for key, rows in _BUILTIN_SET.items():
        if abs(p_t - key) < 1e-9:
            return [
                Scenario(row, key, label=f"jiwang-{key}-{i + 1:02d}") for i, row in enumerate(rows)
            ]
    raise ParameterError(f"built-in set only covers p_t in (0.1, 0.2, 0.3), got {p_t}")


def builtin_jiwang_all() -> list[Scenario]:
    return [sc for p_t in (0.1, 0.2, 0.3) for sc in builtin_jiwang(p_t)]


# ---------------------------------------------------------------------------
# Model-based generator: probit recursion around a uniformly drawn MTD
# ---------------------------------------------------------------------------

_PROB_CLIP = 1e-6


@dataclass(frozen=True)
class PaolettiConfig:
    """Parameters of the probit-recursion scenario model.

    mu1/mu2 drive the squared offsets for the doses adjacent to the MTD,
    mu3/mu4 the remaining lower/upper doses. The defaults are calibrated so
    the mean gap on each side of the MTD stays below 0.1 (the Monte Carlo
    check lives in the test suite); the sd's are the model's fixed
    probit-scale spreads.
    """

    num_doses: int = 6
    p_t: float = 0.2
    mu1: float = 0.55
    mu2: float = 0.55
    mu3: float = 0.55
    mu4: float = 0.55
    sd_mtd: float = 0.01
    sd_adj: float = 0.1
    sd_far: float = 0.25
    max_retries: int = 100

    def __post_init__(self):
        if self.num_doses < 2:
            raise ParameterError("need at least 2 doses")
        if not 0.0 < self.p_t < 1.0:
            raise ParameterError("p_t must be in (0,1)")
        for mu in (self.mu1, self.mu2, self.mu3, self.mu4):
            if not 0.0 < mu < 1.0:
                raise ParameterError("mu parameters must be in (0,1)")
        for sd in (self.sd_mtd, self.sd_adj, self.sd_far):
            if sd < 0.0:
                raise ParameterError("sd parameters must be non-negative")


def _clip_prob(p: float) -> float:
    return min(max(p, _PROB_CLIP), 1.0 - _PROB_CLIP)


def paoletti_generate(cfg: PaolettiConfig, rng: np.random.Generator) -> Scenario:
    """Draw one scenario: uniform MTD position, probit-noise toxicity curve.

    The MTD's rate is a tight perturbation of the target; its neighbours
    mirror it across the target (when needed) and move outward by squared
    normal offsets, so the curve is always non-decreasing.
    """
    d = cfg.num_doses
    mtd = int(rng.integers(0, d))
    ndtri = special.ndtri
    ndtr = special.ndtr
    z_t = ndtri(cfg.p_t)

    p_mtd = None
    for _ in range(cfg.max_retries):
        xi = rng.normal(z_t, cfg.sd_mtd)
        cand = _clip_prob(float(ndtr(xi)))
        mirror = 2.0 * cfg.p_t - cand
        # the adjacent-dose formulas need the mirrored rate inside (0,1)
        if cand == cfg.p_t or 0.0 < mirror < 1.0:
            p_mtd = cand
            break
    if p_mtd is None:
        raise ComputationError("could not draw an MTD rate with a valid mirror")

    probs = [0.0] * d
    probs[mtd] = p_mtd
    z_mtd = ndtri(p_mtd)

    if mtd > 0:
        xi = rng.normal(ndtri(cfg.mu1), cfg.sd_adj)
        shift = (z_mtd - ndtri(2.0 * cfg.p_t - p_mtd)) if z_mtd > z_t else 0.0
        probs[mtd - 1] = _clip_prob(float(ndtr(z_mtd - shift - xi * xi)))
    if mtd < d - 1:
        xi = rng.normal(ndtri(cfg.mu2), cfg.sd_adj)
        shift = (ndtri(2.0 * cfg.p_t - p_mtd) - z_mtd) if z_mtd < z_t else 0.0
        probs[mtd + 1] = _clip_prob(float(ndtr(z_mtd + shift + xi * xi)))
    for k in range(mtd - 2, -1, -1):
        xi = rng.normal(ndtri(cfg.mu3), cfg.sd_far)
        probs[k] = _clip_prob(float(ndtr(ndtri(probs[k + 1]) - xi * xi)))
    for k in range(mtd + 2, d):
        xi = rng.normal(ndtri(cfg.mu4), cfg.sd_far)
        probs[k] = _clip_prob(float(ndtr(ndtri(probs[k - 1]) + xi * xi)))

    return Scenario(tuple(probs), cfg.p_t, label=f"probit-d{d}-mtd{mtd + 1}")


# ---------------------------------------------------------------------------
# Generic configurable generator (stand-in for elicited scenario collections)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomScenarioAxes:
    """Axes of the generic generator.

    Dose count uniform on the inclusive range; target drawn uniformly from
    ``p_t_choices``; the curve anchors a uniformly placed dose within
    ``anchor_window`` of the target and walks outward with uniform gaps in
    [0, max_gap_down] / [0, max_gap_up].
    """

    dose_count_range: tuple[int, int] = (3, 8)
    p_t_choices: tuple[float, ...] = (0.1, 0.2, 0.3)
    anchor_window: float = 0.05
    max_gap_down: float = 0.15
    max_gap_up: float = 0.20

    def __post_init__(self):
        lo, hi = self.dose_count_range
        if not 1 <= lo <= hi <= 20:
            raise ParameterError("dose_count_range must satisfy 1 <= lo <= hi <= 20")
        if not self.p_t_choices:
            raise ParameterError("p_t_choices must not be empty")


def random_scenario(axes: RandomScenarioAxes, rng: np.random.Generator) -> Scenario:
    """Draw one scenario from the generic monotone family (see RandomScenarioAxes)."""
    lo, hi = axes.dose_count_range
    d = int(rng.integers(lo, hi + 1))
    p_t = float(axes.p_t_choices[int(rng.integers(0, len(axes.p_t_choices)))])
    anchor = int(rng.integers(0, d))
    probs = [0.0] * d
    probs[anchor] = _clip_prob(p_t + float(rng.uniform(-axes.anchor_window, axes.anchor_window)))
    for k in range(anchor - 1, -1, -1):
        probs[k] = _clip_prob(probs[k + 1] - float(rng.uniform(0.0, axes.max_gap_down)))
    for k in range(anchor + 1, d):
        probs[k] = _clip_prob(probs[k - 1] + float(rng.uniform(0.0, axes.max_gap_up)))
    return Scenario(tuple(probs), p_t, label=f"random-d{d}-a{anchor + 1}")


# ---------------------------------------------------------------------------
# File IO
# ---------------------------------------------------------------------------


class ScenarioParseError(ParameterError):
    """Malformed scenario file; carries 1-based line and column of the offence."""

    def __init__(self, message: str, line: int, column: int | None = None):
        at = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{message} ({at})")
        self.line = line
        self.column = column


def scenarios_to_csv(scenarios: Sequence[Scenario]) -> str:
    if not scenarios:
        raise ParameterError("no scenarios to serialize")
    width = max(sc.num_doses for sc in scenarios)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "p_T"] + [f"p{i + 1}" for i in range(width)])
    for sc in scenarios:
        row = [sc.label, repr(sc.p_t)] + [repr(p) for p in sc.probs]
        row += [""] * (width - sc.num_doses)
        writer.writerow(row)
    return buf.getvalue()


def scenarios_from_csv(text: str) -> list[Scenario]:
    reader = csv.reader(io.StringIO(text))
    rows = [(lineno, row) for lineno, row in enumerate(reader, start=1) if row]
    if not rows:
        raise ScenarioParseError("empty scenario file", 1)
    header_line, header = rows[0]
    if len(header) < 3 or header[0] != "label" or header[1] != "p_T":
        raise ScenarioParseError("header must start with 'label,p_T,p1,...'", header_line, 1)
    out: list[Scenario] = []
    for lineno, row in rows[1:]:
        if len(row) < 3:
            raise ScenarioParseError("row needs a label, p_T and at least one probability", lineno, len(row))
        label = row[0]
        try:
            p_t = float(row[1])
        except ValueError:
            raise ScenarioParseError(f"bad p_T value {row[1]!r}", lineno, 2) from None
        probs: list[float] = []
        tail = False
        for col, cell in enumerate(row[2:], start=3):
            if cell == "":
                tail = True  # ragged tail: only empty fields may follow
                continue
            if tail:
                raise ScenarioParseError("probability after an empty field", lineno, col)
            try:
                probs.append(float(cell))
            except ValueError:
                raise ScenarioParseError(f"bad probability {cell!r}", lineno, col) from None
        try:
            out.append(Scenario(tuple(probs), p_t, label=label))
        except ParameterError as exc:
            raise ScenarioParseError(str(exc), lineno) from None
    return out


def scenarios_to_json(scenarios: Sequence[Scenario]) -> str:
    doc = {
        "schema": SCENARIO_SCHEMA,
        "scenarios": [
            {"label": sc.label, "p_T": sc.p_t, "probs": list(sc.probs)} for sc in scenarios
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def scenarios_from_json(text: str) -> list[Scenario]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict) or doc.get("schema") != SCENARIO_SCHEMA:
        raise ScenarioParseError(f"expected schema {SCENARIO_SCHEMA!r}", 1)
    out = []
    for entry in doc.get("scenarios", []):
        out.append(Scenario(tuple(float(p) for p in entry["probs"]), float(entry["p_T"]), str(entry.get("label", ""))))
    return out


def load_scenarios(path: str) -> list[Scenario]:
    """Read a scenario file, dispatching on extension (.json vs CSV)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        return scenarios_from_json(text)
    return scenarios_from_csv(text)

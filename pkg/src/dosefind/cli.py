"""Command-line interface.

Subcommands: decide, table, diff, simulate, scenarios (generate / convert /
builtin), serve. Exit status 0 on success, 2 on configuration errors (click's
usage-error convention). Everything stochastic honours --seed.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from .errors import DoseFindError
from .rules import decide_tally, decision_diagnostics
from .scenarios import (
    PaolettiConfig,
    RandomScenarioAxes,
    builtin_jiwang,
    builtin_jiwang_all,
    load_scenarios,
    paoletti_generate,
    random_scenario,
    scenarios_to_csv,
    scenarios_to_json,
)
from .simulate import TrialConfig, run_batch
from .tables import EmpiricalTable, decision_table, diff_grid, diff_grid_to_csv, table_to_csv
from .types import DESIGN_NAMES, DesignSpec, DoseTally, TargetSpec

# scenario-generation stream id, distinct from every trial stream
_SCENARIO_STREAM = 1 << 63


def _target(pt: float, eps: tuple[float, float]) -> TargetSpec:
    return TargetSpec(pt, eps[0], eps[1])


def _write(text: str, out: str | None):
    if out and out != "-":
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        click.echo(f"wrote {out}", err=True)
    else:
        sys.stdout.write(text)


def _scenario_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, _SCENARIO_STREAM]))


def _resolve_scenarios(spec: str, seed: int):
    """Scenario source: 'jiwang:<pt>' | 'jiwang:all' | 'paoletti:<pt>[:doses[:count]]'
    | 'random:<count>' | a CSV/JSON file path."""
    if spec.startswith("jiwang:"):
        arg = spec.split(":", 1)[1]
        return builtin_jiwang_all() if arg == "all" else builtin_jiwang(float(arg))
    if spec.startswith("paoletti:"):
        parts = spec.split(":")
        pt = float(parts[1])
        doses = int(parts[2]) if len(parts) > 2 else 6
        count = int(parts[3]) if len(parts) > 3 else 100
        rng = _scenario_rng(seed)
        cfg = PaolettiConfig(num_doses=doses, p_t=pt)
        out = []
        for i in range(count):
            sc = paoletti_generate(cfg, rng)
            out.append(type(sc)(sc.probs, sc.p_t, f"{sc.label}-{i + 1:04d}"))
        return out
    if spec.startswith("random:"):
        count = int(spec.split(":", 1)[1])
        rng = _scenario_rng(seed)
        axes = RandomScenarioAxes()
        out = []
        for i in range(count):
            sc = random_scenario(axes, rng)
            out.append(type(sc)(sc.probs, sc.p_t, f"{sc.label}-{i + 1:04d}"))
        return out
    return load_scenarios(spec)


class _Cli(click.Group):
    """Translate package errors into click's exit-code-2 usage errors."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except DoseFindError as exc:
            raise click.UsageError(str(exc)) from exc


@click.group(cls=_Cli)
def main():
    """Interval-design dose-finding toolkit."""


_design_opts = [
    click.option("--design", "design_name", required=True, type=str,
                 help=f"one of: {', '.join(DESIGN_NAMES)}"),
    click.option("--pt", required=True, type=float, help="target toxicity probability"),
    click.option("--eps", nargs=2, type=float, default=(0.05, 0.05), show_default=True,
                 help="equivalence-interval margins eps1 eps2"),
    click.option("--k1", type=float, default=None, help="TPI lower sd multiple"),
    click.option("--k2", type=float, default=None, help="TPI upper sd multiple"),
    click.option("--delta", type=float, default=None, help="CCD half-width override"),
    click.option("--prior", nargs=2, type=float, default=(1.0, 1.0), show_default=True,
                 help="beta prior pseudo-counts"),
]


def _with_design_opts(fn):
    for opt in reversed(_design_opts):
        fn = opt(fn)
    return fn


def _params(k1, k2, delta) -> dict:
    p = {}
    if k1 is not None:
        p["k1"] = k1
    if k2 is not None:
        p["k2"] = k2
    if delta is not None:
        p["delta"] = delta
    return p


@main.command()
@_with_design_opts
@click.option("--x", required=True, type=int, help="DLT count at the current dose")
@click.option("--n", required=True, type=int, help="patients treated at the current dose")
@click.option("--diagnostics", is_flag=True, help="also print UPM/boundary details as JSON")
def decide(design_name, pt, eps, k1, k2, delta, prior, x, n, diagnostics):
    """Print the design's decision (E/S/D/DU) for one tally."""
    spec = DesignSpec.from_name(design_name, _target(pt, eps), params=_params(k1, k2, delta),
                                prior_a=prior[0], prior_b=prior[1])
    tally = DoseTally(x, n)
    click.echo(decide_tally(spec, tally).letter)
    if diagnostics:
        click.echo(json.dumps(decision_diagnostics(spec, tally), indent=2))


@main.command()
@_with_design_opts
@click.option("--nmax", default=15, show_default=True, type=int, help="largest per-dose sample size")
@click.option("--out", default="-", show_default=True, help="output CSV path (- for stdout)")
def table(design_name, pt, eps, k1, k2, delta, prior, nmax, out):
    """Emit a fixed decision table as CSV."""
    spec = DesignSpec.from_name(design_name, _target(pt, eps), params=_params(k1, k2, delta),
                                prior_a=prior[0], prior_b=prior[1])
    _write(table_to_csv(decision_table(spec, nmax)), out)


@main.command()
@click.option("--design1", required=True, type=str)
@click.option("--design2", required=True, type=str)
@click.option("--pt", required=True, type=float)
@click.option("--eps1-values", default="0.005,0.01,0.015,0.02,0.025,0.03,0.035,0.04,0.045,0.05",
              show_default=True, help="comma-separated eps1 grid")
@click.option("--eps2-values", default="0.005,0.01,0.015,0.02,0.025,0.03,0.035,0.04,0.045,0.05",
              show_default=True, help="comma-separated eps2 grid")
@click.option("--nmax", default=51, show_default=True, type=int)
@click.option("--crm-scenarios", default=None, help="scenario source for the CRM empirical table")
@click.option("--crm-trials", default=2000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", default="-", show_default=True)
def diff(design1, design2, pt, eps1_values, eps2_values, nmax, crm_scenarios, crm_trials, seed, out):
    """Pairwise decision-score difference grid over the epsilon values (CSV)."""
    e1 = [float(v) for v in eps1_values.split(",") if v]
    e2 = [float(v) for v in eps2_values.split(",") if v]
    crm_table = None
    if "crm" in (design1.lower(), design2.lower()):
        source = crm_scenarios or f"jiwang:{pt}"
        scenarios = _resolve_scenarios(source, seed)
        spec = DesignSpec.from_name("crm", TargetSpec(pt))
        cfg = TrialConfig(sample_size=nmax, cohort_size=3, seed=seed)
        result = run_batch([spec], scenarios, cfg, crm_trials, collect_counts_n_max=nmax)
        crm_table = EmpiricalTable(nmax, result.decision_counts[0])
    grid = diff_grid(design1, design2, pt, e1, e2, nmax, crm_table=crm_table)
    _write(diff_grid_to_csv(grid, e1, e2), out)


@main.command()
@click.option("--designs", required=True, help=f"comma-separated names from: {', '.join(DESIGN_NAMES)}")
@click.option("--scenarios", "scenario_spec", required=True,
              help="jiwang:<pt>|jiwang:all|paoletti:<pt>[:d[:count]]|random:<count>|file path")
@click.option("--pt", default=None, type=float, help="target override (defaults to each scenario's)")
@click.option("--eps", nargs=2, type=float, default=(0.05, 0.05), show_default=True)
@click.option("--trials", default=1000, show_default=True, type=int)
@click.option("--sample-size", default=30, show_default=True, type=int)
@click.option("--cohort", default=3, show_default=True, type=int)
@click.option("--start-dose", default=1, show_default=True, type=int, help="1-based start dose")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--workers", default=1, show_default=True, type=int)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--out", default="-", show_default=True)
def simulate(designs, scenario_spec, pt, eps, trials, sample_size, cohort, start_dose, seed, workers, fmt, out):
    """Monte Carlo operating characteristics for designs x scenarios."""
    scenario_list = _resolve_scenarios(scenario_spec, seed)
    if not scenario_list:
        raise click.UsageError("no scenarios resolved")
    targets = {sc.p_t for sc in scenario_list} if pt is None else {pt}
    if len(targets) != 1:
        raise click.UsageError("scenarios mix several p_T values; pass --pt explicitly")
    target = _target(targets.pop(), eps)
    specs = [DesignSpec.from_name(name.strip(), target) for name in designs.split(",") if name.strip()]
    cfg = TrialConfig(sample_size, cohort, start_dose - 1, seed)
    result = run_batch(specs, scenario_list, cfg, trials, workers=workers)
    _write(result.to_csv() if fmt == "csv" else result.to_json(), out)


@main.group()
def scenarios():
    """Generate and convert scenario files."""


@scenarios.command()
@click.option("--kind", type=click.Choice(["paoletti", "random"]), required=True)
@click.option("--pt", default=0.2, show_default=True, type=float)
@click.option("--doses", default=6, show_default=True, type=int)
@click.option("--count", default=100, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--out", default="-", show_default=True)
def generate(kind, pt, doses, count, seed, fmt, out):
    """Draw scenarios from one of the generators."""
    source = f"{kind}:{pt}:{doses}:{count}" if kind == "paoletti" else f"random:{count}"
    generated = _resolve_scenarios(source, seed)
    _write(scenarios_to_csv(generated) if fmt == "csv" else scenarios_to_json(generated), out)


@scenarios.command()
@click.argument("src")
@click.argument("dst")
def convert(src, dst):
    """Convert a scenario file between CSV and JSON (by extension)."""
    loaded = load_scenarios(src)
    text = scenarios_to_json(loaded) if dst.endswith(".json") else scenarios_to_csv(loaded)
    _write(text, dst)


@scenarios.command()
@click.option("--pt", default="all", show_default=True, help="0.1, 0.2, 0.3 or all")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--out", default="-", show_default=True)
def builtin(pt, fmt, out):
    """Emit the built-in 42-scenario comparison set (or one target's 14)."""
    chosen = builtin_jiwang_all() if pt == "all" else builtin_jiwang(float(pt))
    _write(scenarios_to_csv(chosen) if fmt == "csv" else scenarios_to_json(chosen), out)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=None, type=int, help="defaults to $DOSEFIND_PORT or 8008")
@click.option("--store", default=None, help="JSON-lines session store path (or $DOSEFIND_STORE)")
def serve(host, port, store):
    """Start the HTTP service."""
    from .service import run_server

    run_server(host=host, port=port, store_path=store)


if __name__ == "__main__":
    main()

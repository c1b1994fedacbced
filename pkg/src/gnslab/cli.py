"""Command-line front end: ``gnslab run | validate | suite``.

Exit codes: 0 when every command or suite passes, 1 when a check fails,
2 for usage and parse errors.
"""

from __future__ import annotations

import json
import os
import sys

import click

from .errors import ParseError, UnresolvedReference
from .numeric import EXACT, FLOAT
from .scenario import REPORT_SCHEMA, load_file, run_scenario, scenario_from_data, validate_data
from .suites import DEFAULT_SEED, SUITES, TIME_LIMITS, run_suites


def _styled(text: str, ok: bool) -> str:
    if os.environ.get("NO_COLOR") is not None:
        return text
    return click.style(text, fg="green" if ok else "red")


def _write_report(report: dict, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")


def _usage_error(msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(2)


@click.group()
def main():
    """Finite-dimensional GNS constructions: scenarios and property suites."""


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="Write the JSON report here.")
@click.option("--backend", type=click.Choice([EXACT, FLOAT]), default=None, help="Override the scenario backend.")
@click.option("--tol", type=float, default=None, help="Set rank, psd and spectral tolerances uniformly.")
@click.option("--normalize", is_flag=True, help="Divide reported distributions by phi(1).")
def run(scenario_path, out, backend, tol, normalize):
    """Execute a scenario file and report one record per command."""
    try:
        data = load_file(scenario_path)
        diags = validate_data(data, backend)
        if diags:
            for d in diags:
                click.echo(f"[{d['code']}] {d['message']}", err=True)
            sys.exit(2)
        sc = scenario_from_data(data, backend, tol)
    except (ParseError, UnresolvedReference) as exc:
        _usage_error(str(exc))
    result = run_scenario(sc, normalize)
    result.report["scenario"] = os.path.basename(scenario_path)
    _write_report(result.report, out)
    for line in result.summary:
        click.echo(_styled(line, line.startswith("[PASS") or "0 failed, 0 errors" in line))
    sys.exit(result.exit_code)


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", type=click.Choice([EXACT, FLOAT]), default=None)
def validate(scenario_path, backend):
    """Static check of references, shapes and literal backends."""
    try:
        data = load_file(scenario_path)
    except ParseError as exc:
        _usage_error(str(exc))
    diags = validate_data(data, backend)
    for d in diags:
        click.echo(f"[{d['code']}] {d['message']}")
    if not diags:
        click.echo("ok: no diagnostics")
    sys.exit(2 if diags else 0)


@main.command()
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--only", multiple=True, type=click.Choice(list(SUITES)), help="Run only the named suite(s).")
@click.option("--out", type=click.Path(dir_okay=False))
def suite(seed, only, out):
    """Run the randomized property suites."""
    results = run_suites(seed, only)
    report = {
        "schema": REPORT_SCHEMA,
        "kind": "suite",
        "seed": seed,
        "suites": [r.payload() for r in results],
        "timing": {r.name: {"elapsed": r.elapsed, "limit": TIME_LIMITS[r.name]} for r in results},
    }
    _write_report(report, out)
    for r in results:
        counts = ", ".join(f"{k} {p}/{t}" for k, (p, t) in r.counts.items())
        click.echo(_styled(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {counts} ({r.elapsed:.2f}s)", r.passed))
        for f in r.failures:
            click.echo(f"    {f}")
    sys.exit(0 if all(r.passed for r in results) else 1)


if __name__ == "__main__":
    main()

"""Command line: ``run`` campaigns, ``oracle`` reference solves, ``dimsearch``.

Exit codes: 0 success, 1 infrastructure failure at runtime, 2 usage or
configuration error.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import click
import numpy as np
import yaml

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class ConfigError(click.UsageError):
    """Exits with status 2 like any other usage error."""


@dataclass
class CampaignConfig:
    problem: str = "hilbert"
    reviews: int = 2
    samples: int = 1
    jobs: int = 1
    backend: str = "scripted"
    fixtures: str | None = None
    out: str = "out"
    model: str | None = None
    roles: dict = field(default_factory=dict)
    sandbox: dict = field(default_factory=dict)
    budget: dict = field(default_factory=dict)
    attachments: list[str] | None = None
    min_interval: float = 0.0

    def validate(self) -> None:
        from .catalog import PROBLEM_IDS

        if self.problem not in PROBLEM_IDS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEM_IDS)}")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.reviews < 0:
            raise ConfigError("reviews must be >= 0")
        if self.backend not in ("scripted", "live"):
            raise ConfigError("backend must be 'scripted' or 'live'")
        if self.backend == "scripted":
            if not self.fixtures:
                raise ConfigError("the scripted backend needs --fixtures")
            if not Path(self.fixtures).is_file():
                raise ConfigError(f"fixture file not found: {self.fixtures}")
        for a in self.attachments or []:
            if not Path(a).is_file():
                raise ConfigError(f"attachment not found: {a}")


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(p.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    unknown = set(data) - set(CampaignConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return data


def _roles(cfg: CampaignConfig):
    from .gateway import ROLES, ModelDescriptor, RoleAssignment

    default = {"backend": cfg.backend, "model": cfg.model or cfg.backend}
    spec = {r: {**default, **(cfg.roles.get(r) or {})} for r in ROLES}
    try:
        return RoleAssignment.from_dict(spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad role assignment: {exc}") from exc


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Multi-role agent harness with reference oracles for scientific computing tasks."""


@main.command()
@click.option("--config", "config_path", type=str, default=None, help="YAML file mirroring the flags below.")
@click.option("--problem", default=None)
@click.option("--backend", type=click.Choice(["scripted", "live"]), default=None)
@click.option("--fixtures", default=None, help="JSON Lines fixture for the scripted backend.")
@click.option("--model", default=None, help="Model name for every role (live backend).")
@click.option("--samples", type=int, default=None)
@click.option("--reviews", type=int, default=None)
@click.option("--jobs", type=int, default=None, help="Samples run concurrently.")
@click.option("--out", default=None, help="Output directory.")
@click.option("--timeout", type=float, default=None, help="Sandbox wall-clock limit in seconds.")
@click.option("--prompt-budget", type=int, default=None)
@click.option("--output-budget", type=int, default=None)
def run(config_path, **flags):
    """Run a campaign of pipeline samples and write transcripts and reports."""
    from .catalog import get_problem
    from .gateway import Gateway, LiveBackend, ScriptedBackend
    from .pipeline import SandboxConfig, run_campaign, write_campaign
    from .tokens import TruncationPolicy

    data = load_config(config_path)
    for key in ("problem", "backend", "fixtures", "model", "samples", "reviews", "jobs", "out"):
        if flags[key] is not None:
            data[key] = flags[key]
    if flags["timeout"] is not None:
        data.setdefault("sandbox", {})["timeout"] = flags["timeout"]
    for key, name in (("prompt_budget", "prompt"), ("output_budget", "output")):
        if flags[key] is not None:
            data.setdefault("budget", {})[name] = flags[key]
    try:
        cfg = CampaignConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    roles = _roles(cfg)
    try:
        policy = TruncationPolicy(
            prompt_budget=int(cfg.budget.get("prompt", 4500)),
            output_budget=int(cfg.budget.get("output", 1500)),
            head_fraction=float(cfg.budget.get("head_fraction", 0.5)),
        )
        sandbox = SandboxConfig(
            wall_timeout=float(cfg.sandbox.get("timeout", 300.0)),
            max_output_bytes=int(cfg.sandbox.get("max_output_bytes", 1_000_000)),
            interpreter_cmd=cfg.sandbox.get("interpreter"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    backends = {}
    try:
        if cfg.backend == "scripted":
            backends["scripted"] = ScriptedBackend.from_jsonl(cfg.fixtures)
        else:
            backends["live"] = LiveBackend(min_interval=cfg.min_interval)
    except (ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(str(exc)) from exc
    problem = get_problem(cfg.problem, tuple(cfg.attachments) if cfg.attachments else None)
    out = Path(cfg.out)
    campaign = run_campaign(problem, roles, Gateway(backends, policy), cfg.reviews, cfg.samples,
                            cfg.jobs, out / "workspaces", sandbox, policy)
    paths = write_campaign(campaign, out)
    for st in campaign.report.stages:
        solving = "n/a" if st.solving_success_rate is None else f"{st.solving_success_rate:.3f}"
        click.echo(f"{st.stage}: execution success {st.execution_success_rate:.3f}, solving success {solving}")
    click.echo(f"report: {paths['report_json']}")
    if campaign.infrastructure_errors:
        for e in campaign.infrastructure_errors:
            click.echo(f"infrastructure error: {e}", err=True)
        sys.exit(EXIT_RUNTIME)


ORACLES = ("burgers", "sod", "poisson", "helmholtz", "lid-cavity", "unsteady-ns", "hilbert-sweep")


def _write_fields(fields, out: Path, prefix: str) -> list[str]:
    art = out / "artifacts"
    art.mkdir(parents=True, exist_ok=True)
    return [str(f.write_csv(art, prefix=f"{prefix}_")) for f in fields]


def _oracle_summary(name: str, opts: dict, out: Path) -> dict:
    if name == "sod":
        from .pde.sod import solve_sod_exact, solve_sod_hllc, star_state

        nx = opts["nx"] or 400
        t = opts["t"] if opts["t"] is not None else 0.2
        if opts["method"] == "hllc":
            rho, u, p = solve_sod_hllc(nx, t_end=t)
        else:
            rho, u, p = solve_sod_exact((np.arange(nx) + 0.5) / nx, t)
        star = star_state()
        files = _write_fields((rho, u, p), out, "sod")
        return {"files": files, "star": {k: getattr(star, k) for k in
                                         ("p_star", "u_star", "rho_star_left", "rho_star_right")},
                "waves": [star.left_wave, star.right_wave], "method": opts["method"], "nx": nx, "t": t}
    if name == "burgers":
        from .pde.burgers import initial_condition, solve_burgers

        f = solve_burgers(opts["nx"] or 512)
        files = _write_fields((f,), out, "burgers")
        return {"files": files, "nt": f.meta["nt"], "dt": f.meta["dt"],
                "max_boundary_abs": float(np.abs(f.values[:, [0, -1]]).max()),
                "initial_condition_error": float(np.abs(f.values[0] - initial_condition(f.x)).max())}
    if name in ("poisson", "helmholtz"):
        from .pde import elliptic
        from .pde.fields import NodeKind

        f = (elliptic.solve_poisson if name == "poisson" else elliptic.solve_helmholtz)(opts["n"] or 128)
        kind = f.meta["kind"]
        rect = elliptic.POISSON_RECT_VALUE if name == "poisson" else elliptic.HELMHOLTZ_RECT_VALUE
        hole = elliptic.POISSON_HOLE_VALUE if name == "poisson" else elliptic.HELMHOLTZ_HOLE_VALUE
        files = _write_fields((f,), out, name)
        return {"files": files, "residual": f.meta["residual"], "free_nodes": f.meta["n_free"],
                "rect_boundary_error": float(np.abs(f.values[kind == NodeKind.RECT_BOUNDARY] - rect).max()),
                "hole_boundary_error": float(np.abs(f.values[kind == NodeKind.CIRCLE_BOUNDARY] - hole).max()),
                "min": float(np.nanmin(f.values)), "max": float(np.nanmax(f.values))}
    if name == "lid-cavity":
        from .pde.navier_stokes import solve_lid_cavity

        r = solve_lid_cavity(opts["n"] or 64)
        files = _write_fields((r.u, r.v, r.p), out, "lid_cavity")
        return {"files": files, "iterations": len(r.residual_history) - 1,
                "final_residual": r.residual_history[-1], "max_divergence": r.max_divergence,
                "p_origin": float(r.p.values[0, 0])}
    if name == "unsteady-ns":
        from .pde.navier_stokes import solve_unsteady_ns

        r = solve_unsteady_ns(opts["n"] or 64)
        files = _write_fields((r.u, r.v, r.p), out, "unsteady_ns")
        inlet = np.sin(np.pi * r.u.y)
        return {"files": files, "steps": r.steps, "dt": r.dt, "max_divergence": r.max_divergence,
                "inlet_error": float(np.abs(r.u.values[:, 0] - inlet).max()),
                "outlet_pressure_max": float(np.abs(r.p.values[:, -1]).max()),
                "mean_gmres_iterations": float(np.mean(r.gmres_iterations))}
    if name == "hilbert-sweep":
        from .hilbert import sweep, sweep_csv

        cells = sweep()
        art = out / "artifacts"
        art.mkdir(parents=True, exist_ok=True)
        path = art / "hilbert_sweep.csv"
        path.write_text(sweep_csv(cells))
        counts: dict[str, int] = {}
        for c in cells:
            counts[c.status.value] = counts.get(c.status.value, 0) + 1
        return {"files": [str(path)], "status_counts": counts}
    raise AssertionError(name)


@main.command()
@click.argument("name", type=click.Choice(ORACLES))
@click.option("--nx", type=int, default=None, help="1D resolution (cells for sod, intervals for burgers).")
@click.option("--n", "n", type=int, default=None, help="2D resolution.")
@click.option("--t", "t", type=float, default=None, help="Output time for sod.")
@click.option("--method", type=click.Choice(["exact", "hllc"]), default="exact", help="Sod solution kind.")
@click.option("--out", default="out", help="Output directory.")
def oracle(name, out, **opts):
    """Run a reference solver, write its CSV files and print a self-check summary."""
    from .pde.fields import OracleError

    outdir = Path(out)
    try:
        summary = _oracle_summary(name, opts, outdir)
    except OracleError as exc:
        click.echo(f"oracle failed: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    rep = outdir / "reports"
    rep.mkdir(parents=True, exist_ok=True)
    (rep / f"oracle_{name}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


def _denominators(text: str) -> tuple[int, ...]:
    try:
        dens = tuple(int(d) for d in text.split(",") if d.strip())
    except ValueError as exc:
        raise click.BadParameter("use a comma-separated list of positive integers") from exc
    if not dens or any(d < 1 for d in dens):
        raise click.BadParameter("use a comma-separated list of positive integers")
    return dens


@main.command()
@click.argument("csv_path", required=False)
@click.option("--synthetic", is_flag=True, help="Use a generated 90-row dataset instead of a file.")
@click.option("--seed", type=int, default=7)
@click.option("--noise", type=float, default=0.05)
@click.option("--rows", type=int, default=90)
@click.option("--denominators", default="1,2,3", help="Allowed exponent denominators.")
@click.option("--bound", default="3", help="Largest allowed absolute exponent.")
@click.option("--top-k", type=int, default=5)
@click.option("--out", default="out", help="Output directory.")
def dimsearch(csv_path, synthetic, seed, noise, rows, denominators, bound, top_k, out):
    """Rank dimensionless groups of the keyhole inputs by log-log R^2."""
    from .dimensional import (KEYHOLE_EXPONENTS, DimensionalError, fit_curve_csv, generate_synthetic,
                              load_keyhole_csv, search_best)

    dens = _denominators(denominators)
    try:
        bnd = Fraction(bound)
    except (ValueError, ZeroDivisionError) as exc:
        raise click.BadParameter(f"bad bound {bound!r}") from exc
    if synthetic == bool(csv_path):
        raise click.UsageError("give either a CSV path or --synthetic")
    try:
        if synthetic:
            data = generate_synthetic(n_rows=rows, noise_level=noise, seed=seed)
        else:
            if not Path(csv_path).is_file():
                raise click.BadParameter(f"file not found: {csv_path}")
            data = load_keyhole_csv(csv_path)
        result = search_best(data, dens, bnd, top_k)
    except DimensionalError as exc:
        raise click.BadParameter(str(exc)) from exc
    outdir = Path(out) / "reports"
    outdir.mkdir(parents=True, exist_ok=True)
    if not result.ranked:
        raise click.BadParameter("no candidate group gives a usable fit on this dataset")
    best = result.ranked[0]
    payload = {
        "source": data.source,
        "rows": data.row_count,
        "constraints": result.constraints,
        "n_candidates": result.n_candidates,
        "keyhole_group_in_candidates": result.contains(KEYHOLE_EXPONENTS),
        "ranked": [c.as_dict() for c in result.ranked],
    }
    (outdir / "dimsearch.json").write_text(json.dumps(payload, indent=2) + "\n")
    (outdir / "dimsearch_fit.csv").write_text(fit_curve_csv(best, data))
    click.echo(f"candidates: {result.n_candidates} (denominators {list(dens)}, bound {bnd})")
    for k, c in enumerate(result.ranked, start=1):
        click.echo(f"{k}. R^2={c.r2:.6f} exponents {', '.join(c.exponent_strings())}")


if __name__ == "__main__":
    main()

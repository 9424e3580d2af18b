# app.py - command-line entry point: spectrum, charfun, covariance, simulate, verify, formulas

import logging
import math
from dataclasses import replace
from typing import Annotated, Optional

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler

from config import ExperimentConfig, load_config
from errors import ConfigError, SpectralError
from models.measures import MeasureKind
from services.covariance import CovarianceKernel, kolmogorov_bound_check
from services.processes import brownian_bridge_process, build_X, sample_paths
from services.spectral_measures import admissibility_constant, measure_to_dict, spectrum_to_dict
from services.verification import run_verification
from store import OutputStore
from views.formulas import FORMULAS, show_formulas
from views.report import render_frame, render_report
from views.tables import (
    charfun_table,
    convergence_table,
    ensemble_table,
    kernel_table,
    paths_table,
    report_table,
    spectrum_table,
    variance_table,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

app = typer.Typer(add_completion=False, help="Stationary-increment processes from spectral measures.")
console = Console()
logger = logging.getLogger("spectral")

ConfigOpt = Annotated[Optional[str], typer.Option("--config", help="YAML experiment file")]
OutOpt = Annotated[Optional[str], typer.Option("--out", help="output directory")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="ensemble seed (u64)")]
ThreadsOpt = Annotated[Optional[int], typer.Option("--threads", help="worker threads for sampling")]
VerboseOpt = Annotated[bool, typer.Option("--verbose", "-v", help="debug logging")]


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=False)],
        force=True,
    )


def _context(config: Optional[str], out: Optional[str], seed: Optional[int],
             threads: Optional[int], verbose: bool) -> tuple[ExperimentConfig, OutputStore]:
    _setup_logging(verbose)
    try:
        cfg = load_config(config)
        if out is not None:
            cfg = replace(cfg, output_dir=out)
        if seed is not None:
            if seed < 0:
                raise ConfigError("--seed must be a non-negative integer")
            cfg = replace(cfg, ensemble=replace(cfg.ensemble, seed=seed))
        if threads is not None:
            if threads < 1:
                raise ConfigError("--threads must be >= 1")
            cfg = replace(cfg, threads=threads)
        return cfg, OutputStore(cfg.output_dir)
    except ConfigError as exc:
        console.print(f"[red]config error:[/] {exc}")
        raise typer.Exit(EXIT_USAGE)


def _fail(exc: SpectralError) -> None:
    code = EXIT_USAGE if isinstance(exc, ConfigError) else EXIT_FAIL
    console.print(f"[red]{type(exc).__name__}:[/] {exc}")
    raise typer.Exit(code)


@app.command()
def spectrum(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None,
             threads: ThreadsOpt = None, verbose: VerboseOpt = False):
    """Write spectrum.csv (n, lambda)."""
    cfg, store = _context(config, out, seed, threads, verbose)
    try:
        spec = cfg.build_spectrum()
        frame = spectrum_table(spec)
        store.write_table("spectrum.csv", frame)
        store.write_summary({
            "command": "spectrum",
            "spectrum": spectrum_to_dict(spec),
            "N": spec.count,
            "multiples": [str(q) for q in spec.multiples] if spec.multiples is not None else None,
            "tail_mass_bound": spec.tail_mass_bound,
        })
    except SpectralError as exc:
        _fail(exc)
    render_frame(console, frame, "spectrum")


@app.command()
def charfun(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None,
            threads: ThreadsOpt = None, verbose: VerboseOpt = False):
    """Write charfun.csv (t, sigma_hat, err) on the charfun grid."""
    cfg, store = _context(config, out, seed, threads, verbose)
    g = cfg.charfun
    try:
        measure = cfg.build_measure()
        frame = charfun_table(measure, np.linspace(g.t_min, g.t_max, g.points), cfg.budget)
        store.write_table("charfun.csv", frame)
        store.write_summary({
            "command": "charfun",
            "measure": measure_to_dict(measure),
            "max_err": float(frame["err"].max()),
        })
    except SpectralError as exc:
        _fail(exc)
    render_frame(console, frame, "charfun")


@app.command()
def covariance(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None,
               threads: ThreadsOpt = None, verbose: VerboseOpt = False,
               constant: Annotated[float, typer.Option("--constant", help="C in r(t) <= C t")] = 1.0):
    """Write variance.csv (t, r, r_prime) and kernel.csv (t, s, K) on the time grid."""
    cfg, store = _context(config, out, seed, threads, verbose)
    try:
        measure = cfg.build_measure()
        kernel = CovarianceKernel(measure, cfg.budget)
        times = cfg.grid.times()
        var = variance_table(kernel, times)
        store.write_table("variance.csv", var)
        store.write_table("kernel.csv", kernel_table(kernel, times))
        kolmogorov = kolmogorov_bound_check(measure, constant, cfg.budget, kernel=kernel)
        store.write_summary({
            "command": "covariance",
            "measure": measure_to_dict(measure),
            "route": kernel.route,
            "admissibility_constant": admissibility_constant(measure, cfg.budget),
            "kolmogorov": kolmogorov.to_dict(),
        })
    except SpectralError as exc:
        _fail(exc)
    render_frame(console, var, "variance")


@app.command()
def simulate(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None,
             threads: ThreadsOpt = None, verbose: VerboseOpt = False,
             paths: Annotated[int, typer.Option("--paths", help="sample paths written to paths.csv")] = 8):
    """Sample the ensemble; write paths.csv and ensemble.csv."""
    cfg, store = _context(config, out, seed, threads, verbose)
    try:
        measure = cfg.build_measure()
        times = cfg.grid.times()
        if cfg.measure.get("kind") == "bridge":
            path = brownian_bridge_process(measure.points.size, times).X
        elif measure.kind is MeasureKind.ATOMIC:
            path = build_X(measure, None, times, cfg.budget)
        else:
            path = build_X(measure, cfg.build_spectrum(), times, cfg.budget)
        ensemble = sample_paths(path, cfg.ensemble.M, cfg.ensemble.seed, cfg.threads)
        r = path.variances()
        summary = ensemble_table(ensemble, r)
        store.write_table("paths.csv", paths_table(ensemble, paths))
        store.write_table("ensemble.csv", summary)
        var = ensemble.var()
        se_var = np.sqrt(2.0 / max(ensemble.M - 1, 1)) * r
        live = r > 0
        store.write_summary({
            "command": "simulate",
            "measure": measure_to_dict(measure),
            "M": ensemble.M,
            "seed": ensemble.seed,
            "N": path.N,
            "max_deficit": float(np.max(path.deficits)) if path.deficits.size else math.nan,
            "max_var_z": float(np.max(np.abs(var - r)[live] / se_var[live])) if np.any(live) else 0.0,
        })
    except SpectralError as exc:
        _fail(exc)
    render_frame(console, summary, "ensemble")


@app.command()
def verify(config: ConfigOpt = None, out: OutOpt = None, seed: SeedOpt = None,
           threads: ThreadsOpt = None, verbose: VerboseOpt = False,
           check: Annotated[Optional[list[str]], typer.Option("--check", help="run only these checks")] = None):
    """Run the invariant suite; exit 0 iff every check passes."""
    cfg, store = _context(config, out, seed, threads, verbose)
    try:
        report = run_verification(cfg, check or None)
    except KeyError as exc:
        console.print(f"[red]unknown check:[/] {exc}")
        raise typer.Exit(EXIT_USAGE)
    store.write_table("report.csv", report_table(report))
    wick = report.get("wick_ito")
    if wick is not None and wick.extra.get("table"):
        store.write_table("convergence.csv", convergence_table(wick.extra["table"]))
    store.write_summary({"command": "verify", **report.to_dict()})
    render_report(console, report)
    raise typer.Exit(EXIT_PASS if report.passed else EXIT_FAIL)


@app.command()
def formulas(key: Annotated[Optional[str], typer.Argument(help=f"one of: {', '.join(FORMULAS)}")] = None):
    """Print the identities each command computes."""
    show_formulas(console, key)


if __name__ == "__main__":
    app()

# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Command line surface: ``wavecraft spectrum | verify | solve | sample``."""

import functools
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from wavecraft.app.wavecraft_app import SolveReport, VerifyReport, WavecraftApp
from wavecraft.config import load_config
from wavecraft.errors import SuiteFailure, WavecraftError
from wavecraft.spectral.spectrum import SpectrumTable
from wavecraft.utils.logger import configure_logging, logger

console = Console()
err_console = Console(stderr=True)


def _common(command: Callable[..., None]) -> Callable[..., None]:
    """Options shared by every subcommand."""

    @click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), required=True, help="TOML run configuration.")
    @click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=Path("out"), show_default=True, help="Artifact directory.")
    @click.option("--seed", type=click.IntRange(min=0), default=None, help="Override search.seed.")
    @click.option("--truncation-scale", type=float, default=None, help="Multiply j_max, k_max, nt and nr.")
    @click.option("--verbose", is_flag=True, help="Log sweep-level telemetry to the console.")
    @functools.wraps(command)
    def wrapper(config_path: Path, out_dir: Path, seed: int | None, truncation_scale: float | None, verbose: bool, **kwargs: Any) -> None:  # noqa: ANN401
        try:
            configure_logging(out_dir, verbose)
            config = load_config(config_path).with_overrides(seed=seed, truncation_scale=truncation_scale)
            command(WavecraftApp(config, out_dir), **kwargs)
        except WavecraftError as exc:
            logger.error("{}: {}", type(exc).__name__, exc)
            err_console.print(f"[bold red]error[/] ({type(exc).__name__}): {escape(str(exc))}", soft_wrap=True)
            sys.exit(exc.exit_code)

    return wrapper


@click.group()
@click.version_option(package_name="wavecraft")
def main() -> None:
    """Spectral-Galerkin search for radially symmetric periodic waves in an n-ball."""


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def _summary_table(table: SpectrumTable) -> Table:
    out = Table(title="Spectrum")
    out.add_column("quantity")
    out.add_column("value", justify="right")
    c, p = table.constants, table.profile
    rows = [
        ("8R/T", f"{p.a}/{p.b}"),
        ("resonant case", str(p.resonant_case).lower()),
        ("lambda0", f"{p.lambda0:.10g}"),
        ("delta", f"{c.delta:.10g}"),
        ("beta-", f"{c.beta_minus:.10g}"),
        ("beta+", f"{c.beta_plus:.10g}"),
        ("mu0", f"{c.mu0:.10g}"),
        ("gamma1", f"{c.gamma1:.10g}"),
        ("gamma2", f"{c.gamma2:.10g}"),
        ("gamma", f"{c.gamma:.10g}"),
    ]
    rows += [(f"dim {name}", str(dim)) for name, dim in table.dims().items()]
    for name, value in rows:
        out.add_row(name, value)
    return out


def _suite_table(report: VerifyReport) -> Table:
    out = Table(title="Verification suites")
    out.add_column("suite")
    out.add_column("result")
    for suite in report.suites:
        out.add_row(suite.name, "[green]pass[/]" if suite.ok else "[red]FAIL[/]")
    return out


def _solutions_table(report: SolveReport) -> Table:
    out = Table(title="Critical points of the reduced functional")
    for name in ("id", "kind", "phi_hat", "|grad|", "weak residual", "decays", "trivial", "scan", "status"):
        out.add_column(name, justify="right" if name in {"phi_hat", "|grad|", "weak residual"} else "left")
    for index, r in enumerate(report.solutions):
        kind = f"{r.kind}{'+' if r.side > 0 else '-' if r.side < 0 else ''}"
        scan = "-" if r.scan_match is None else ("match" if r.scan_match else "[red]miss[/]")
        weak = "-" if r.weak_residual is None else f"{r.weak_residual:.3e}"
        decays = "-" if r.residual_decays is None else str(r.residual_decays).lower()
        out.add_row(str(index), kind, f"{r.phi_hat:.10g}", f"{r.reduced_grad_norm:.3e}", weak, decays, str(r.trivial).lower(), scan, r.status)
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@main.command()
@_common
def spectrum(app: WavecraftApp) -> None:
    """Enumerate the spectrum; write spectrum.csv and arithmetic.json."""
    table = app.spectrum()
    console.print(_summary_table(table))


@main.command()
@_common
def verify(app: WavecraftApp) -> None:
    """Run every verification suite; write verify.json (exit 1 on any failure)."""
    report = app.verify()
    console.print(_suite_table(report))
    if not report.ok:
        raise SuiteFailure(report.failed)


@main.command()
@_common
def solve(app: WavecraftApp) -> None:
    """Find and certify the critical points; write solutions.json, landscape.csv and samples."""
    report = app.solve()
    console.print(_solutions_table(report))
    if report.chain is not None:
        chain = report.chain
        console.print(
            f"sigma1={chain.sigma1:.10g}  tau={chain.tau}  c+={chain.c_plus}  sigma2={chain.sigma2:.10g}  "
            f"ordering={'holds' if chain.holds else 'VIOLATED'}  strict c+<sigma2={str(chain.strict_upper).lower()}"
        )
    console.print(f"distinct critical points: {report.distinct_count} ({report.nontrivial_count} nontrivial)")
    if report.unconverged:
        err_console.print(f"[yellow]unconverged[/]: {len(report.unconverged)} point(s) left out of the solutions", soft_wrap=True)
    for key, value in sorted(report.status.items()):
        if value != "ok":
            err_console.print(f"[yellow]{key}[/]: {escape(value)}", soft_wrap=True)


@main.command()
@_common
@click.option("--solution-id", type=int, required=True, help="Id from solutions.json.")
def sample(app: WavecraftApp, solution_id: int) -> None:
    """Write sample_<id>.csv for one solution of the last solve in --out."""
    path = app.sample(solution_id)
    console.print(f"wrote {path}")


if __name__ == "__main__":
    main()

# kinkstats/cli/commands.py
import functools
import logging
from pathlib import Path

import click

from .. import configure_logging
from ..errors import KinkStatsError, UnsupportedOrderError
from ..models import Method
from ..services.ising_modes import momentum_grid
from ..services.mode_dynamics import excitation_probability_lz, quench
from ..services.scaling import (
    compare_distribution, fit_power_law, sweep_sizes, theory_columns,
)
from ..services.theory import (
    MAX_RATIO_ORDER, adiabatic_onset, binomial_model, erf_corrected_cumulants,
    le_cam_continuum_bound, normal_approximation, quench_regime, scaling_cumulant_ratio,
    scaling_cumulant_ratio_expr, scaling_theory,
)
from ..utils.cache import RowCache
from ..utils.tables import (
    read_sweep_csv, write_distribution_csv, write_json, write_modes_csv,
    write_sweep_csv,
)
from .settings import resolve_run_config

log = logging.getLogger(__name__)


def _tag(value):
    return f"{value:g}"


def handle_errors(func):
    """Library errors become a one-line message on stderr and exit status 1."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (KinkStatsError, OSError) as e:
            log.debug("Command failed", exc_info=True)
            raise click.ClickException(str(e))
    return wrapper


def chain_options(func):
    options = [
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                     help="KEY=VALUE file; flags override it."),
        click.option("--n", help="Chain size(s), comma separated."),
        click.option("--j", type=float, help="Coupling J."),
        click.option("--hbar", type=float),
        click.option("--tau", help="Quench time(s), comma separated."),
        click.option("--tau-grid", help="Log-spaced grid lo:hi:points."),
        click.option("--out", help="Output directory."),
        click.option("--log-level"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def dynamics_options(func):
    options = [
        click.option("--method", type=click.Choice([m.value for m in Method])),
        click.option("--pairing", type=click.Choice(["independent", "paired"])),
        click.option("--abs-tol", type=float),
        click.option("--rel-tol", type=float),
        click.option("--start-factor", type=float, help="Start the ramp at t = -a tau_Q."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _resolve(ctx, config_file, **flags):
    run = resolve_run_config(ctx.obj, config_file, **flags)
    configure_logging(run.log_level)
    Path(run.out).mkdir(parents=True, exist_ok=True)
    return run


# ---------------------------------------------------------
# --- DISTRIBUTION ---
# ---------------------------------------------------------
@click.command()
@chain_options
@dynamics_options
@click.pass_context
@handle_errors
def distribution(ctx, config_file, **flags):
    """Exact P(n) against the normal approximation."""
    run = _resolve(ctx, config_file, **flags)
    echo = run.as_dict()
    for N in run.n:
        params = run.chain(N)
        for tau_Q in run.taus():
            comparison = compare_distribution(
                params, tau_Q, run.method, run.solver(), run.pairing, run.start_factor,
            )
            stem = Path(run.out) / f"distribution_N{N}_tau{_tag(tau_Q)}"
            write_distribution_csv(stem.with_suffix(".csv"), comparison, echo)
            write_json(stem.with_suffix(".json"), comparison.summary(), echo)
            flags_text = f" [{'; '.join(comparison.flags)}]" if comparison.flags else ""
            click.echo(
                f"N={N} tau_Q={_tag(tau_Q)}: kappa1={comparison.kappa1:.4f} "
                f"kappa2={comparison.kappa2:.4f} TV={comparison.tv_distance:.4f}{flags_text}"
            )


# ---------------------------------------------------------
# --- SWEEP ---
# ---------------------------------------------------------
@click.command("sweep")
@chain_options
@dynamics_options
@click.option("--qmax", type=int)
@click.option("--cache-dir")
@click.option("--workers", type=int)
@click.pass_context
@handle_errors
def sweep_command(ctx, config_file, **flags):
    """Cumulants kappa_1..kappa_qmax over a tau_Q grid, cached per row."""
    run = _resolve(ctx, config_file, **flags)
    echo = run.as_dict()
    cache = RowCache(run.cache_dir)

    table = sweep_sizes(
        run.n, run.taus(), run.method, run.qmax, J=run.j, hbar=run.hbar,
        solver=run.solver(), pairing=run.pairing, start_factor=run.start_factor,
        cache=cache, workers=run.workers,
    )
    out = Path(run.out)
    if len(table):
        write_sweep_csv(out / "sweep.csv", table, echo)
    write_json(out / "sweep.json", {
        "theory": theory_columns(table, run.j, run.hbar),
        "failures": table.failures,
        "cache": {"hits": cache.hits, "misses": cache.misses},
    }, echo)
    click.echo(f"{len(table)} rows ({cache.hits} cached), {len(table.failures)} failed")

    if table.failures:
        raise click.ClickException(f"{len(table.failures)} sweep rows failed; see sweep.json")


# ---------------------------------------------------------
# --- FIT ---
# ---------------------------------------------------------
@click.command()
@click.argument("table_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--q", "qs", type=int, multiple=True, help="Cumulant order (repeatable).")
@click.option("--tau-range", help="Fit window lo:hi.")
@click.option("--n", "N", type=int, help="Chain size, when the table holds several.")
@click.option("--method", type=click.Choice([m.value for m in Method]))
@click.option("--out")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--log-level")
@click.pass_context
@handle_errors
def fit(ctx, table_path, qs, N, method, config_file, **flags):
    """Power-law fits kappa_q ~ tau_Q^(-alpha) of a sweep CSV."""
    run = _resolve(ctx, config_file, **flags)
    table, source_header = read_sweep_csv(table_path)
    echo = {**run.as_dict(), "table": str(table_path), "table_header": source_header}

    for q in qs or range(1, table.qmax + 1):
        result = fit_power_law(table, q, run.tau_range, N=N, method=method)
        write_json(Path(run.out) / f"fit_q{q}.json", result.as_dict(), echo)
        click.echo(f"q={q}: alpha={result.alpha:.4f} r2={result.r_squared:.4f} ({result.n_points} points)")


# ---------------------------------------------------------
# --- THEORY ---
# ---------------------------------------------------------
def _theory_entry(params, tau_Q, qs):
    theory = scaling_theory(params, tau_Q)
    kappa1, kappa2 = erf_corrected_cumulants(params, tau_Q)
    normal = normal_approximation(params.N, theory.d)
    binomial = binomial_model(params.N, theory.d)
    return {
        **params.as_dict(),
        "tau_Q": tau_Q,
        "d": theory.d,
        "mean": theory.mean,
        "kappa1_erf": kappa1,
        "kappa2_erf": kappa2,
        "ratios": {str(q): scaling_cumulant_ratio(q) for q in qs},
        "ratio_expressions": {str(q): str(scaling_cumulant_ratio_expr(q)) for q in qs},
        "adiabatic_onset": adiabatic_onset(params),
        "regime": quench_regime(params, tau_Q).value,
        "normal": {"mean": normal.mean, "variance": normal.variance},
        "binomial": binomial._asdict(),
        "le_cam_bound": le_cam_continuum_bound(params, tau_Q),
    }


@click.command()
@chain_options
@click.option("--q", "qs", type=int, multiple=True, help=f"Ratio order 1..{MAX_RATIO_ORDER} (repeatable).")
@click.pass_context
@handle_errors
def theory(ctx, config_file, qs, **flags):
    """Closed-form scaling-limit values."""
    run = _resolve(ctx, config_file, **flags)
    qs = list(qs) or list(range(1, MAX_RATIO_ORDER + 1))
    bad = [q for q in qs if not 1 <= q <= MAX_RATIO_ORDER]
    if bad:
        raise UnsupportedOrderError(f"Scaling ratios exist for q = 1..{MAX_RATIO_ORDER}, got {bad}")

    entries = [_theory_entry(run.chain(N), tau_Q, qs) for N in run.n for tau_Q in run.taus()]
    write_json(Path(run.out) / "theory.json", {"entries": entries}, run.as_dict())

    for entry in entries:
        click.echo(
            f"N={entry['N']} tau_Q={_tag(entry['tau_Q'])}: d={entry['d']:.4g} "
            f"kappa1={entry['kappa1_erf']:.4f} kappa2={entry['kappa2_erf']:.4f} "
            f"onset={entry['adiabatic_onset']:.1f} ({entry['regime']})"
        )
    click.echo("  ".join(f"k{q}/k1={scaling_cumulant_ratio(q):.4g}" for q in qs))


# ---------------------------------------------------------
# --- MODES ---
# ---------------------------------------------------------
@click.command()
@chain_options
@dynamics_options
@click.pass_context
@handle_errors
def modes(ctx, config_file, **flags):
    """Per-mode excitation probabilities p_k."""
    run = _resolve(ctx, config_file, **flags)
    echo = run.as_dict()
    for N in run.n:
        params = run.chain(N)
        momenta = momentum_grid(params).momenta
        for tau_Q in run.taus():
            p_lz = excitation_probability_lz(momenta, params, tau_Q)
            p_ode = None
            if run.method is Method.ODE:
                p_ode = quench(params, tau_Q, Method.ODE, run.solver(), run.start_factor).p
            path = Path(run.out) / f"modes_N{N}_tau{_tag(tau_Q)}.csv"
            write_modes_csv(path, momenta, p_lz, echo, p_ode)
            click.echo(f"Wrote {path}")


COMMANDS = (distribution, sweep_command, fit, theory, modes)


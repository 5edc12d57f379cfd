"""Command-line front end: transfer curves, matrix products, cost reports, calibration."""

from __future__ import annotations

import contextlib
import os
import secrets
import sys

import click
import numpy as np

from .accounting import EXCLUDED_TERMS, crossbar_compare, write_sweep_csv
from .config import ConfigError, SimulationConfig, dump_config, load_config
from .engine import matmul, read_matrix
from .multiplier import (
    Fidelity,
    LinearFitError,
    fit_linear_region,
    linearized_constants,
    transfer_curve,
)


def _fail(msg: str) -> None:
    raise click.ClickException(msg)


def _config(path) -> SimulationConfig:
    try:
        return load_config(path)
    except ConfigError as exc:
        _fail(str(exc))


def _seed(seed):
    return (secrets.randbits(32), True) if seed is None else (seed, False)


def _kv(d: dict, fh) -> None:
    for k, v in d.items():
        fh.write(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n")


def _open_out(path):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="")


config_option = click.option(
    "--config", "config_path", type=click.Path(dir_okay=False), default=None,
    help="Flat 'section.key_unit = value' config file (defaults to built-in values).")
threads_option = click.option(
    "--threads", type=click.IntRange(min=1), default=None,
    help="Worker threads (default: available CPUs).")


@click.group()
def main():
    """Spin-based analog matrix multiplier simulator."""


@main.command("transfer-curve")
@config_option
@click.option("--source", type=click.Choice(["analytic", "sllg"]), default="analytic",
              show_default=True, help="Closed-form minimum or stochastic LLG ensembles.")
@click.option("--out", type=click.Path(dir_okay=False), default="-", show_default=True,
              help="CSV path: V_G (V), G (S), theta and its spread (deg).")
@click.option("--seed", type=int, default=None,
              help="RNG seed for --source sllg; generated and recorded when omitted.")
@threads_option
def transfer_curve_cmd(config_path, source, out, seed, threads):
    """Sample G(V_G), fit its linear region and print kappa, delta and the window."""
    cfg = _config(config_path)
    params, pair = cfg.magnet_params(), cfg.pair()
    seed, auto = _seed(seed) if source == "sllg" else (None, False)
    solver = cfg.solver(seed or 0, threads or os.cpu_count() or 1) if source == "sllg" else None
    curve = transfer_curve(cfg.gate_grid(), params, pair, source, solver)
    header = {"source": source}
    if seed is not None:
        header["seed"] = seed
        header["seed_generated"] = auto
    with _open_out(out) as fh:
        curve.write_csv(fh, header)
    try:
        fit = fit_linear_region(curve)
    except LinearFitError as exc:
        _fail(f"linear fit failed: {exc}")
    k_lin, d_lin = linearized_constants(params, pair)
    summary = dict(header)
    summary.update(fit.summary())
    summary["kappa_linearized_per_kohm_v"] = k_lin * 1e3
    summary["delta_linearized_v"] = d_lin
    _kv(summary, sys.stderr if out in (None, "-") else sys.stdout)


@main.command("matmul")
@config_option
@click.argument("a_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("b_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["sequential", "parallel-array"]), default="sequential",
              show_default=True, help="One reused unit, or one unit per output element.")
@click.option("--fidelity", type=click.Choice([f.value for f in Fidelity]),
              default=Fidelity.COMPENSATED.value, show_default=True,
              help="Multiplier model: ideal product law, raw current, or offset-compensated.")
@click.option("--noise/--no-noise", default=True, show_default=True,
              help="Stochastic wall displacement per pulse.")
@click.option("--seed", type=int, multiple=True,
              help="RNG seed; repeat for a Monte Carlo sweep. Generated and recorded when omitted.")
@click.option("--out", type=click.Path(dir_okay=False), default="-", show_default=True,
              help="Per-element CSV (single seed) or per-seed statistics CSV (several seeds).")
@threads_option
def matmul_cmd(config_path, a_file, b_file, mode, fidelity, noise, seed, out, threads):
    """Multiply two integer matrices (files: first line N, then N rows)."""
    cfg = _config(config_path)
    try:
        a, b = read_matrix(a_file), read_matrix(b_file)
        engine = cfg.engine()
    except ValueError as exc:
        _fail(str(exc))
    auto = not seed
    seeds = list(seed) or [secrets.randbits(32)]
    reports = []
    for s in seeds:
        try:
            reports.append(matmul(a, b, engine, mode, fidelity, noise, s, threads or 1))
        except ValueError as exc:
            _fail(str(exc))
    with _open_out(out) as fh:
        if len(reports) == 1:
            fh.write(f"# seed = {seeds[0]}\n# seed_generated = {auto}\n")
            reports[0].write_csv(fh)
        else:
            fh.write("seed,error_rate,max_abs_error,mean_bias,mean_abs_error\n")
            for r in reports:
                fh.write(f"{r.seed},{r.error_rate!r},{float(r.abs_error.max())!r},"
                         f"{float(np.mean(r.decoded - r.oracle))!r},{float(r.abs_error.mean())!r}\n")
    summary = reports[0].summary() if len(reports) == 1 else {
        "seeds": len(reports),
        "mean_error_rate": float(np.mean([r.error_rate for r in reports])),
        "mean_abs_error": float(np.mean([r.abs_error.mean() for r in reports])),
        "energy_j": reports[0].energy_j,
        "energy_worst_case_j": reports[0].energy_worst_j,
        "latency_s": reports[0].latency_s,
        "devices": reports[0].devices,
    }
    _kv(summary, sys.stderr if out in (None, "-") else sys.stdout)


def _parse_sweep(text: str) -> list[int]:
    text = text.strip()
    if text.startswith("N="):
        text = text[2:]
    if not text:
        return []
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = (int(x) for x in part.split(":"))
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if any(n < 1 for n in out):
        raise ValueError("sweep sizes must be >= 1")
    return out


@main.command("report")
@config_option
@click.option("--sweep", default="N=1,2,4,8,10,16,17", show_default=True,
              help="Matrix sizes: comma list and lo:hi ranges, e.g. N=1:4,10,1000. Empty for none.")
@click.option("--n-max", type=click.IntRange(min=1), default=None,
              help="Strip capacity in full-scale pulses; sets R = resistivity * N_max * step / area.")
@click.option("--xi", type=float, default=None, help="Crossbar per-device energy, aJ.")
@click.option("--out", type=click.Path(dir_okay=False), default="-", show_default=True,
              help="Sweep CSV (energies in J, latencies in s).")
def report_cmd(config_path, sweep, n_max, xi, out):
    """Energy, latency and device counts against a crossbar, swept over N."""
    cfg = _config(config_path)
    updates = {}
    if n_max is not None:
        updates["strip__n_max_count"] = n_max
    if xi is not None:
        updates["accounting__xi_aj"] = xi
    cfg = cfg.replace(**updates)
    try:
        sizes = _parse_sweep(sweep)
        cost = cfg.cost()
    except ValueError as exc:
        _fail(str(exc))
    nm = cfg["strip.n_max_count"]
    rows = [crossbar_compare(n, nm, cost) for n in sizes]
    with _open_out(out) as fh:
        write_sweep_csv(rows, fh)
    summary = {
        "n_max": nm,
        "strip_resistance_ohm": cost.strip_resistance,
        "i_max_a": cost.i_max,
        "energy_per_mac_worst_j": cost.worst_mac_energy,
        "breakeven_xi_j": cost.worst_mac_energy,
        "mac_latency_s": cost.mac_latency,
        "excluded": "; ".join(EXCLUDED_TERMS),
    }
    _kv(summary, sys.stderr if out in (None, "-") else sys.stdout)


@main.command("calibrate")
@config_option
@click.option("--out", type=click.Path(dir_okay=False), default="-", show_default=True,
              help="Calibration block, mergeable into the config file.")
def calibrate_cmd(config_path, out):
    """Fit the transfer curve, the mobility line and the decode scales."""
    cfg = _config(config_path)
    params, pair = cfg.magnet_params(), cfg.pair()
    try:
        # The region fit must succeed; the operating point is pinned at gamma - Gamma.
        fit_linear_region(transfer_curve(cfg.gate_grid(), params, pair, "analytic"))
        engine = cfg.engine()
        s_ideal = engine.decode_scale(Fidelity.IDEAL)
        s_comp = engine.decode_scale(Fidelity.COMPENSATED)
    except (LinearFitError, ValueError) as exc:
        _fail(str(exc))
    block = cfg.replace(
        calibration__kappa_s_per_v=engine.multiplier.fit.kappa,
        calibration__delta_v=engine.multiplier.fit.delta,
        calibration__eta_m3_per_a=engine.mobility.eta,
        calibration__decode_scale_ideal_unitless=s_ideal,
        calibration__decode_scale_compensated_unitless=s_comp,
    )
    keys = [k for k in block.values if k.startswith("calibration.")]
    with _open_out(out) as fh:
        fh.write(dump_config(block, keys))


if __name__ == "__main__":
    main()

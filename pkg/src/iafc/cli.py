"""Command-line entry points: one subcommand per experiment family.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
Outputs are CSV tables whose headers carry the config hash and every
parameter in effect; identical configs reproduce byte-identical files
when the timestamp is suppressed (--no-timestamp).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import config as cfg
from . import experiments as ex
from . import io as iio
from .errors import ConfigError, IafcError

GHZ = 2.0 * np.pi * 1e9


def _load(config_path: str) -> cfg.RunConfig:
    text = Path(config_path).read_text()
    return cfg.parse_config(text)


def _meta(config: cfg.RunConfig, seed, threads) -> dict:
    meta = {"config_sha256": cfg.config_hash(config)}
    meta.update(config.flat())
    if seed is not None:
        meta["seed"] = seed
    meta["threads"] = threads
    return meta


def _common(func):
    func = click.option("--config", "config_path", required=True,
                        type=click.Path(exists=True),
                        help="YAML run configuration.")(func)
    func = click.option("--out", "out_dir", default=".",
                        type=click.Path(file_okay=False),
                        help="Output directory.")(func)
    func = click.option("--threads", default=1, show_default=True,
                        help="Worker threads for independent sweep rows.")(func)
    func = click.option("--no-timestamp", is_flag=True,
                        help="Omit the timestamp header line "
                             "(byte-reproducible output).")(func)
    func = click.option("--seed", default=None, type=int,
                        help="Reserved; all computations are deterministic.")(func)
    func = click.option("--plot", is_flag=True,
                        help="Also write SVG/PNG plots next to the CSVs.")(func)
    return func


@click.group()
def main():
    """Frequency-comb photon-echo memory simulator."""


def _guard(fn):
    try:
        fn()
    except ConfigError as exc:
        for problem in exc.problems:
            click.echo(f"config error: {problem}", err=True)
        sys.exit(2)
    except IafcError as exc:
        click.echo(f"numerical error: {exc}", err=True)
        sys.exit(3)


@main.command()
@_common
def echo(config_path, out_dir, threads, no_timestamp, seed, plot):
    """Scalar comb storage: time trace and echo summary."""
    def run():
        config = _load(config_path)
        medium = cfg.build_medium(config)
        width = config.get("pulse", "width_GHz") * GHZ
        mean = config.get("pulse", "mean_GHz") * GHZ
        from .storage import optimize_scalar_storage, scalar_report
        if width > 0:
            report = scalar_report(medium, width, mean)
            best = dict(width_b=width, mean_offset=mean, weight_scale=1.0)
        else:
            result, report = optimize_scalar_storage(medium)
            best = result.best
        meta = _meta(config, seed, threads)
        meta.update(eta=report.efficiency, fidelity=report.fidelity,
                    echo_time_ns=report.echo_time * 1e9)
        out = Path(out_dir)
        base = config.get("output", "basename")
        from .spectral import design_grid, gaussian_spectrum, propagate, to_time
        grid = design_grid(medium.comb, bandwidth=best["width_b"],
                           resolve_factor=1.5, span_factor=2.5)
        pin = gaussian_spectrum(grid, best["width_b"],
                                best.get("mean_offset", 0.0))
        trace = to_time(propagate(pin, medium))
        iio.write_time_trace(out / f"{base}_trace.csv", trace, meta,
                             timestamp=not no_timestamp)
        iio.write_csv(out / f"{base}_summary.csv",
                      ["eta", "fidelity", "echo_time_ns", "b_GHz", "mean_GHz",
                       "weight_scale"],
                      [dict(eta=report.efficiency, fidelity=report.fidelity,
                            echo_time_ns=report.echo_time * 1e9,
                            b_GHz=best["width_b"] / GHZ,
                            mean_GHz=best.get("mean_offset", 0.0) / GHZ,
                            weight_scale=best.get("weight_scale", 1.0))],
                      meta, timestamp=not no_timestamp)
        if plot:
            t = trace.times() * 1e9
            iio.save_line_plot(out / f"{base}_trace.svg", t,
                               {"intensity": np.abs(trace.samples) ** 2},
                               "t (ns)", "|E|^2")
        click.echo(f"eta = {report.efficiency:.4f}, "
                   f"fidelity = {report.fidelity:.4f}, "
                   f"echo at {report.echo_time * 1e9:.3f} ns")
    _guard(run)


@main.command()
@_common
def polarization(config_path, out_dir, threads, no_timestamp, seed, plot):
    """Dual-comb storage versus the relative comb displacement."""
    def run():
        config = _load(config_path)
        if "atom" in config.given_sections:
            dc, length = cfg.build_atomic_dual_comb(config)
        else:
            dc, length = cfg.build_dual_comb(config)
        sweep_cfg = config["sweep"]
        shifts = [v * GHZ for v in (sweep_cfg.get("values") or [0.0])]
        width = config.get("pulse", "width_GHz") * GHZ
        from .storage import sweep_shift
        rows = sweep_shift(dc, length, shifts, mode=sweep_cfg["mode"],
                           fixed_width=width if width > 0 else None)
        table = [dict(lambda_GHz=r["shift"] / GHZ, eta=r["eta"],
                      fidelity=r["fidelity"],
                      opt_width_GHz=r["width_b"] / GHZ,
                      opt_mean_GHz=r["mean_offset"] / GHZ) for r in rows]
        meta = _meta(config, seed, threads)
        out = Path(out_dir)
        base = config.get("output", "basename")
        iio.write_csv(out / f"{base}_shift_sweep.csv",
                      ["lambda_GHz", "eta", "fidelity", "opt_width_GHz",
                       "opt_mean_GHz"], table, meta,
                      timestamp=not no_timestamp)
        if plot:
            xs = [r["lambda_GHz"] for r in table]
            iio.save_line_plot(out / f"{base}_shift_sweep.svg", xs,
                               {"eta": [r["eta"] for r in table],
                                "fidelity": [r["fidelity"] for r in table]},
                               "comb displacement (GHz)", "eta / fidelity")
        click.echo(f"wrote {len(table)} sweep rows")
    _guard(run)


@main.command()
@_common
def transverse(config_path, out_dir, threads, no_timestamp, seed, plot):
    """Orbital-mode storage through a (possibly inhomogeneous) cell."""
    def run():
        config = _load(config_path)
        medium = cfg.build_medium(config)
        lg = cfg.build_lg_spec(config)
        density = cfg.build_density(config)
        t = config["transverse"]
        from .spectral import design_grid, gaussian_spectrum
        from .transverse import lg_mode, propagate_inhomogeneous
        width = config.get("pulse", "width_GHz") * GHZ or 2 * np.pi * 0.5e9
        grid = design_grid(medium.comb, bandwidth=width, resolve_factor=1.5,
                           span_factor=2.5, time_span=58.75e-9)
        pin = gaussian_spectrum(grid, width)
        mode = lg_mode(lg, 0.0, n=t["grid_n"],
                       extent=t["grid_extent_factor"] * lg.w0)
        out_field = propagate_inhomogeneous(mode, pin, medium, density,
                                            nz=t["nz"])
        report = ex.spacetime_report(mode, pin, out_field, medium.comb)
        meta = _meta(config, seed, threads)
        meta.update(eta=report.efficiency, fidelity=report.fidelity)
        out = Path(out_dir)
        base = config.get("output", "basename")
        iio.write_csv(out / f"{base}_summary.csv",
                      ["ell", "eta", "fidelity", "echo_time_ns"],
                      [dict(ell=lg.ell, eta=report.efficiency,
                            fidelity=report.fidelity,
                            echo_time_ns=report.echo_time * 1e9)],
                      meta, timestamp=not no_timestamp)
        # transverse frame at the echo peak
        trace = out_field.intensity_trace()
        idx = int(np.argmax(np.abs(trace.samples[trace.n // 2:]) ** 2)
                  + trace.n // 2)
        from .transverse import TransverseField
        snap = TransverseField(out_field.dx, out_field.dy,
                               out_field.samples[:, :, idx],
                               z=out_field.z, wavelength=lg.wavelength)
        iio.write_transverse_frame(out / f"{base}_echo_frame.csv", snap, meta,
                                   timestamp=not no_timestamp)
        if plot:
            iio.save_intensity_png(out / f"{base}_echo_frame.png", snap)
        click.echo(f"eta = {report.efficiency:.4f}, "
                   f"fidelity = {report.fidelity:.4f}")
    _guard(run)


@main.command()
@_common
def thermal(config_path, out_dir, threads, no_timestamp, seed, plot):
    """Storage quality versus vapour temperature."""
    def run():
        config = _load(config_path)
        from scipy.constants import atomic_mass
        th = config["thermal"]
        sweep_cfg = config["sweep"]
        temps = sweep_cfg.get("values") or [th["temperature_K"]]
        tr = config["transverse"]
        rows = ex.thermal_sweep_experiment(
            temps, ell=tr["ell"], w0=tr["w0_um"] * 1e-6,
            mass=th["atom_mass_amu"] * atomic_mass,
            wavelength=tr["lambda_nm"] * 1e-9, fit_const=th["fit_const"],
            n=tr["grid_n"])
        meta = _meta(config, seed, threads)
        out = Path(out_dir)
        base = config.get("output", "basename")
        iio.write_csv(out / f"{base}_thermal.csv",
                      ["T_K", "eta", "fidelity"],
                      rows, meta, timestamp=not no_timestamp)
        if plot:
            iio.save_line_plot(out / f"{base}_thermal.svg",
                               [r["T_K"] for r in rows],
                               {"eta": [r["eta"] for r in rows],
                                "fidelity": [r["fidelity"] for r in rows]},
                               "T (K)", "eta / fidelity")
        click.echo(f"wrote {len(rows)} temperature rows")
    _guard(run)


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--mode", default=None,
              type=click.Choice(["width-and-mean", "mean-only", "weight-too"]),
              help="Override the optimiser mode from the config.")
@click.option("--out", "out_path", default="result.csv",
              type=click.Path(dir_okay=False))
@click.option("--no-timestamp", is_flag=True)
@click.option("--seed", default=None, type=int)
@click.option("--threads", default=1)
def optimize(config_path, mode, out_path, no_timestamp, seed, threads):
    """Maximise storage efficiency for the configured medium."""
    def run():
        config = _load(config_path)
        medium = cfg.build_medium(config)
        opt = config["optimizer"]
        chosen = mode or opt["mode"]
        width = config.get("pulse", "width_GHz") * GHZ
        from .storage import optimize_scalar_storage
        points = opt["coarse_points"] or None
        result, report = optimize_scalar_storage(
            medium, mode=chosen,
            fixed_width=width if chosen == "mean-only" else None,
            points_per_axis=points)
        meta = _meta(config, seed, threads)
        meta["mode"] = chosen
        iio.write_csv(Path(out_path),
                      ["eta", "fidelity", "b_GHz", "mean_GHz", "weight_scale",
                       "evaluations"],
                      [dict(eta=report.efficiency, fidelity=report.fidelity,
                            b_GHz=result.best.get("width_b", width) / GHZ,
                            mean_GHz=result.best.get("mean_offset", 0.0) / GHZ,
                            weight_scale=result.best.get("weight_scale", 1.0),
                            evaluations=result.evaluations)],
                      meta, timestamp=not no_timestamp)
        click.echo(f"eta = {report.efficiency:.4f}, "
                   f"fidelity = {report.fidelity:.4f} "
                   f"({result.evaluations} evaluations)")
    _guard(run)


@main.command()
@_common
def sweep(config_path, out_dir, threads, no_timestamp, seed, plot):
    """Generic one-axis sweep (lambda_GHz, temperature_K, ell, width_GHz)."""
    def run():
        config = _load(config_path)
        sweep_cfg = config["sweep"]
        axis = sweep_cfg["axis"]
        values = sweep_cfg.get("values") or []
        meta = _meta(config, seed, threads)
        out = Path(out_dir)
        base = config.get("output", "basename")

        if axis == "lambda_GHz":
            dc, length = cfg.build_dual_comb(config)
            width = config.get("pulse", "width_GHz") * GHZ
            from .storage import sweep_shift
            rows = sweep_shift(dc, length, [v * GHZ for v in values],
                               mode=sweep_cfg["mode"],
                               fixed_width=width if width > 0 else None)
            table = [dict(axis_value=r["shift"] / GHZ, eta=r["eta"],
                          fidelity=r["fidelity"],
                          b_GHz=r["width_b"] / GHZ,
                          mean_GHz=r["mean_offset"] / GHZ,
                          weight_scale=1.0) for r in rows]
        elif axis == "temperature_K":
            th = config["thermal"]
            tr = config["transverse"]
            from scipy.constants import atomic_mass
            rows = ex.thermal_sweep_experiment(
                values, ell=tr["ell"], w0=tr["w0_um"] * 1e-6,
                mass=th["atom_mass_amu"] * atomic_mass,
                fit_const=th["fit_const"], n=tr["grid_n"])
            table = [dict(axis_value=r["T_K"], eta=r["eta"],
                          fidelity=r["fidelity"],
                          b_GHz=r["width_b"] / GHZ, mean_GHz=0.0,
                          weight_scale=r["weight_scale"]) for r in rows]
        elif axis == "ell":
            tr = config["transverse"]
            dens = cfg.build_density(config)
            ratio = (dens.w0_prime / (tr["w0_um"] * 1e-6)
                     if dens.kind == "gaussian" else 50.0)
            rows = ex.inhomogeneous_ell_sweep(
                [int(v) for v in values], w0_prime_ratio=ratio,
                w0=tr["w0_um"] * 1e-6, n=tr["grid_n"], nz=tr["nz"])
            table = [dict(axis_value=r["ell"], eta=r["eta"],
                          fidelity=r["fidelity"], b_GHz=0.0, mean_GHz=0.0,
                          weight_scale=1.0) for r in rows]
        else:  # width_GHz
            medium = cfg.build_medium(config)
            from .storage import scalar_report
            table = []
            for v in values:
                rep = scalar_report(medium, v * GHZ)
                table.append(dict(axis_value=v, eta=rep.efficiency,
                                  fidelity=rep.fidelity, b_GHz=v,
                                  mean_GHz=0.0, weight_scale=1.0))

        iio.write_csv(out / f"{base}_sweep.csv",
                      ["axis_value", "eta", "fidelity", "b_GHz", "mean_GHz",
                       "weight_scale"], table, meta,
                      timestamp=not no_timestamp)
        if plot and table:
            iio.save_line_plot(out / f"{base}_sweep.svg",
                               [r["axis_value"] for r in table],
                               {"eta": [r["eta"] for r in table],
                                "fidelity": [r["fidelity"] for r in table]},
                               axis, "eta / fidelity")
        click.echo(f"wrote {len(table)} rows for axis {axis}")
    _guard(run)


@main.group()
def atoms():
    """Atomic-structure utilities."""


@atoms.command("make-comb")
@click.option("--atom", "atom_name", required=True,
              help="cs, rb (Rb-87) or rb85.")
@click.option("--b", "--B", "field", required=True, type=float,
              help="Magnetic field in tesla.")
@click.option("--out", "out_dir", default=".",
              type=click.Path(file_okay=False))
@click.option("--gamma-mhz", default=5.0, show_default=True,
              help="Homogeneous linewidth (decay rate) in MHz.")
@click.option("--no-timestamp", is_flag=True)
def make_comb(atom_name, field, out_dir, gamma_mhz, no_timestamp):
    """Emit the per-polarization comb lines of one species as CSV."""
    def run():
        from .atoms import make_atomic_dual_comb
        dc = make_atomic_dual_comb(atom_name, field, gamma=gamma_mhz * 1e6)
        rows = []
        for q, comb in ((+1, dc.comb_plus), (-1, dc.comb_minus)):
            for tooth in comb.teeth:
                rows.append(dict(detuning_GHz=tooth.detuning / GHZ,
                                 weight=tooth.weight, q=q))
        meta = {"atom": atom_name, "field_T": field, "gamma_MHz": gamma_mhz,
                "carrier_rad_s": dc.comb_plus.carrier}
        path = Path(out_dir) / f"{atom_name}_comb.csv"
        iio.write_csv(path, ["detuning_GHz", "weight", "q"], rows, meta,
                      timestamp=not no_timestamp)
        click.echo(f"wrote {len(rows)} lines to {path}")
    _guard(run)


if __name__ == "__main__":
    main()

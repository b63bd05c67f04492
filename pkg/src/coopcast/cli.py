"""Command-line entry point.

Subcommands: region, capacity, simulate, sweep, oracle.  Every run writes
its data files plus a manifest (command line, config hash, master seed,
version, timestamps) into the output directory.  Exit codes are a stable
contract: 0 = success/feasible, 1 = infeasible, 2 = usage or model error.
Data files (CSV/JSON) are byte-deterministic for a given configuration and
seed; the manifest carries wall-clock timestamps and is not.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import __version__, harness, regions
from .exceptions import CodebookSizeError, ExponentWindowError, ModelError, ParamError
from .model import load_model
from .optimize import OptOptions
from .typicality import TypicalityParams


def _parse_floats(text: str | None) -> tuple[float, ...] | None:
    if text is None:
        return None
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as e:
        raise click.UsageError(f"bad numeric list {text!r}") from e


def _parse_indices(text: str | None) -> list[int]:
    if text is None or text.strip() == "":
        return []
    try:
        return [int(v) - 1 for v in text.split(",")]
    except ValueError as e:
        raise click.UsageError(f"bad receiver index list {text!r}") from e


def _out_dir(out: str | None, config_blob: str) -> Path:
    h = hashlib.sha256(config_blob.encode()).hexdigest()[:12]
    if out is None:
        stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%d-%H%M%S")
        out = os.path.join("out", f"{stamp}-{h}")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(path: Path, config: dict, seed: int) -> None:
    blob = json.dumps(config, sort_keys=True)
    manifest = {
        "command": " ".join(sys.argv),
        "config": config,
        "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
        "master_seed": seed,
        "artifact_version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _opt_options(grid_step, restarts, tol, seed) -> OptOptions:
    return OptOptions(grid_step=grid_step, restarts=restarts, tol=tol, seed=seed)


def _threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("COOPCAST_THREADS", "").strip()
    return max(1, int(env)) if env.isdigit() else 1


def _load(model_file: str):
    try:
        return load_model(model_file)
    except ModelError as e:
        click.echo(f"model error: {e}", err=True)
        raise SystemExit(2)


@click.group()
def main():
    """Limits and simulations for broadcasting with helper-assisted receivers."""


@main.command()
@click.argument("subcommand",
                type=click.Choice(["tuncel", "mode1", "mode2", "mixed", "list", "list-unique"]))
@click.argument("model_file", type=click.Path())
@click.option("--rates", default=None, help="comma-separated helper rates per receiver")
@click.option("--exponents", default=None, help="comma-separated list exponents")
@click.option("--k1", default=None, help="codeword-side receiver indices (1-based) for `mixed`")
@click.option("--list-set", "list_set", default=None, help="list-decoding receivers (1-based)")
@click.option("--seed", default=0, show_default=True, help="optimizer seed")
@click.option("--grid-step", default=0.05, show_default=True)
@click.option("--restarts", default=8, show_default=True)
@click.option("--tol", default=1e-4, show_default=True)
@click.option("--out", default=None, help="output directory (default ./out/<timestamp>-<hash>)")
def region(subcommand, model_file, rates, exponents, k1, list_set, seed,
           grid_step, restarts, tol, out):
    """Feasibility verdict for a model; exit 0 feasible, 1 infeasible."""
    m = _load(model_file)
    opts = _opt_options(grid_step, restarts, tol, seed)
    rates_t = _parse_floats(rates)
    exps_t = _parse_floats(exponents)
    k = m.source.n_receivers
    try:
        if subcommand == "tuncel":
            v = regions.check_tuncel(m.source, m.channel, m.kappa, opts)
        elif subcommand == "mode1":
            v = regions.check_mode1(m.source, m.channel, m.kappa,
                                    rates_t or (0.0,) * k, m.quantizers, opts)
        elif subcommand == "mode2":
            v = regions.check_mode2(m.source, m.channel, m.kappa,
                                    rates_t or (0.0,) * k, opts)
        elif subcommand == "mixed":
            set1 = _parse_indices(k1)
            set2 = [i for i in range(k) if i not in set1]
            v = regions.check_mixed(m.source, m.channel, m.kappa,
                                    rates_t or (0.0,) * k, m.quantizers, set1, set2, opts)
        elif subcommand == "list":
            v = regions.check_list_region(m.source, m.channel, m.kappa,
                                          exps_t or (0.0,) * k, opts)
        else:
            lset = _parse_indices(list_set)
            v = regions.check_list_unique(m.source, m.channel, m.kappa,
                                          exps_t or (), lset, opts)
    except ModelError as e:
        click.echo(f"model error: {e}", err=True)
        raise SystemExit(2)

    config = {"command": "region", "subcommand": subcommand, "model": model_file,
              "rates": rates, "exponents": exponents, "k1": k1, "list_set": list_set,
              "seed": seed}
    path = _out_dir(out, json.dumps(config, sort_keys=True))
    (path / "verdict.json").write_text(json.dumps(v.to_dict(), indent=2, sort_keys=True) + "\n")
    _write_manifest(path, config, seed)
    flag = "boundary" if v.boundary else ("feasible" if v.feasible else "infeasible")
    click.echo(f"{subcommand}: {flag}, objective {v.objective:.6f}, wrote {path}/verdict.json")
    raise SystemExit(0 if v.feasible else 1)


@main.command()
@click.argument("subcommand", type=click.Choice(["helper", "bidirectional"]))
@click.argument("model_file", type=click.Path())
@click.option("--rates", default=None, help="comma-separated helper rates")
@click.option("--points", default=17, show_default=True, help="sweep points (bidirectional)")
@click.option("--seed", default=0, show_default=True)
@click.option("--grid-step", default=0.05, show_default=True)
@click.option("--restarts", default=8, show_default=True)
@click.option("--tol", default=1e-4, show_default=True)
@click.option("--out", default=None)
def capacity(subcommand, model_file, rates, points, seed, grid_step, restarts, tol, out):
    """Helper capacity value or bidirectional rate-region boundary."""
    m = _load(model_file)
    opts = _opt_options(grid_step, restarts, tol, seed)
    rates_t = _parse_floats(rates) or (0.0,) * m.channel.n_receivers
    if m.quantizers is None:
        click.echo("model error: capacity needs quantizers", err=True)
        raise SystemExit(2)
    config = {"command": "capacity", "subcommand": subcommand, "model": model_file,
              "rates": rates, "points": points, "seed": seed}
    path = _out_dir(out, json.dumps(config, sort_keys=True))
    try:
        if subcommand == "helper":
            value, pw = regions.helper_capacity(m.channel, rates_t, m.quantizers, opts)
            (path / "capacity.json").write_text(json.dumps(
                {"value": value, "witness_pw": pw.tolist()}, indent=2, sort_keys=True) + "\n")
            click.echo(f"helper capacity {value:.6f}, wrote {path}/capacity.json")
        else:
            if m.channel.n_receivers != 2 or len(rates_t) != 2:
                click.echo("model error: bidirectional needs two receivers/rates", err=True)
                raise SystemExit(2)
            curve = regions.bidirectional_region(m.channel, rates_t[0], rates_t[1],
                                                 m.quantizers[0], m.quantizers[1],
                                                 n_points=points, opts=opts)
            (path / "curve.csv").write_text("\n".join(curve.csv_rows()) + "\n")
            click.echo(f"bidirectional region with {len(curve.points)} points, wrote {path}/curve.csv")
    except ModelError as e:
        click.echo(f"model error: {e}", err=True)
        raise SystemExit(2)
    _write_manifest(path, config, seed)
    raise SystemExit(0)


def _typ_params(eps, eps1, delta, delta1, eps_h, eps_h1, list_margin) -> TypicalityParams | None:
    given = [eps, eps1, delta, delta1]
    if all(v is None for v in given + [eps_h, eps_h1, list_margin]):
        return None
    if any(v is None for v in given):
        raise click.UsageError("override eps, eps1, delta, delta1 together")
    return TypicalityParams(eps=eps, eps1=eps1, delta=delta, delta1=delta1,
                            eps_h=eps_h, eps_h1=eps_h1, list_margin=list_margin)


_sim_options = [
    click.option("--ns", required=True, type=int, help="source blocklength n_s"),
    click.option("--trials", default=1000, show_default=True, type=int),
    click.option("--seed", required=True, type=int, help="master seed (required: no hidden entropy)"),
    click.option("--rates", default=None),
    click.option("--exponents", default=None),
    click.option("--pw", default=None, help="explicit input pmf (comma floats)"),
    click.option("--aux-file", default=None, type=click.Path(),
                 help="JSON list of description-channel matrices (source-side helpers)"),
    click.option("--eps", default=None, type=float),
    click.option("--eps1", default=None, type=float),
    click.option("--delta", default=None, type=float),
    click.option("--delta1", default=None, type=float),
    click.option("--eps-h", "eps_h", default=None, type=float),
    click.option("--eps-h1", "eps_h1", default=None, type=float),
    click.option("--list-margin", default=None, type=float),
    click.option("--eps-codebook", default=None, type=float),
    click.option("--helper-eps", default=0.05, show_default=True,
                 help="rate margin added to auto-picked list exponents"),
    click.option("--no-validate-params", is_flag=True, default=False,
                 help="skip the small-constant ordering checks (finite-n experiments)"),
    click.option("--resample-codebooks", is_flag=True, default=False),
    click.option("--trial-log", is_flag=True, default=False, help="write per-trial JSONL"),
    click.option("--threads", default=None, type=int,
                 help="worker threads (fallback: COOPCAST_THREADS)"),
    click.option("--out", default=None),
]


def _add_options(opts):
    def wrap(f):
        for o in reversed(opts):
            f = o(f)
        return f
    return wrap


def _build_config(m, scheme, ns, trials, seed, rates, exponents, pw, aux_file,
                  eps, eps1, delta, delta1, eps_h, eps_h1, list_margin,
                  eps_codebook, helper_eps, no_validate_params,
                  resample_codebooks, threads) -> harness.ExperimentConfig:
    aux = None
    if aux_file is not None:
        with open(aux_file) as f:
            aux = tuple(np.asarray(a, dtype=np.float64) for a in json.load(f))
    try:
        params = _typ_params(eps, eps1, delta, delta1, eps_h, eps_h1, list_margin)
    except ParamError as e:
        click.echo(f"parameter error: {e}", err=True)
        raise SystemExit(2)
    return harness.ExperimentConfig(
        model=m, scheme=scheme, n_s=ns, trials=trials, master_seed=seed,
        rates=_parse_floats(rates), exponents=_parse_floats(exponents),
        p_w=_parse_floats(pw), aux=aux, params=params,
        eps_codebook=eps_codebook, eps_h=helper_eps,
        resample_codebooks=resample_codebooks,
        validate_params=not no_validate_params, threads=_threads(threads),
    )


def _run_and_write(cfg, path: Path, want_log: bool, extra: dict | None = None) -> harness.SimStats:
    log: list = [] if want_log else None
    try:
        stats = harness.run_experiment(cfg, trial_log=log)
    except (ModelError, ParamError, CodebookSizeError, ExponentWindowError) as e:
        click.echo(f"error: {e}", err=True)
        raise SystemExit(2)
    rows = [harness.CSV_HEADER + ("".join("," + k for k in (extra or {})))]
    rows += harness.stats_csv_rows(stats, extra)
    (path / "results.csv").write_text("\n".join(rows) + "\n")
    (path / "results.json").write_text(
        json.dumps(harness.stats_to_dict(stats), indent=2, sort_keys=True) + "\n")
    if want_log:
        (path / "trials.jsonl").write_text("\n".join(harness.trial_log_lines(log)) + "\n")
    return stats


@main.command()
@click.argument("scheme", type=click.Choice(list(harness.SCHEMES)))
@click.argument("model_file", type=click.Path())
@_add_options(_sim_options)
def simulate(scheme, model_file, ns, trials, seed, rates, exponents, pw, aux_file,
             eps, eps1, delta, delta1, eps_h, eps_h1, list_margin, eps_codebook,
             helper_eps, no_validate_params, resample_codebooks, trial_log,
             threads, out):
    """Monte Carlo error estimation for one coding scheme."""
    m = _load(model_file)
    cfg = _build_config(m, scheme, ns, trials, seed, rates, exponents, pw, aux_file,
                        eps, eps1, delta, delta1, eps_h, eps_h1, list_margin,
                        eps_codebook, helper_eps, no_validate_params,
                        resample_codebooks, threads)
    config = {"command": "simulate", "scheme": scheme, "model": model_file, "ns": ns,
              "trials": trials, "seed": seed, "rates": rates, "exponents": exponents,
              "pw": pw, "eps": eps, "delta": delta}
    path = _out_dir(out, json.dumps(config, sort_keys=True))
    stats = _run_and_write(cfg, path, trial_log)
    _write_manifest(path, config, seed)
    worst = max(r.rate for r in stats.per_receiver)
    click.echo(f"{scheme} n_s={stats.n_s}: worst error rate {worst:.4f} "
               f"over {trials} trials, wrote {path}/results.csv")
    raise SystemExit(0)


@main.command()
@click.argument("scheme", type=click.Choice(list(harness.SCHEMES)))
@click.argument("model_file", type=click.Path())
@click.option("--axis", required=True, type=click.Choice(["n_s", "R", "D", "kappa"]))
@click.option("--values", required=True, help="comma-separated sweep values")
@_add_options(_sim_options)
def sweep(scheme, model_file, axis, values, ns, trials, seed, rates, exponents, pw,
          aux_file, eps, eps1, delta, delta1, eps_h, eps_h1, list_margin,
          eps_codebook, helper_eps, no_validate_params, resample_codebooks,
          trial_log, threads, out):
    """One experiment per value of the chosen axis (seed XOR value-index)."""
    m = _load(model_file)
    cfg = _build_config(m, scheme, ns, trials, seed, rates, exponents, pw, aux_file,
                        eps, eps1, delta, delta1, eps_h, eps_h1, list_margin,
                        eps_codebook, helper_eps, no_validate_params,
                        resample_codebooks, threads)
    vals = values.split(",")
    config = {"command": "sweep", "scheme": scheme, "model": model_file, "axis": axis,
              "values": values, "ns": ns, "trials": trials, "seed": seed}
    path = _out_dir(out, json.dumps(config, sort_keys=True))
    try:
        typed = [Fraction(v) if axis == "kappa" else float(v) for v in vals]
        table = harness.sweep(cfg, axis, typed)
    except (ModelError, ParamError, CodebookSizeError, ExponentWindowError) as e:
        click.echo(f"error: {e}", err=True)
        raise SystemExit(2)
    rows = [harness.CSV_HEADER + ",axis,value"]
    docs = []
    for val, stats in table:
        rows += harness.stats_csv_rows(stats, extra={"axis": axis, "value": val})
        docs.append({"axis": axis, "value": str(val), "stats": harness.stats_to_dict(stats)})
    (path / "results.csv").write_text("\n".join(rows) + "\n")
    (path / "results.json").write_text(json.dumps(docs, indent=2, sort_keys=True) + "\n")
    _write_manifest(path, config, seed)
    click.echo(f"swept {axis} over {len(vals)} values, wrote {path}/results.csv")
    raise SystemExit(0)


@main.command()
@click.argument("subcommand", type=click.Choice(["binary-example"]))
@click.option("--rho", required=True, type=float, help="helper observation noise in [0, 1/2]")
@click.option("--grid", default=10, show_default=True, type=int, help="number of alpha points")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
def oracle(subcommand, rho, grid, seed, out):
    """Closed-form trade-off curves used as independent test oracles."""
    config = {"command": "oracle", "subcommand": subcommand, "rho": rho,
              "grid": grid, "seed": seed}
    path = _out_dir(out, json.dumps(config, sort_keys=True))
    try:
        curve = regions.binary_example_curve(rho, np.linspace(0.0, 0.5, grid))
    except ModelError as e:
        click.echo(f"error: {e}", err=True)
        raise SystemExit(2)
    (path / "curve.csv").write_text("\n".join(curve.csv_rows()) + "\n")
    _write_manifest(path, config, seed)
    click.echo(f"wrote {len(curve.points)} oracle points to {path}/curve.csv")
    raise SystemExit(0)


if __name__ == "__main__":
    main()

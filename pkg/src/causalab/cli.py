"""Command-line entry points: simulate, fit, recover, report, serve, bench."""

import csv
import json
import os

import click
import numpy as np

from .fitting import (
    FitResult,
    compare_models,
    fit_mle,
    recovery_study,
    w_mode_for,
)
from .harness import (
    SimRecord,
    emit_reports,
    ingest_behavior,
    run_simulation,
    spec_from_config,
    summarize,
    write_behavior_csv,
)
from .learners import JUDGMENT_KINDS
from .localfocus import INTERVENTION_KINDS

FIT_COLUMNS = (
    "model", "target", "participant", "lambda", "omega", "rho", "theta",
    "eta", "epsilon", "nll", "n_params", "n_obs", "bic", "pseudo_r2",
)


@click.group()
def main():
    """Active causal structure learning: simulation, fitting, live service."""


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def simulate(spec_path, out_dir):
    """Run a batch simulation and write records plus summary tables."""
    with open(spec_path) as fh:
        spec = spec_from_config(json.load(fh))
    records = run_simulation(spec)
    os.makedirs(out_dir, exist_ok=True)
    write_behavior_csv(records, os.path.join(out_dir, "records.csv"))
    devices = {
        d.id: {"n": d.n, "edges": d.graph.to_text(), "label": d.label}
        for d in spec.devices
    }
    with open(os.path.join(out_dir, "devices.json"), "w") as fh:
        json.dump({
            "experiment": spec.name,
            "judge": spec.judge_kind,
            "chooser": spec.chooser_kind,
            "devices": devices,
        }, fh, sort_keys=True, indent=1)
    emit_reports(summarize(records), "both", out_dir)
    click.echo(f"wrote {len(records)} simulated runs to {out_dir}")


def _write_fits(fits: list, path: str):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=FIT_COLUMNS, restval="",
                                lineterminator="\n")
        writer.writeheader()
        for f in fits:
            row = {
                "model": f.model, "target": f.target, "participant": f.participant_id,
                "nll": repr(f.nll), "n_params": f.n_params, "n_obs": f.n_obs,
                "bic": repr(f.bic), "pseudo_r2": repr(f.pseudo_r2),
            }
            for name, value in f.params.items():
                row[name] = repr(value)
            writer.writerow(row)


def _read_fits(path: str) -> list:
    fits = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            params = {
                name: float(row[name])
                for name in ("lambda", "omega", "rho", "theta", "eta", "epsilon")
                if row.get(name)
            }
            fits.append(FitResult(
                model=row["model"], target=row["target"],
                participant_id=row["participant"], params=params,
                nll=float(row["nll"]), n_params=int(row["n_params"]),
                n_obs=int(row["n_obs"]), bic=float(row["bic"]),
                pseudo_r2=float(row["pseudo_r2"]),
            ))
    return fits


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--models", default=",".join(JUDGMENT_KINDS), show_default=True,
              help="comma-separated model kinds")
@click.option("--target", type=click.Choice(["judgment", "intervention"]),
              default="judgment", show_default=True)
@click.option("--restarts", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def fit(data_path, models, target, restarts, seed, out_dir):
    """Fit models per participant by maximum likelihood; write a fits table."""
    participants = ingest_behavior(data_path)
    kinds = [m.strip() for m in models.split(",") if m.strip()]
    valid = JUDGMENT_KINDS if target == "judgment" else INTERVENTION_KINDS
    for kind in kinds:
        if kind not in valid:
            raise click.BadParameter(f"unknown {target} model {kind!r}")
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(seed)
    fits = []
    by_model: dict = {k: [] for k in kinds}
    for data in participants:
        w = w_mode_for(data)
        for kind in kinds:
            result = fit_mle(kind, data, w, restarts=restarts, rng=rng, target=target)
            fits.append(result)
            by_model[kind].append(result)
    _write_fits(fits, os.path.join(out_dir, "fits.csv"))
    emit_reports({"model_comparison": compare_models(by_model)}, "both", out_dir)
    click.echo(f"fitted {len(kinds)} models x {len(participants)} participants")


@main.command()
@click.option("--fits", "fits_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True),
              help="behavioral file the fits were computed from")
@click.option("--models", default=",".join(JUDGMENT_KINDS), show_default=True)
@click.option("--restarts", default=3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def recover(fits_path, data_path, models, restarts, seed, out_dir):
    """Simulate fitted models on the same problems and refit: confusion matrix."""
    participants = ingest_behavior(data_path)
    kinds = tuple(m.strip() for m in models.split(",") if m.strip())
    fitted: dict = {}
    for f in _read_fits(fits_path):
        fitted.setdefault(f.participant_id, {})[f.model] = f
    missing = [
        (p.participant_id, k) for p in participants for k in kinds
        if k not in fitted.get(p.participant_id, {})
    ]
    if missing:
        raise click.ClickException(f"fits file lacks entries for {missing[:5]}...")
    rng = np.random.default_rng(seed)
    confusion = recovery_study(participants, fitted, rng, kinds, restarts)
    rows = [
        {"generating_model": g, "recovered_model": r, "count": confusion[(g, r)]}
        for g in kinds
        for r in kinds
    ]
    os.makedirs(out_dir, exist_ok=True)
    emit_reports({"recovery_confusion": rows}, "both", out_dir)
    click.echo(f"recovery over {len(participants)} participants x {len(kinds)} models")


@main.command()
@click.option("--records", "records_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def report(records_dir, out_dir):
    """Summarize a simulation records directory into report tables."""
    from .devices import Device
    from .graphs import CausalGraph

    with open(os.path.join(records_dir, "devices.json")) as fh:
        meta = json.load(fh)
    devices = {
        did: Device(did, d["n"], CausalGraph.from_text(d["n"], d["edges"]), d["label"])
        for did, d in meta["devices"].items()
    }
    participants = ingest_behavior(os.path.join(records_dir, "records.csv"))
    records = [
        SimRecord(
            data=p,
            devices=tuple(devices[prob.device_id] for prob in p.problems),
            judge_kind=meta.get("judge", "?"),
            chooser_kind=meta.get("chooser", "?"),
        )
        for p in participants
    ]
    emit_reports(summarize(records), "both", out_dir)
    click.echo(f"reported on {len(records)} runs")


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default="./sessions", show_default=True)
@click.option("--analytics", type=click.Choice(["on", "off"]), default="off",
              show_default=True)
def serve(port, host, data_dir, analytics):
    """Serve the live task over HTTP/JSON."""
    import uvicorn

    from .service import SessionStore, create_app

    store = SessionStore(data_dir, analytics_default=(analytics == "on"))
    uvicorn.run(create_app(store), host=host, port=port, log_level="warning")


@main.command()
@click.option("--out", "out_path", default="", help="optional JSON output path")
def bench(out_path):
    """Benchmark the numba kernels against the pure-numpy fallbacks."""
    from .bench import run_benchmarks

    results = run_benchmarks()
    if out_path:
        with open(out_path, "w") as fh:
            json.dump(results, fh, indent=1, sort_keys=True)
        click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()

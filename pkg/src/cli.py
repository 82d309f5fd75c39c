#!/usr/bin/env python3
import contextlib
import csv
import sys
from pathlib import Path
from typing import Iterator, List, Optional

import typer
from rich.console import Console
from rich.table import Table

from .config import ConfigManager
from .exceptions import INPUT_ERRORS, AdsorbKitError, ValidationError
from .logging import get_logger, setup_logging
from .models import build_model
from .pointcloud import sample_point_cloud
from .structures import (
    TAG_ADSORBATE,
    TAG_BULK,
    TAG_SURFACE,
    DatasetManifest,
    build_devset,
    generate_synthetic,
    load_dataset,
    make_devset,
    save_dataset,
)
from .tasks import DataModule, TaskDataset, TaskKind, evaluate
from .trainer import (
    BENCH_STRATEGIES,
    CSV_COLUMNS,
    DEFAULT_BENCH_STRATEGY,
    STRATEGIES,
    Trainer,
    bench_scaling,
    load_checkpoint,
    metrics_row,
    write_scaling_csv,
)
from .version import __version__

app = typer.Typer(
    help="adsorbkit - train equivariant graph networks on adsorbate/catalyst structures.",
    no_args_is_help=True,
)
# stdout carries data only; everything for humans goes to stderr
console = Console(stderr=True)
logger = get_logger(__name__)

INSPECT_COLUMNS = ("id", "num_atoms", "num_adsorbate", "num_surface", "num_bulk", "energy", "has_forces")
POINT_CLOUD_COLUMNS = ("id", "num_centers", "num_neighbors", "num_substrate", "num_pairs")


def version_callback(value: bool):
    if value:
        typer.echo(f"adsorbkit version: {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    ctx: typer.Context,
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-v",
        callback=version_callback,
        is_eager=True,
        help="Show the version and exit.",
    ),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
):
    """adsorbkit - train equivariant graph networks on adsorbate/catalyst structures."""
    ctx.obj = {"log_level": log_level}
    setup_logging(log_level=log_level or "INFO")


@contextlib.contextmanager
def cli_errors() -> Iterator[None]:
    """Map failures to exit codes: 2 for bad input, 1 for everything else."""
    try:
        yield
    except typer.Exit:
        raise
    except INPUT_ERRORS as e:
        console.print(f"[red]Error:[/red] {e}", markup=True, highlight=False)
        raise typer.Exit(code=2) from e
    except AdsorbKitError as e:
        console.print(f"[red]Error:[/red] {e}", markup=True, highlight=False)
        raise typer.Exit(code=1) from e
    except Exception as e:  # noqa: BLE001
        logger.exception(f"Unexpected failure: {e}")
        raise typer.Exit(code=1) from e


def _csv_writer():
    return csv.writer(sys.stdout, lineterminator="\n")


def _cell(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def _write_with_manifest(structures, output: Path, split: str, seed: Optional[int]) -> DatasetManifest:
    save_dataset(structures, output)
    manifest = DatasetManifest.for_file(output, len(structures), split=split, seed=seed)
    manifest.write()
    return manifest


@app.command("devset")
def devset(
    output: Path = typer.Option(..., "--output", "-o", help="Devset JSON-Lines file to write"),
    input: Optional[Path] = typer.Option(None, "--input", "-i", help="JSON-Lines dataset to sample from"),
    n: int = typer.Option(100, "--n", help="Number of records to keep"),
    seed: int = typer.Option(0, "--seed", help="Sampling seed"),
    bundled: Optional[str] = typer.Option(
        None, "--bundled", help="Write a bundled devset (is2re or s2ef) instead of sampling --input"
    ),
):
    """Sample a reproducible devset from a dataset and write it with its manifest."""
    with cli_errors():
        if bundled is not None:
            structures, recipe_manifest = build_devset(TaskKind.parse(bundled).value)
            manifest = _write_with_manifest(structures, output, "devset", recipe_manifest.seed)
        else:
            if input is None:
                raise ValidationError("Pass --input or --bundled")
            structures, _ = make_devset(load_dataset(input), n, seed)
            manifest = _write_with_manifest(structures, output, "devset", seed)
        console.print(
            f"[green]Wrote {manifest.record_count} records to {output}[/green] "
            f"(sha256 {manifest.checksum[:12]}...)"
        )


@app.command("generate")
def generate(
    output: Path = typer.Option(..., "--output", "-o", help="JSON-Lines file to write"),
    n: int = typer.Option(100, "--n", help="Number of structures"),
    atoms_min: int = typer.Option(6, "--atoms-min", help="Fewest atoms per structure"),
    atoms_max: int = typer.Option(14, "--atoms-max", help="Most atoms per structure"),
    seed: int = typer.Option(0, "--seed", help="Generation seed"),
    forces: bool = typer.Option(True, "--forces/--no-forces", help="Keep force labels"),
):
    """Generate a synthetic dataset labelled by an analytic pair potential."""
    with cli_errors():
        if n < 1:
            raise ValidationError("--n must be positive", {"n": n})
        structures = generate_synthetic(n, atoms_min, atoms_max, seed)
        if not forces:
            structures = [
                type(s)(s.id, s.atomic_numbers, s.positions, s.tags, energy=s.energy, cell=s.cell)
                for s in structures
            ]
        manifest = _write_with_manifest(structures, output, "synthetic", seed)
        console.print(f"[green]Wrote {manifest.record_count} synthetic records to {output}[/green]")


@app.command("train")
def train(
    ctx: typer.Context,
    config_file: Optional[Path] = typer.Option(None, "--config", "-c", help="JSON or YAML settings file"),
    task: Optional[str] = typer.Option(None, "--task", help="is2re or s2ef"),
    devices: Optional[int] = typer.Option(None, "--devices", help="Data-parallel workers"),
    strategy: Optional[str] = typer.Option(None, "--strategy", help=f"One of: {', '.join(STRATEGIES)}"),
    epochs: Optional[int] = typer.Option(None, "--epochs", help="max_epochs"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size", help="Records per micro-step"),
    accumulate: Optional[int] = typer.Option(None, "--accumulate", help="Micro-steps per optimizer update"),
    learning_rate: Optional[float] = typer.Option(None, "--lr", help="Initial learning rate"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Shuffle and initialization seed"),
    train_path: Optional[Path] = typer.Option(None, "--train", help="Training JSON-Lines file"),
    val_path: Optional[Path] = typer.Option(None, "--val", help="Validation JSON-Lines file"),
    run_dir: Path = typer.Option(Path("runs/latest"), "--run-dir", help="Directory for all run artifacts"),
    resume: Optional[Path] = typer.Option(None, "--resume", help="Checkpoint to resume from"),
):
    """Train a model; writes metrics.csv, checkpoints and resolved-config.json to the run directory."""
    with cli_errors():
        overrides = {
            "task": task,
            "devices": devices,
            "strategy": strategy,
            "max_epochs": epochs,
            "batch_size": batch_size,
            "accumulate_grad_batches": accumulate,
            "learning_rate": learning_rate,
            "seed": seed,
            "train_path": str(train_path) if train_path else None,
            "val_path": str(val_path) if val_path else None,
            "log_level": (ctx.obj or {}).get("log_level"),
        }
        settings = ConfigManager(config_file, overrides=overrides)
        if strategy is None and settings["devices"] > 1 and settings["strategy"] == "single":
            settings.set("strategy", "threaded-ddp")
        settings.validate()
        resolved = settings.resolved()

        run_dir.mkdir(parents=True, exist_ok=True)
        settings.save(run_dir / "resolved-config.json")
        setup_logging(
            log_dir=str(run_dir),
            log_level=resolved["log_level"],
            file_output=resolved["log_to_file"],
            log_format=resolved["log_format"],
        )

        data_kwargs = {"cutoff": resolved["cutoff"], "max_neighbors": resolved["max_neighbors"]}
        if resolved["train_path"]:
            data = DataModule.from_paths(
                resolved["task"],
                resolved["train_path"],
                resolved["val_path"],
                batch_size=resolved["batch_size"],
                **data_kwargs,
            )
        else:
            data = DataModule.from_devset(
                resolved["task"], batch_size=resolved["batch_size"], cache_dir=resolved["devset_dir"], **data_kwargs
            )

        trainer_config = settings.to_trainer_config()
        model = build_model(settings.to_model_config(), seed=trainer_config.seed)
        trainer = Trainer(trainer_config, run_dir=run_dir, log_level=resolved["log_level"])
        run = trainer.fit(model, data, resume_from=resume)

        console.print(
            f"[green]Finished {run.epochs_completed} epochs[/green]"
            + (" (stopped early)" if run.stopped_early else "")
        )
        for path in run.checkpoint_paths:
            console.print(f"  checkpoint: {path}")
        if run.log_path:
            console.print(f"  metrics: {run.log_path}")

        if run.final_metrics:
            writer = _csv_writer()
            writer.writerow(CSV_COLUMNS)
            writer.writerow(metrics_row(run.final_metrics))


@app.command("eval")
def eval_checkpoint(
    checkpoint: Path = typer.Option(..., "--checkpoint", help="Checkpoint written by train"),
    data: Path = typer.Option(..., "--data", help="JSON-Lines split to evaluate"),
    task: Optional[str] = typer.Option(None, "--task", help="is2re or s2ef (default: the checkpoint's task)"),
    batch_size: int = typer.Option(8, "--batch-size", help="Records per forward pass"),
):
    """Print de-normalized MAE metrics of a checkpoint on one split as a metrics.csv row."""
    with cli_errors():
        state = load_checkpoint(checkpoint)
        kind = TaskKind.parse(task or state.extra.get("task", "is2re"))
        model = build_model(state.model_config, name=state.model_name, params=state.params)
        settings = state.extra.get("data", {})
        split = TaskDataset(
            load_dataset(data),
            kind,
            settings.get("cutoff", 6.0),
            settings.get("max_neighbors", 50),
            name=data.stem,
        )
        metrics = evaluate(model, split, kind, state.normalizer, batch_size=batch_size)

        console.print(f"Evaluated {metrics.num_samples} records from {data.name}")
        writer = _csv_writer()
        writer.writerow(CSV_COLUMNS)
        writer.writerow(
            metrics_row(
                {
                    "epoch": state.epoch,
                    "step": state.global_step,
                    "split": data.stem,
                    "energy_mae_ev": metrics.energy_mae_ev,
                    "force_mae_ev_per_ang": metrics.force_mae_ev_per_ang,
                }
            )
        )


def _inspect_point_clouds(structures, num_substrate: int, seed: int, title: str):
    writer = _csv_writer()
    writer.writerow(POINT_CLOUD_COLUMNS)
    samples = []
    for s in structures:
        sample = sample_point_cloud(s, num_substrate=num_substrate, seed=seed)
        samples.append(sample)
        writer.writerow(
            [
                s.id,
                sample.num_centers,
                sample.num_neighbors,
                sample.num_neighbors - sample.num_centers,
                sample.num_centers * sample.num_neighbors,
            ]
        )

    table = Table(title=f"{title} (point clouds)")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Records", str(len(samples)))
    table.add_row("num_substrate", str(num_substrate))
    if samples:
        table.add_row("Padded centers", str(max(s.num_centers for s in samples)))
        table.add_row("Padded neighbors", str(max(s.num_neighbors for s in samples)))
    console.print(table)


@app.command("inspect")
def inspect(
    data: Path = typer.Argument(..., help="JSON-Lines dataset"),
    point_cloud: bool = typer.Option(False, "--point-cloud", help="Describe the sampled point clouds instead"),
    num_substrate: Optional[int] = typer.Option(
        None, "--num-substrate", help="Bulk atoms sampled into each point cloud"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Point-cloud sampling seed"),
    config_file: Optional[Path] = typer.Option(None, "--config", "-c", help="JSON or YAML settings file"),
):
    """Per-record summary as CSV on stdout, aggregate table on stderr."""
    with cli_errors():
        structures = load_dataset(data)
        if point_cloud:
            settings = ConfigManager(config_file, overrides={"num_substrate": num_substrate, "seed": seed})
            settings.validate()
            _inspect_point_clouds(structures, settings["num_substrate"], settings["seed"], data.name)
            return
        writer = _csv_writer()
        writer.writerow(INSPECT_COLUMNS)
        for s in structures:
            writer.writerow(
                [
                    s.id,
                    s.num_atoms,
                    int((s.tags == TAG_ADSORBATE).sum()),
                    int((s.tags == TAG_SURFACE).sum()),
                    int((s.tags == TAG_BULK).sum()),
                    _cell(s.energy),
                    s.forces is not None,
                ]
            )

        atoms = [s.num_atoms for s in structures]
        energies = [s.energy for s in structures if s.energy is not None]
        table = Table(title=f"{data.name}")
        table.add_column("Metric", style="cyan")
        table.add_column("Value", style="green")
        table.add_row("Records", str(len(structures)))
        table.add_row("Atoms (min / max)", f"{min(atoms)} / {max(atoms)}" if atoms else "-")
        table.add_row("With energy", str(len(energies)))
        table.add_row("With forces", str(sum(s.forces is not None for s in structures)))
        if energies:
            table.add_row("Energy range (eV)", f"{min(energies):.4f} .. {max(energies):.4f}")
        console.print(table)


def _parse_devices(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ValidationError("--devices-list takes comma-separated integers", {"given": text}) from e


@app.command("bench-scaling")
def bench(
    devices_list: str = typer.Option("1,2,4", "--devices-list", help="Comma-separated device counts"),
    epochs: int = typer.Option(3, "--epochs", help="Epochs per device count; the first is warm-up"),
    strategy: str = typer.Option(
        DEFAULT_BENCH_STRATEGY, "--strategy", help=f"One of: {', '.join(BENCH_STRATEGIES)}"
    ),
    records: int = typer.Option(256, "--records", help="Synthetic records in the workload"),
    batch_size: int = typer.Option(64, "--batch-size", help="Records per step"),
    seed: int = typer.Option(0, "--seed", help="Workload seed"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="CSV file (default: stdout)"),
):
    """Time one training epoch per device count and report the speedup over one device."""
    with cli_errors():
        rows = bench_scaling(
            _parse_devices(devices_list),
            epochs=epochs,
            strategy=strategy,
            records=records,
            batch_size=batch_size,
            seed=seed,
        )
        if output is None:
            write_scaling_csv(rows, sys.stdout)
        else:
            output.parent.mkdir(parents=True, exist_ok=True)
            with open(output, "w", newline="") as f:
                write_scaling_csv(rows, f)
            console.print(f"[green]Wrote {len(rows)} rows to {output}[/green]")


if __name__ == "__main__":
    app()

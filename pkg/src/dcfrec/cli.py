"""Implements CLI interface for dcfrec."""

from collections.abc import Callable
from pathlib import Path
from typing import Any
import click
from dcfrec.datasets.catalog import FORMATS
from dcfrec.datasets.synthetic import generate_planted
from dcfrec.datasets.synthetic import write_triplets
from dcfrec.denoise.config import SCHEDULES
from dcfrec.denoise.trainers import METHODS
from dcfrec.experiment import SWEEP_AXES
from dcfrec.experiment import ExperimentManager
from dcfrec.experiment import resolve_config
from dcfrec.reference.hyperparameters import GRIDS


def _apply(*decorators: Callable) -> Callable:
    def wrap(function: Callable) -> Callable:
        for decorator in reversed(decorators):
            function = decorator(function)
        return function

    return wrap


config_option = click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="YAML or `key = value` config file.",
)
input_option = click.option(
    "--input", "input_path", type=click.Path(exists=True, path_type=Path)
)
out_option = click.option("--out", type=click.Path(path_type=Path))
seed_option = click.option("--seed", type=int, help="Base seed.")
ks_option = click.option("--K", "ks", type=int, multiple=True, help="Cut-off.")

training_options = _apply(
    config_option,
    input_option,
    out_option,
    click.option("--method", type=click.Choice(METHODS)),
    click.option("--drop-max", type=float),
    click.option("--drop-warmup", type=int),
    click.option("--schedule", type=click.Choice(SCHEDULES)),
    click.option("--no-damping", is_flag=True, help="Use raw losses."),
    click.option("--lr", type=float),
    click.option("--batch", type=int),
    click.option("--dim", type=int),
    click.option("--plain-mf", is_flag=True, help="Fix the GMF weights."),
    click.option("--negatives", type=int),
    click.option("--epochs", type=int),
    click.option("--patience", type=int),
    seed_option,
    click.option("--seeds", type=int, help="Number of seeds, counting up from --seed."),
    ks_option,
    click.option("--dump-ledger", is_flag=True),
)
bound_options = _apply(
    click.option("--R", "relabel_ratio", type=float, help="Final relabel ratio."),
    click.option("--O", "saturation_epoch", type=int, help="Saturation epoch."),
    click.option("--sigma2", type=float),
    click.option("--v", type=int),
)


def _manager(
    command: str, config_path: Path | None, **values: Any
) -> ExperimentManager:
    """Resolve the configuration and create the manager of a command."""
    flags = {
        "no_damping": ("damping", False),
        "plain_mf": ("plain_mf", True),
        "dump_ledger": ("dump_ledger", True),
    }
    for flag, (key, value) in flags.items():
        values[key] = value if values.pop(flag, False) else None
    renamed = {
        "input_path": "input",
        "relabel_ratio": "R",
        "saturation_epoch": "O",
        "ks": "K",
    }
    for old, new in renamed.items():
        if old in values:
            values[new] = values.pop(old)
    if values.get("K") == ():
        values["K"] = None
    config = resolve_config(config_path, **values)
    return ExperimentManager(config, command)


@click.group()
@click.version_option(package_name="dcfrec")
def cli() -> None:
    """Denoising training of implicit-feedback recommenders."""


@cli.command()
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--users", type=int, default=200, show_default=True)
@click.option("--items", type=int, default=100, show_default=True)
@click.option("--rank", type=int, default=8, show_default=True)
@click.option("--positives", type=int, default=15, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def synthesize(
    out: Path, users: int, items: int, rank: int, positives: int, seed: int
) -> None:
    """Write interactions of a planted low-rank preference model as a TSV file."""
    raw = generate_planted(users, items, rank, positives, seed)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_triplets(raw, out)
    click.echo(f"Wrote {len(raw)} interactions to {out}")


@cli.command()
@config_option
@input_option
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--format", "format_", type=click.Choice(list(FORMATS)))
@seed_option
@click.option("--noise-rate", type=float, help="Share of injected false positives.")
@click.option("--min-rating", type=float, help="Clean-test rating threshold.")
@click.option("--ratio", type=int, nargs=3, help="Train/validation/test split ratio.")
def prepare(config_path: Path | None, format_: str | None, **values: Any) -> None:
    """Split an interaction file and optionally inject noise."""
    manager = _manager("prepare", config_path, format=format_, **values)
    manager.prepare()


@cli.command()
@training_options
@bound_options
def train(config_path: Path | None, **values: Any) -> None:
    """Train a method once per seed and evaluate it on the clean test split."""
    _manager("train", config_path, **values).train()


@cli.command(name="evaluate")
@config_option
@input_option
@out_option
@click.option(
    "--checkpoint",
    "checkpoints",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    multiple=True,
    required=True,
)
@click.option("--method", type=click.Choice(METHODS), help="Label of the results.")
@click.option("--plain-mf", is_flag=True)
@ks_option
def evaluate_checkpoints(
    config_path: Path | None, checkpoints: tuple[Path, ...], **values: Any
) -> None:
    """Evaluate stored checkpoints on the clean test split."""
    summary = _manager("evaluate", config_path, **values).evaluate(list(checkpoints))
    for name, value in summary.flat().items():
        click.echo(f"{name}: {value:.4f}")


@cli.command()
@training_options
@click.option("--R", "grid_R", type=float, multiple=True, help="Relabel ratio values.")
@click.option("--O", "saturation_epoch", type=int)
@click.option("--sigma2", "grid_sigma2", type=float, multiple=True)
@click.option("--v", "grid_v", type=int, multiple=True)
@click.option("--full-grid", is_flag=True, help="Sweep the full tuning grids.")
def sweep(config_path: Path | None, full_grid: bool, **values: Any) -> None:
    """Train DCF over a grid of R, sigma2 and v values."""
    given = {axis: values.pop(f"grid_{axis}") for axis in SWEEP_AXES}
    manager = _manager("sweep", config_path, **values)
    axes = {
        axis: given[axis]
        or (GRIDS[axis] if full_grid else (getattr(manager.config, axis),))
        for axis in SWEEP_AXES
    }
    manager.sweep(axes)


@cli.command()
@training_options
@bound_options
@click.option(
    "--hard-samples",
    type=click.Path(dir_okay=False, path_type=Path),
    help="hard_samples.json written by a DCF training run.",
)
def rq3(config_path: Path | None, hard_samples: Path | None, **values: Any) -> None:
    """Compare T-CE protecting hard samples against a random control."""
    _manager("rq3", config_path, **values).rq3(hard_samples)


@cli.command()
@training_options
@bound_options
def rq4(config_path: Path | None, **values: Any) -> None:
    """Compare the flip precision of the progressive and the fixed schedule."""
    _manager("rq4", config_path, **values).rq4()


if __name__ == "__main__":
    cli()

"""Configuration handling and the experiment commands behind the CLI."""

import itertools
import json
from collections.abc import Sequence
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import fields
from dataclasses import replace
from datetime import datetime
from pathlib import Path
from typing import Any
import pandas as pd
import yaml
from tqdm import tqdm
import dcfrec
from dcfrec.datasets import interactions
from dcfrec.datasets.catalog import FORMATS
from dcfrec.datasets.catalog import load_triplets
from dcfrec.datasets.noise import NoiseSpec
from dcfrec.datasets.noise import inject_noise
from dcfrec.datasets.splits import make_splits
from dcfrec.datasets.validation import validate_dataset
from dcfrec.denoise.config import DenoiseConfig
from dcfrec.denoise.hard_samples import HardSampleExport
from dcfrec.denoise.trainers import FNAME_METRICS
from dcfrec.denoise.trainers import METHODS
from dcfrec.denoise.trainers import STOPPING_METRIC
from dcfrec.denoise.trainers import RunLogs
from dcfrec.denoise.trainers import TrainingResult
from dcfrec.denoise.trainers import train_baseline
from dcfrec.denoise.trainers import train_dcf
from dcfrec.denoise.trainers import train_method
from dcfrec.evaluation import MetricsReport
from dcfrec.evaluation import evaluate
from dcfrec.evaluation import flip_precision
from dcfrec.evaluation import flip_precision_series
from dcfrec.evaluation import summarize
from dcfrec.evaluation import write_summary
from dcfrec.model.gmf import EmbeddingModel
from dcfrec.model.gmf import init_model
from dcfrec.model.gmf import load_checkpoint
from dcfrec.model.gmf import save_checkpoint
from dcfrec.model.optimizer import OptimizerConfig
from dcfrec.reference.hyperparameters import DEFAULTS


FNAME_RUN_MANIFEST = "manifest.json"
FNAME_CHECKPOINT = "model.ckpt"
FNAME_SUMMARY = "summary.csv"
FNAME_SWEEP = "sweep.csv"
FNAME_RQ3 = "rq3.csv"
FNAME_RQ4 = "rq4.csv"
SWEEP_AXES = ("R", "sigma2", "v")
RQ3_VARIANTS = ("tce+hard", "tce+random", "tce")
PREPARE_KEYS = ("input", "format", "ratio", "min_rating", "noise_rate", "seed")


class MissingArtifactError(Exception):
    """Error raised when an input produced by an earlier command is missing."""

    ...


def config_loader(config_path: Path) -> dict[str, Any]:
    """Load a config file into a dictionary and check its keys.

    `.yml` / `.yaml` files hold a flat mapping. Any other file holds one
    `key = value` entry per line; blank lines and lines starting with `#` are
    skipped and values are typed as YAML scalars.
    """
    if not config_path.exists():
        msg = f"No config file was found at '{config_path}'"
        raise FileNotFoundError(msg)

    with config_path.open(encoding="utf-8") as f:
        if config_path.suffix in (".yml", ".yaml"):
            config = yaml.safe_load(f) or {}
            if not isinstance(config, dict):
                msg = f"The config file '{config_path}' should hold a mapping."
                raise ValueError(msg)
        else:
            config = {}
            for number, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, value = line.partition("=")
                if not sep or not key.strip():
                    msg = f"Line {number} of '{config_path}' is not `key = value`."
                    raise ValueError(msg)
                config[key.strip()] = yaml.safe_load(value.strip())

    config = {str(key).replace("-", "_"): value for key, value in config.items()}
    unknown = sorted(set(config) - set(RunConfig.keys()))
    if unknown:
        msg = (
            f"Unknown key(s) in '{config_path}': {', '.join(unknown)}.\n"
            f"Valid keys are: {', '.join(RunConfig.keys())}."
        )
        raise ValueError(msg)
    return config


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings of one command invocation."""

    lr: float
    beta1: float
    beta2: float
    epsilon: float
    dim: int
    plain_mf: bool
    batch: int
    negatives: int
    epochs: int
    patience: int
    v: int
    sigma2: float
    damping: bool
    drop_max: float
    drop_warmup: int
    R: float
    O: int
    schedule: str
    format: str
    ratio: tuple[int, int, int]
    min_rating: float
    noise_rate: float
    method: str
    seed: int
    seeds: int
    K: tuple[int, ...]
    dump_ledger: bool
    input: Path | None = None
    out: Path = Path("runs")

    def __post_init__(self) -> None:
        """Validate the initialized RunConfig."""
        if self.method not in METHODS:
            msg = f"Unknown method '{self.method}'.\nChoose from: {', '.join(METHODS)}."
            raise ValueError(msg)
        if self.format not in FORMATS:
            msg = (
                f"Unsupported format '{self.format}'.\n"
                f"Choose from: {', '.join(FORMATS)}."
            )
            raise ValueError(msg)
        if self.seeds < 1:
            raise ValueError(f"At least one seed is needed, got {self.seeds}.")
        if not self.K or any(k < 1 for k in self.K):
            raise ValueError(f"The cut-offs K should be positive, got {self.K}.")
        if len(self.ratio) != 3 or any(part < 1 for part in self.ratio):
            msg = f"The split ratio needs three positive parts, got {self.ratio}."
            raise ValueError(msg)
        # the sub-configs validate the remaining values
        self.optimizer  # noqa: B018
        self.denoise()
        self.noise  # noqa: B018

    @classmethod
    def keys(cls) -> tuple[str, ...]:
        """Names of all settings."""
        return tuple(f.name for f in fields(cls))

    @property
    def optimizer(self) -> OptimizerConfig:
        """Optimizer and backbone settings."""
        return OptimizerConfig(
            learning_rate=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
            embedding_dim=self.dim,
        )

    def denoise(self, seed: int | None = None) -> DenoiseConfig:
        """Training settings of one seed."""
        return DenoiseConfig(
            v=self.v,
            sigma2=self.sigma2,
            R=self.R,
            O=self.O,
            drop_max=self.drop_max,
            drop_warmup=self.drop_warmup,
            epochs=self.epochs,
            batch_size=self.batch,
            negatives=self.negatives,
            seed=self.seed if seed is None else seed,
            patience=self.patience,
            damping=self.damping,
            schedule=self.schedule,
        )

    @property
    def noise(self) -> NoiseSpec:
        """Noise injection settings."""
        return NoiseSpec(noise_rate=self.noise_rate, seed=self.seed)

    @property
    def seed_list(self) -> list[int]:
        """Seeds of the repeated runs: seed, seed + 1, ..."""
        return [self.seed + offset for offset in range(self.seeds)]

    def to_dict(self) -> dict[str, Any]:
        """Serialize the configuration."""
        config = asdict(self)
        config["input"] = None if self.input is None else str(self.input)
        config["out"] = str(self.out)
        config["ratio"] = list(self.ratio)
        config["K"] = list(self.K)
        return config


def resolve_config(
    config_path: Path | None = None, **overrides: Any
) -> RunConfig:
    """Merge built-in defaults, the config file and command-line values.

    Command-line values override the config file, which overrides the defaults.
    Overrides that are None (flag not given) are ignored.
    """
    values: dict[str, Any] = dict(DEFAULTS)
    if config_path is not None:
        values.update(config_loader(config_path))
    values.update({k: v for k, v in overrides.items() if v is not None})

    unknown = sorted(set(values) - set(RunConfig.keys()))
    if unknown:
        raise ValueError(f"Unknown setting(s): {', '.join(unknown)}.")
    for key in ("ratio", "K"):
        value = values[key]
        if isinstance(value, int):
            value = [value]
        values[key] = tuple(int(v) for v in value)
    for key in ("input", "out"):
        if values.get(key) is not None:
            values[key] = Path(values[key])
    return RunConfig(**values)


def expand_grid(axes: dict[str, Sequence[Any]]) -> list[dict[str, Any]]:
    """Cartesian product of the sweep axes."""
    if not axes or any(len(values) == 0 for values in axes.values()):
        raise ValueError("The sweep grid is empty.")
    names = list(axes)
    return [
        dict(zip(names, cell, strict=True))
        for cell in itertools.product(*axes.values())
    ]


class ExperimentManager:
    """Runs one command with a resolved configuration.

    Every command except `prepare` writes into its own
    `<out>/<command>_<timestamp>/` folder holding a manifest with the resolved
    configuration.
    """

    def __init__(self, config: RunConfig, command: str) -> None:
        """Instantiate the manager; creates the run folder."""
        self.config = config
        self.command = command
        self.run_dir = config.out
        if command != "prepare":
            self.run_dir = self._create_run_dir()
            self._write_manifest()

    def _create_run_dir(self) -> Path:
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        run_dir = self.config.out / f"{self.command}_{stamp}"
        suffix = 1
        while run_dir.exists():
            run_dir = self.config.out / f"{self.command}_{stamp}_{suffix}"
            suffix += 1
        run_dir.mkdir(parents=True)
        return run_dir

    def _write_manifest(self, **extra: Any) -> None:
        manifest = {
            "command": self.command,
            "version": dcfrec.__version__,
            "created": datetime.now().isoformat(timespec="seconds"),
            "config": self.config.to_dict(),
        } | extra
        with (self.run_dir / FNAME_RUN_MANIFEST).open(mode="w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=4, default=str)

    def _input_folder(self) -> Path:
        if self.config.input is None:
            msg = f"`{self.command}` needs a prepared --input folder."
            raise MissingArtifactError(msg)
        if not (self.config.input / interactions.FNAME_MANIFEST).exists():
            msg = f"No prepared dataset was found at '{self.config.input}'"
            raise MissingArtifactError(msg)
        return self.config.input

    def load_dataset(self) -> interactions.Dataset:
        """Load the prepared dataset given as input."""
        return interactions.read_splits(self._input_folder())

    def prepare(self) -> interactions.Dataset:
        """Load, split and optionally corrupt a raw interaction file."""
        cfg = self.config
        if cfg.input is None:
            raise MissingArtifactError("`prepare` needs an --input interaction file.")
        raw = load_triplets(cfg.input, cfg.format)
        dataset = make_splits(raw, cfg.ratio, cfg.min_rating, cfg.seed)
        dataset = inject_noise(dataset, cfg.noise)
        validate_dataset(dataset)

        interactions.write_splits(
            dataset,
            self.run_dir,
            {key: cfg.to_dict()[key] for key in PREPARE_KEYS},
        )
        if cfg.noise_rate > 0:
            interactions.write_noise_mask(
                dataset, self.run_dir / interactions.FNAME_NOISE_MASK
            )
        print(
            "Finished preparing the dataset. Split files can be found at:\n"
            f"    {self.run_dir}"
        )
        return dataset

    def _new_model(self, dataset: interactions.Dataset, seed: int) -> EmbeddingModel:
        return init_model(
            dataset.num_users,
            dataset.num_items,
            self.config.dim,
            seed,
            self.config.plain_mf,
        )

    def _seed_folder(self, label: str, seed: int) -> Path:
        folder = self.run_dir / label / f"seed_{seed}"
        folder.mkdir(parents=True, exist_ok=True)
        return folder

    def _test_report(
        self,
        result: TrainingResult,
        dataset: interactions.Dataset,
        logs: RunLogs,
    ) -> MetricsReport:
        report = evaluate(result.model, dataset, self.config.K, split="test")
        noisy = dataset.noisy_sample_ids()
        if noisy:
            report.flip_precision = flip_precision(result.events, noisy)
        logs.metrics(result.best_epoch, "test", report.flat())
        return report

    def train(self) -> MetricsReport:
        """Train the selected method once per seed and summarize the test metrics."""
        cfg = self.config
        dataset = self.load_dataset()
        reports = []
        for seed in cfg.seed_list:
            folder = self._seed_folder(cfg.method, seed)
            logs = RunLogs(folder, cfg.method, seed, cfg.dump_ledger)
            result = train_method(
                cfg.method,
                dataset,
                self._new_model(dataset, seed),
                cfg.denoise(seed),
                cfg.optimizer,
                cfg.K,
                logs,
            )
            save_checkpoint(result.model, folder / FNAME_CHECKPOINT)
            reports.append(self._test_report(result, dataset, logs))

        summary = summarize(reports)
        write_summary(self.run_dir / FNAME_SUMMARY, {cfg.method: summary})
        print(
            f"Finished training {cfg.method} over {len(reports)} seed(s). "
            f"Results can be found at:\n    {self.run_dir}"
        )
        return summary

    def evaluate(self, checkpoints: Sequence[Path]) -> MetricsReport:
        """Evaluate stored checkpoints on the clean test split."""
        if not checkpoints:
            raise MissingArtifactError("`evaluate` needs at least one --checkpoint.")
        dataset = self.load_dataset()
        reports = []
        for number, checkpoint in enumerate(checkpoints):
            model = load_checkpoint(checkpoint, plain_mf=self.config.plain_mf)
            shape = (model.num_users, model.num_items)
            if shape != (dataset.num_users, dataset.num_items):
                msg = f"Checkpoint '{checkpoint}' does not match the dataset size."
                raise ValueError(msg)
            report = evaluate(model, dataset, self.config.K, split="test")
            record = {"checkpoint": str(checkpoint), "index": number} | report.flat()
            RunLogs(self.run_dir).append(FNAME_METRICS, record)
            reports.append(report)

        summary = summarize(reports)
        write_summary(self.run_dir / FNAME_SUMMARY, {self.config.method: summary})
        return summary

    def sweep(self, axes: dict[str, Sequence[Any]]) -> pd.DataFrame:
        """Train DCF over the Cartesian product of the axes, for every seed.

        Returns:
            One row per (cell, seed), sorted by validation NDCG@5.
        """
        cells = expand_grid(axes)
        dataset = self.load_dataset()
        rows = []
        for cell, seed in tqdm(
            list(itertools.product(cells, self.config.seed_list)), desc="sweep"
        ):
            cell_cfg = replace(self.config, **cell)
            label = "_".join(f"{k}={v}" for k, v in cell.items())
            logs = RunLogs(self._seed_folder(label, seed), "dcf", seed)
            result = train_dcf(
                dataset,
                self._new_model(dataset, seed),
                cfg=cell_cfg.denoise(seed),
                opt=cell_cfg.optimizer,
                ks=cell_cfg.K,
                logs=logs,
            )
            validation = evaluate(
                result.model,
                dataset,
                (*cell_cfg.K, STOPPING_METRIC[1]),
                split="validation",
            )
            test = self._test_report(result, dataset, logs)
            rows.append(
                cell
                | {"seed": seed, "validation_ndcg@5": validation.get(*STOPPING_METRIC)}
                | {f"test_{name}": value for name, value in test.flat().items()}
                | {"flip_precision": test.flip_precision}
            )

        table = pd.DataFrame(rows).sort_values(
            "validation_ndcg@5", ascending=False, kind="stable"
        )
        table.to_csv(self.run_dir / FNAME_SWEEP, index=False)
        print(f"Finished the sweep of {len(rows)} runs:\n    {self.run_dir}")
        return table

    def rq3(self, export_path: Path | None) -> pd.DataFrame:
        """Compare T-CE protecting the hard samples, a random control and plain T-CE."""
        if export_path is None or not export_path.exists():
            msg = f"No hard-sample export was found at '{export_path}'"
            raise MissingArtifactError(msg)
        export = HardSampleExport.read(export_path)
        dataset = self.load_dataset()
        protected = {
            "tce+hard": set(export.hard),
            "tce+random": set(export.random_control),
            "tce": None,
        }
        rows = []
        reports: dict[str, list[MetricsReport]] = {v: [] for v in RQ3_VARIANTS}
        for variant, seed in itertools.product(RQ3_VARIANTS, self.config.seed_list):
            logs = RunLogs(self._seed_folder(variant, seed), variant, seed)
            result = train_baseline(
                dataset,
                self._new_model(dataset, seed),
                "tce",
                self.config.denoise(seed),
                self.config.optimizer,
                protected=protected[variant],
                ks=self.config.K,
                logs=logs,
            )
            report = self._test_report(result, dataset, logs)
            reports[variant].append(report)
            rows.append(
                {
                    "variant": variant,
                    "seed": seed,
                    "protected": len(protected[variant] or ()),
                    "dropped": sum(r.dropped for r in result.reports),
                }
                | report.flat()
            )

        table = pd.DataFrame(rows)
        table.to_csv(self.run_dir / FNAME_RQ3, index=False)
        write_summary(
            self.run_dir / FNAME_SUMMARY,
            {variant: summarize(r) for variant, r in reports.items()},
        )
        print(f"Finished the hard-sample comparison:\n    {self.run_dir / FNAME_RQ3}")
        return table

    def rq4(self) -> pd.DataFrame:
        """Per-epoch flip precision of the progressive and the fixed schedule."""
        folder = self._input_folder()
        if not (folder / interactions.FNAME_NOISE_MASK).exists():
            msg = f"No noise mask was found in '{folder}'; prepare with --noise-rate."
            raise MissingArtifactError(msg)
        noisy = interactions.read_noise_mask(folder / interactions.FNAME_NOISE_MASK)
        dataset = self.load_dataset()

        series = []
        for schedule, seed in itertools.product(
            ("progressive", "fixed"), self.config.seed_list
        ):
            cfg = replace(self.config.denoise(seed), schedule=schedule)
            logs = RunLogs(self._seed_folder(schedule, seed), "dcf", seed)
            result = train_dcf(
                dataset,
                self._new_model(dataset, seed),
                cfg=cfg,
                opt=self.config.optimizer,
                ks=self.config.K,
                logs=logs,
            )
            table = flip_precision_series(result.events, noisy, result.epochs_trained)
            table.insert(0, "seed", seed)
            table.insert(0, "schedule", schedule)
            series.append(table)

        output = pd.concat(series, ignore_index=True)
        output.to_csv(self.run_dir / FNAME_RQ4, index=False)
        print(f"Finished the flip-precision comparison:\n    {self.run_dir}")
        return output

"""Training loops of DCF and the Normal / T-CE baselines."""

import json
import math
import warnings
from collections.abc import Iterable
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any
import numpy as np
from tqdm import tqdm
from dcfrec.datasets.interactions import Dataset
from dcfrec.datasets.sampling import batch_stream
from dcfrec.denoise.config import DenoiseConfig
from dcfrec.denoise.gates import DoubleCorrectionGate
from dcfrec.denoise.gates import NormalGate
from dcfrec.denoise.gates import SampleGate
from dcfrec.denoise.gates import TruncationGate
from dcfrec.denoise.hard_samples import FNAME_HARD_SAMPLES
from dcfrec.denoise.hard_samples import HardSampleExport
from dcfrec.denoise.hard_samples import export_hard_samples
from dcfrec.denoise.relabel import RelabelEvent
from dcfrec.denoise.relabel import write_events
from dcfrec.evaluation import EmptyEvaluationError
from dcfrec.evaluation import evaluate
from dcfrec.model.gmf import EmbeddingModel
from dcfrec.model.gmf import backward_and_step
from dcfrec.model.optimizer import OptimizerConfig
from dcfrec.robustloss import LossLedger


METHODS = ("dcf", "normal", "tce")
BASELINES = ("normal", "tce")
STOPPING_METRIC = ("ndcg", 5)

FNAME_EPOCHS = "epochs.jsonl"
FNAME_RELABEL = "relabel.jsonl"
FNAME_METRICS = "metrics.jsonl"
FNAME_LEDGER = "ledger.csv"


@dataclass(frozen=True)
class EpochReport:
    """Summary of one training epoch.

    `loss` is the mean retained loss over the batches, `threshold` is None when
    no label can flip.
    """

    epoch: int
    loss: float | None
    dropped: int
    flipped: int
    relabel_ratio: float | None = None
    threshold: float | None = None
    validation_ndcg: float | None = None

    def to_dict(self) -> dict[str, Any]:
        """Serialize the report (JSON has no infinity)."""
        record = asdict(self)
        if self.threshold is not None and math.isinf(self.threshold):
            record["threshold"] = None
        return record


@dataclass
class TrainingResult:
    """Trained model plus everything logged during training."""

    model: EmbeddingModel
    reports: list[EpochReport]
    events: list[RelabelEvent]
    labels: np.ndarray
    best_epoch: int
    ledger: LossLedger | None = None
    hard_samples: HardSampleExport | None = None
    validation: dict[int, dict[str, float]] = field(default_factory=dict)

    @property
    def epochs_trained(self) -> int:
        """Number of epochs actually run."""
        return len(self.reports)


@dataclass(frozen=True)
class RunLogs:
    """Where a training run writes its logs; nothing is written without a folder."""

    folder: Path | None = None
    method: str = ""
    seed: int = 0
    dump_ledger: bool = False

    def append(self, fname: str, record: dict[str, Any]) -> None:
        """Append one JSON record to a log file."""
        if self.folder is not None:
            with (self.folder / fname).open(mode="a", encoding="utf-8") as file:
                file.write(json.dumps(record) + "\n")

    def events(self, events: list[RelabelEvent]) -> None:
        """Append relabel events."""
        if self.folder is not None and events:
            write_events(events, self.folder / FNAME_RELABEL)

    def metrics(self, epoch: int, split: str, values: dict[str, float]) -> None:
        """Append one metrics record."""
        if self.folder is not None:
            record = {"method": self.method, "seed": self.seed, "epoch": epoch}
            self.append(FNAME_METRICS, record | {"split": split} | values)

    def ledger(self, ledger: LossLedger, epoch: int) -> None:
        """Append the ledger state of an epoch when dumping is enabled."""
        if self.folder is not None and self.dump_ledger:
            path = self.folder / FNAME_LEDGER
            ledger.to_frame(epoch).to_csv(
                path, mode="a", header=not path.exists(), index=False
            )


def _fit(
    dataset: Dataset,
    model: EmbeddingModel,
    gate: SampleGate,
    cfg: DenoiseConfig,
    opt: OptimizerConfig,
    ks: Iterable[int],
    logs: RunLogs,
) -> TrainingResult:
    """Shared epoch loop: stream batches, gate, step, correct labels, stop early."""
    labels = dataset.train.labels.astype(np.int8).copy()
    ks = tuple(sorted(set(ks) | {STOPPING_METRIC[1]}))
    reports: list[EpochReport] = []
    events: list[RelabelEvent] = []
    validation: dict[int, dict[str, float]] = {}
    early_stopping = cfg.patience > 0
    best_score, best_epoch, best_parameters, waited = -math.inf, 0, None, 0

    for epoch in tqdm(range(1, cfg.epochs + 1), desc=gate.name, leave=False):
        losses, dropped = [], 0
        for batch in batch_stream(
            dataset, cfg.batch_size, cfg.negatives, cfg.seed, epoch, labels
        ):
            weights = gate.weights(model, batch, epoch)
            dropped += int(np.sum(weights == 0))
            loss = backward_and_step(
                model, batch.users, batch.items, batch.labels, weights, opt
            )
            if loss is not None:
                losses.append(loss)
        if not model.is_finite():
            raise FloatingPointError(f"Model parameters diverged in epoch {epoch}.")

        correction = gate.end_epoch(labels, epoch)
        events.extend(correction.events)
        logs.events(correction.events)
        if isinstance(gate, DoubleCorrectionGate):
            logs.ledger(gate.ledger, epoch)

        score = None
        if early_stopping:
            try:
                report = evaluate(model, dataset, ks, split="validation")
            except EmptyEvaluationError:
                warnings.warn(
                    "No validation users; early stopping is disabled.", stacklevel=2
                )
                early_stopping = False
            else:
                validation[epoch] = report.flat()
                logs.metrics(epoch, "validation", validation[epoch])
                score = report.get(*STOPPING_METRIC)

        reports.append(
            EpochReport(
                epoch=epoch,
                loss=float(np.mean(losses)) if losses else None,
                dropped=dropped,
                flipped=len(correction.events),
                relabel_ratio=correction.ratio,
                threshold=correction.threshold,
                validation_ndcg=score,
            )
        )
        logs.append(FNAME_EPOCHS, reports[-1].to_dict())

        if score is None:
            continue
        if score > best_score:
            best_score, best_epoch, waited = score, epoch, 0
            best_parameters = model.copy_parameters()
        else:
            waited += 1
            if waited >= cfg.patience:
                tqdm.write(
                    f"{gate.name}: no validation improvement for {waited} epochs, "
                    f"stopping after epoch {epoch}."
                )
                break

    if best_parameters is not None:
        model.load_parameters(best_parameters)
    else:
        best_epoch = len(reports)
    return TrainingResult(
        model=model,
        reports=reports,
        events=events,
        labels=labels,
        best_epoch=best_epoch,
        validation=validation,
    )


def train_dcf(
    dataset: Dataset,
    model: EmbeddingModel,
    ledger: LossLedger | None = None,
    cfg: DenoiseConfig | None = None,
    opt: OptimizerConfig | None = None,
    ks: Iterable[int] = (5, 20),
    logs: RunLogs | None = None,
) -> TrainingResult:
    """Train with sample dropping by lower bound and progressive label correction.

    Args:
        dataset: Dataset to train on.
        model: Model, updated in place.
        ledger: Loss ledger of the train samples; a fresh one is created when
            omitted.
        cfg: Denoising settings.
        opt: Optimizer settings.
        ks: Cut-offs logged during validation.
        logs: Where to write the run logs.

    Returns:
        The training result, including the hard samples at the last epoch.
    """
    cfg = cfg or DenoiseConfig()
    logs = logs or RunLogs()
    num_samples = len(dataset.train)
    if ledger is None:
        ledger = LossLedger(num_samples, cfg.v, damping=cfg.damping)
    elif len(ledger) != num_samples or ledger.v != cfg.v:
        raise ValueError("The ledger does not match the train set or window length.")

    result = _fit(
        dataset,
        model,
        DoubleCorrectionGate(ledger, cfg),
        cfg,
        opt or OptimizerConfig(),
        ks,
        logs,
    )
    result.ledger = ledger
    result.hard_samples = export_hard_samples(
        ledger, result.epochs_trained, cfg, result.labels, seed=cfg.seed
    )
    if logs.folder is not None:
        result.hard_samples.write(logs.folder / FNAME_HARD_SAMPLES)
    return result


def train_baseline(
    dataset: Dataset,
    model: EmbeddingModel,
    variant: str,
    cfg: DenoiseConfig | None = None,
    opt: OptimizerConfig | None = None,
    protected: set[int] | None = None,
    ks: Iterable[int] = (5, 20),
    logs: RunLogs | None = None,
) -> TrainingResult:
    """Train with plain BCE ("normal") or truncated BCE ("tce").

    Args:
        dataset: Dataset to train on.
        model: Model, updated in place.
        variant: "normal" or "tce".
        cfg: Training settings; T-CE reads its drop schedule from it.
        opt: Optimizer settings.
        protected: Sample-ids T-CE never drops.
        ks: Cut-offs logged during validation.
        logs: Where to write the run logs.

    Returns:
        The training result.
    """
    cfg = cfg or DenoiseConfig()
    gate: SampleGate
    if variant == "normal":
        if protected:
            raise ValueError("Protected samples only apply to the tce variant.")
        gate = NormalGate()
    elif variant == "tce":
        gate = TruncationGate(cfg, protected)
    else:
        msg = (
            f"Unknown baseline '{variant}'.\n"
            f"Choose from: {', '.join(BASELINES)}."
        )
        raise ValueError(msg)
    return _fit(
        dataset, model, gate, cfg, opt or OptimizerConfig(), ks, logs or RunLogs()
    )


def train_method(
    method: str,
    dataset: Dataset,
    model: EmbeddingModel,
    cfg: DenoiseConfig | None = None,
    opt: OptimizerConfig | None = None,
    ks: Iterable[int] = (5, 20),
    logs: RunLogs | None = None,
) -> TrainingResult:
    """Train with one of `METHODS`."""
    if method == "dcf":
        return train_dcf(dataset, model, cfg=cfg, opt=opt, ks=ks, logs=logs)
    if method in BASELINES:
        return train_baseline(dataset, model, method, cfg, opt, ks=ks, logs=logs)
    msg = f"Unknown method '{method}'.\nChoose from: {', '.join(METHODS)}."
    raise ValueError(msg)

# ruff: noqa: D102
"""Per-batch sample gates of the training methods.

A gate decides which examples of a batch backpropagate (weight 1) and which
are dropped (weight 0), and may correct labels at the end of an epoch.
"""

import math
from dataclasses import dataclass
from dataclasses import field
from typing import Protocol
import numpy as np
from scipy.special import expit
from dcfrec.datasets.sampling import Batch
from dcfrec.denoise.config import DenoiseConfig
from dcfrec.denoise.relabel import RelabelEvent
from dcfrec.denoise.relabel import apply_relabel
from dcfrec.denoise.schedules import drop_fraction
from dcfrec.denoise.schedules import relabel_cut
from dcfrec.denoise.schedules import relabel_ratio
from dcfrec.denoise.schedules import relabel_threshold
from dcfrec.denoise.schedules import select_retained
from dcfrec.model.gmf import EmbeddingModel
from dcfrec.model.gmf import bce_loss
from dcfrec.model.gmf import logits
from dcfrec.robustloss import LossLedger


@dataclass(frozen=True)
class Correction:
    """Outcome of the end-of-epoch label correction."""

    events: list[RelabelEvent] = field(default_factory=list)
    ratio: float | None = None
    threshold: float | None = None


class SampleGate(Protocol):
    """Gate of one training method."""

    name: str

    def weights(self, model: EmbeddingModel, batch: Batch, epoch: int) -> np.ndarray:
        """Return the 0/1 weight of every example of the batch."""
        ...

    def end_epoch(self, labels: np.ndarray, epoch: int) -> Correction:
        """Correct the current labels (in place) after an epoch."""
        ...


def batch_losses(model: EmbeddingModel, batch: Batch, rows: np.ndarray) -> np.ndarray:
    """BCE of the given batch rows under the current parameters."""
    probability = expit(logits(model, batch.users[rows], batch.items[rows]))
    return bce_loss(probability, batch.labels[rows])


def current_positives(batch: Batch) -> np.ndarray:
    """Rows of the persistent samples whose current label is 1."""
    return np.flatnonzero(batch.persistent & (batch.labels == 1))


def _weights_without(batch: Batch, rows: np.ndarray, dropped: np.ndarray) -> np.ndarray:
    weights = np.ones(len(batch))
    weights[rows[np.isin(batch.sample_ids[rows], dropped)]] = 0.0
    return weights


class NormalGate:
    """Plain BCE: every example is used."""

    name = "normal"

    def weights(self, model: EmbeddingModel, batch: Batch, epoch: int) -> np.ndarray:
        return np.ones(len(batch))

    def end_epoch(self, labels: np.ndarray, epoch: int) -> Correction:
        return Correction()


class TruncationGate:
    """Truncated BCE: drops the positives with the largest instantaneous loss.

    Args:
        cfg: Settings holding the drop schedule.
        protected: Sample-ids that are never dropped.
    """

    name = "tce"

    def __init__(self, cfg: DenoiseConfig, protected: set[int] | None = None) -> None:
        """Create the gate."""
        self.cfg = cfg
        self.protected = np.array(sorted(protected or ()), dtype=np.int64)

    def weights(self, model: EmbeddingModel, batch: Batch, epoch: int) -> np.ndarray:
        rows = current_positives(batch)
        ids = batch.sample_ids[rows]
        _, dropped = select_retained(
            ids,
            batch_losses(model, batch, rows),
            drop_fraction(epoch, self.cfg),
            protected=np.isin(ids, self.protected),
        )
        return _weights_without(batch, rows, dropped)

    def end_epoch(self, labels: np.ndarray, epoch: int) -> Correction:
        return Correction()


class DoubleCorrectionGate:
    """Drops positives by their loss lower bound and relabels the noisiest ones.

    Per batch the current positives record their loss in the ledger and the
    ones with the largest ℓ* are dropped; the retained ones survive. After the
    epoch the positives with the largest ℓ* over the whole train set are
    flipped to 0, up to the relabel ratio r_i of all B train positives.
    """

    name = "dcf"

    def __init__(self, ledger: LossLedger, cfg: DenoiseConfig) -> None:
        """Create the gate."""
        self.ledger = ledger
        self.cfg = cfg

    def weights(self, model: EmbeddingModel, batch: Batch, epoch: int) -> np.ndarray:
        rows = current_positives(batch)
        ids = batch.sample_ids[rows]
        self.ledger.record_loss(ids, batch_losses(model, batch, rows), epoch)
        bounds = self.ledger.lower_bound(ids, epoch, self.cfg.bound)
        retained, dropped = select_retained(ids, bounds, drop_fraction(epoch, self.cfg))
        self.ledger.mark_survival(retained, epoch)
        return _weights_without(batch, rows, dropped)

    def end_epoch(self, labels: np.ndarray, epoch: int) -> Correction:
        ratio = relabel_ratio(epoch, self.cfg.R, self.cfg.O, self.cfg.schedule)
        positives = np.flatnonzero((labels == 1) & self.ledger.has_history)
        bounds = np.full(len(labels), np.nan)
        if len(positives) > 0:
            bounds[positives] = self.ledger.lower_bound(
                positives, epoch, self.cfg.bound
            )

        # flipped samples rank above every positive, so r_i caps the total
        ranking = np.where(labels == 1, bounds, math.inf)
        ranking = np.sort(ranking[~np.isnan(ranking)])
        if len(ranking) == 0:
            return Correction(ratio=ratio, threshold=math.inf)
        threshold = relabel_threshold(ranking, ratio)
        flipped = int(np.sum(labels == 0))
        quota = len(labels) - relabel_cut(len(labels), ratio) - flipped
        events = apply_relabel(
            labels, bounds, threshold, epoch, limit=quota, ledger=self.ledger
        )
        return Correction(events=events, ratio=ratio, threshold=threshold)

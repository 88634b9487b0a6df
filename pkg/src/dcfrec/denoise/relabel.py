"""Label correction of high-confidence noisy positives."""

import json
from dataclasses import asdict
from dataclasses import dataclass
from pathlib import Path
import numpy as np
from dcfrec.robustloss import LossLedger


@dataclass(frozen=True)
class RelabelEvent:
    """Audit record of one label flip."""

    sample: int
    epoch: int
    old: int
    new: int
    bound: float

    def __post_init__(self) -> None:
        """Validate the initialized RelabelEvent."""
        if self.old not in (0, 1) or self.new != 1 - self.old:
            msg = f"Invalid flip {self.old} -> {self.new} of sample {self.sample}."
            raise ValueError(msg)


def flip_label(label: np.ndarray | int, indicator: np.ndarray | int) -> np.ndarray:
    """Corrected label y' = y + 𝕀 (1 - 2y)."""
    label = np.asarray(label)
    return label + np.asarray(indicator) * (1 - 2 * label)


def apply_relabel(
    labels: np.ndarray,
    bounds: np.ndarray,
    threshold: float,
    epoch: int,
    limit: int | None = None,
    ledger: LossLedger | None = None,
) -> list[RelabelEvent]:
    """Flip the current positives whose lower bound reaches the threshold.

    Flips are permanent for the rest of the run: `labels` is updated in place
    and the loss windows of the flipped samples are cleared.

    Args:
        labels: Current label per sample-id, updated in place.
        bounds: ℓ* per sample-id; NaN for samples without a bound.
        threshold: Relabel threshold T_i.
        epoch: Current epoch.
        limit: Maximum number of new flips. The largest bounds go first,
            ties by ascending sample-id.
        ledger: Ledger whose windows of flipped samples are cleared.

    Returns:
        One event per flip, ordered by sample-id.
    """
    bounds = np.asarray(bounds, dtype=float)
    with np.errstate(invalid="ignore"):
        eligible = (labels == 1) & ~np.isnan(bounds) & (bounds >= threshold)
    candidates = np.flatnonzero(eligible)
    if limit is not None:
        order = np.lexsort((candidates, -bounds[candidates]))
        candidates = np.sort(candidates[order[: max(limit, 0)]])
    if len(candidates) == 0:
        return []

    old = labels[candidates].copy()
    labels[candidates] = flip_label(old, 1)
    if ledger is not None:
        ledger.clear(candidates)
    return [
        RelabelEvent(
            sample=int(s), epoch=epoch, old=int(o), new=int(1 - o), bound=float(b)
        )
        for s, o, b in zip(candidates, old, bounds[candidates], strict=True)
    ]


def write_events(events: list[RelabelEvent], path: Path) -> None:
    """Append relabel events to a JSON-lines file."""
    with path.open(mode="a", encoding="utf-8") as file:
        for event in events:
            file.write(json.dumps(asdict(event)) + "\n")


def read_events(path: Path) -> list[RelabelEvent]:
    """Read the relabel events of a JSON-lines file."""
    if not path.exists():
        raise FileNotFoundError(f"Relabel log '{path}' could not be found.")
    with path.open(encoding="utf-8") as file:
        return [RelabelEvent(**json.loads(line)) for line in file if line.strip()]

"""Hard samples: kept by the lower bound although their mean loss is large."""

import json
from dataclasses import asdict
from dataclasses import dataclass
from pathlib import Path
import numpy as np
from dcfrec.denoise.config import DenoiseConfig
from dcfrec.denoise.schedules import drop_count
from dcfrec.denoise.schedules import drop_fraction
from dcfrec.robustloss import LossLedger


FNAME_HARD_SAMPLES = "hard_samples.json"


@dataclass(frozen=True)
class HardSampleExport:
    """Hard samples of a DCF run plus an equal-size random control set."""

    epoch: int
    drop_fraction: float
    hard: list[int]
    random_control: list[int]
    seed: int

    def __post_init__(self) -> None:
        """Validate the initialized HardSampleExport."""
        if len(self.hard) != len(self.random_control):
            raise ValueError("The random control set must match the hard set in size.")

    def write(self, path: Path) -> None:
        """Write the export as json."""
        with path.open(mode="w", encoding="utf-8") as file:
            json.dump(asdict(self), file, indent=4)

    @classmethod
    def read(cls, path: Path) -> "HardSampleExport":
        """Read an export written by `write`."""
        if not path.exists():
            raise FileNotFoundError(f"Hard-sample export '{path}' could not be found.")
        with path.open(encoding="utf-8") as file:
            return cls(**json.load(file))


def drop_rankings(
    ledger: LossLedger,
    epoch: int,
    cfg: DenoiseConfig,
    labels: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Samples dropped by a mean-loss criterion and by the lower bound.

    Both criteria drop the same number of samples, ⌈drop_fraction(epoch) x B⌉
    of the B current positives with a loss history; ties go to the lowest
    sample-id.

    Returns:
        The sample-ids dropped by μ̃ and the ones dropped by ℓ*.
    """
    candidates = ledger.has_history
    if labels is not None:
        candidates &= labels == 1
    ids = np.flatnonzero(candidates)
    if len(ids) == 0:
        empty = np.array([], dtype=np.int64)
        return empty, empty

    bounds = ledger.lower_bound(ids, epoch, cfg.bound)
    means = ledger.last_mean[ids]
    k = drop_count(drop_fraction(epoch, cfg), len(ids))
    by_mean = ids[np.lexsort((ids, -means))[:k]]
    by_bound = ids[np.lexsort((ids, -bounds))[:k]]
    return np.sort(by_mean), np.sort(by_bound)


def hard_sample_set(
    ledger: LossLedger,
    epoch: int,
    cfg: DenoiseConfig,
    labels: np.ndarray | None = None,
) -> set[int]:
    """Samples a mean-loss criterion would drop but the lower bound retains."""
    by_mean, by_bound = drop_rankings(ledger, epoch, cfg, labels)
    return {int(s) for s in np.setdiff1d(by_mean, by_bound)}


def export_hard_samples(
    ledger: LossLedger,
    epoch: int,
    cfg: DenoiseConfig,
    labels: np.ndarray | None = None,
    seed: int = 0,
) -> HardSampleExport:
    """Hard samples plus a same-size uniform draw from the bound-dropped samples."""
    by_mean, by_bound = drop_rankings(ledger, epoch, cfg, labels)
    hard = np.setdiff1d(by_mean, by_bound)
    rng = np.random.default_rng(seed)
    control = np.sort(rng.choice(by_bound, size=len(hard), replace=False))
    return HardSampleExport(
        epoch=epoch,
        drop_fraction=drop_fraction(epoch, cfg),
        hard=[int(s) for s in hard],
        random_control=[int(s) for s in control],
        seed=seed,
    )

"""Damped windowed loss estimates and their concentration lower bound.

Every persistent training sample keeps a ring buffer of its last `v` damped
losses. Their mean, the confirmed mean μ̃, is robust to occasional loss spikes;
the lower bound ℓ* subtracts a penalty that shrinks as the sample survives more
epochs without being dropped:

    ℓ* = μ̃ - σ² (i + σ² log(2i) / i²) / (d - σ²)

with `i` the epoch, `d` the survival count and σ² an adjustment factor.
"""

from dataclasses import dataclass
import numpy as np
import pandas as pd


LEDGER_COLUMNS = ["sample_id", "epoch", "d", "mu_tilde", "lower_bound"]


class NoHistoryError(Exception):
    """Error raised when a sample has no recorded loss yet."""

    ...


class InvalidBoundError(Exception):
    """Error raised when the survival count does not exceed σ²."""

    ...


class SurvivalError(Exception):
    """Error raised when a sample is marked as retained twice in one epoch."""

    ...


@dataclass(frozen=True)
class BoundConfig:
    """Settings of the confirmed mean and its lower bound."""

    sigma2: float = 0.01
    v: int = 3

    def __post_init__(self) -> None:
        """Validate the initialized BoundConfig."""
        # d starts at 1, so σ² must stay below it.
        if not 0 <= self.sigma2 < 1:
            raise ValueError(f"sigma2 should be in [0, 1), got {self.sigma2}.")
        if self.v < 1:
            raise ValueError(f"The window length v should be at least 1, got {self.v}.")


def damp(loss: np.ndarray | float) -> np.ndarray:
    """Damping function φ(ℓ) = log(1 + ℓ + ℓ²/2).

    φ is non-decreasing, φ(0) = 0 and φ(ℓ) ≤ ℓ.

    Args:
        loss: Non-negative raw loss values.

    Returns:
        The damped values.
    """
    loss = np.asarray(loss, dtype=float)
    if np.any(loss < 0):
        raise ValueError("The damping function is only defined for losses >= 0.")
    return np.log1p(loss + loss * loss / 2)


def concentration_lower_bound(
    mu: np.ndarray | float,
    d: np.ndarray | float,
    epoch: int,
    sigma2: float,
) -> np.ndarray:
    """Lower confidence bound ℓ* of a confirmed mean.

    Args:
        mu: Confirmed mean(s) μ̃.
        d: Survival count(s).
        epoch: Global epoch counter i (natural log is used).
        sigma2: Adjustment factor σ².

    Returns:
        ℓ*, equal to μ̃ when σ² = 0.
    """
    mu = np.asarray(mu, dtype=float)
    d = np.asarray(d, dtype=float)
    if epoch < 1:
        raise ValueError(f"The epoch counter starts at 1, got {epoch}.")
    if sigma2 == 0:
        return mu.copy()
    if np.any(d <= sigma2):
        raise InvalidBoundError(f"The survival count must exceed sigma2={sigma2}.")
    penalty = sigma2 * (epoch + sigma2 * np.log(2 * epoch) / epoch**2) / (d - sigma2)
    return mu - penalty


class LossLedger:
    """Per-sample loss windows, survival counts and cached estimates.

    Args:
        num_samples: Number of persistent samples (sample-ids 0..num_samples-1).
        v: Window length.
        damping: Store φ(ℓ) instead of the raw loss. Disabling it gives the
            plain windowed mean.
    """

    def __init__(self, num_samples: int, v: int, damping: bool = True) -> None:
        """Create an empty ledger."""
        if v < 1:
            raise ValueError(f"The window length v should be at least 1, got {v}.")
        self.v = v
        self.damping = damping
        self.window = np.zeros((num_samples, v))
        self.filled = np.zeros(num_samples, dtype=np.int64)
        self.head = np.zeros(num_samples, dtype=np.int64)
        self.d = np.ones(num_samples, dtype=np.int64)
        self.last_mean = np.full(num_samples, np.nan)
        self.last_bound = np.full(num_samples, np.nan)
        self._survived_epoch = np.zeros(num_samples, dtype=np.int64)

    def __len__(self) -> int:
        """Return the number of tracked samples."""
        return len(self.d)

    @property
    def has_history(self) -> np.ndarray:
        """Mask of the samples with at least one recorded loss."""
        return self.filled > 0

    def record_loss(
        self, sample: np.ndarray | int, loss: np.ndarray | float, epoch: int
    ) -> None:
        """Push the (damped) loss of each sample, evicting the oldest when full.

        Args:
            sample: Sample-id(s), each at most once.
            loss: Raw loss per sample.
            epoch: Current epoch.
        """
        ids = _unique_ids(sample)
        loss = np.broadcast_to(np.asarray(loss, dtype=float), ids.shape)
        stored = damp(loss) if self.damping else loss
        self.window[ids, self.head[ids]] = stored
        self.head[ids] = (self.head[ids] + 1) % self.v
        self.filled[ids] = np.minimum(self.filled[ids] + 1, self.v)

    def confirmed_mean(self, sample: np.ndarray | int) -> np.ndarray:
        """Mean of the stored values; over fewer than v values for short histories.

        Raises:
            NoHistoryError: If a sample has no recorded loss.
        """
        ids = np.atleast_1d(np.asarray(sample, dtype=np.int64))
        filled = self.filled[ids]
        if np.any(filled == 0):
            missing = ids[filled == 0][:5].tolist()
            raise NoHistoryError(f"No loss history for sample(s) {missing}.")
        # unfilled slots hold zeros
        mean = self.window[ids].sum(axis=1) / filled
        self.last_mean[ids] = mean
        return mean

    def lower_bound(
        self, sample: np.ndarray | int, epoch: int, cfg: BoundConfig
    ) -> np.ndarray:
        """Compute and cache ℓ* of each sample at the given epoch."""
        ids = np.atleast_1d(np.asarray(sample, dtype=np.int64))
        bound = concentration_lower_bound(
            self.confirmed_mean(ids), self.d[ids], epoch, cfg.sigma2
        )
        self.last_bound[ids] = bound
        return bound

    def mark_survival(self, retained: np.ndarray | int, epoch: int) -> None:
        """Increment the survival count of the retained samples.

        Raises:
            SurvivalError: If a sample was already marked in this epoch.
        """
        ids = _unique_ids(retained)
        if np.any(self._survived_epoch[ids] == epoch):
            raise SurvivalError(f"A sample was marked as retained twice in {epoch=}.")
        self.d[ids] += 1
        self._survived_epoch[ids] = epoch

    def clear(self, sample: np.ndarray | int) -> None:
        """Forget the loss window and cached estimates of the samples."""
        ids = np.atleast_1d(np.asarray(sample, dtype=np.int64))
        self.window[ids] = 0.0
        self.filled[ids] = 0
        self.head[ids] = 0
        self.last_mean[ids] = np.nan
        self.last_bound[ids] = np.nan

    def to_frame(self, epoch: int) -> pd.DataFrame:
        """Return the cached estimates of all samples with a loss history."""
        ids = np.flatnonzero(self.has_history)
        return pd.DataFrame(
            {
                "sample_id": ids,
                "epoch": epoch,
                "d": self.d[ids],
                "mu_tilde": self.last_mean[ids],
                "lower_bound": self.last_bound[ids],
            },
            columns=LEDGER_COLUMNS,
        )


def _unique_ids(sample: np.ndarray | int) -> np.ndarray:
    ids = np.atleast_1d(np.asarray(sample, dtype=np.int64))
    if len(np.unique(ids)) != len(ids):
        raise ValueError("Each sample may appear only once per update.")
    return ids

"""Hyperparameters of the denoising trainers."""

from dataclasses import dataclass
from dcfrec.robustloss import BoundConfig


SCHEDULES = ("progressive", "fixed")


@dataclass(frozen=True)
class DenoiseConfig:
    """Settings of the training loop, sample dropping and label correction.

    Attributes:
        v: Loss window length.
        sigma2: Adjustment factor σ² of the lower bound.
        R: Final relabel ratio.
        O: Epoch at which the relabel ratio saturates.
        drop_max: Maximum share of positives dropped per batch.
        drop_warmup: Epochs over which the drop share ramps up to drop_max.
        epochs: Maximum number of epochs N.
        batch_size: Examples (positives plus sampled negatives) per batch.
        negatives: Sampled negatives per persistent sample.
        seed: Seed of the shuffle and negative sampling.
        patience: Epochs without validation NDCG@5 improvement before
            stopping; 0 disables early stopping.
        damping: Average damped losses (False averages the raw losses).
        schedule: "progressive" ramps the relabel ratio up to R at epoch O,
            "fixed" uses R from the first epoch on.
    """

    v: int = 3
    sigma2: float = 0.01
    R: float = 0.01
    O: int = 10
    drop_max: float = 0.1
    drop_warmup: int = 10
    epochs: int = 50
    batch_size: int = 1024
    negatives: int = 1
    seed: int = 0
    patience: int = 10
    damping: bool = True
    schedule: str = "progressive"

    def __post_init__(self) -> None:
        """Validate the initialized DenoiseConfig."""
        if not 0 <= self.R < 1:
            msg = f"The relabel ratio R should be in [0, 1), got {self.R}."
            raise ValueError(msg)
        if self.O < 1:
            raise ValueError(f"The saturation epoch O should be at least 1: {self.O}.")
        if not 0 <= self.drop_max < 1:
            msg = f"drop_max should be in [0, 1), got {self.drop_max}."
            raise ValueError(msg)
        if self.drop_warmup < 1:
            raise ValueError("drop_warmup should be at least 1.")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size should be at least 1.")
        if self.negatives < 0 or self.patience < 0:
            raise ValueError("negatives and patience cannot be negative.")
        if self.schedule not in SCHEDULES:
            msg = (
                f"Unknown relabel schedule '{self.schedule}'.\n"
                f"Choose from: {', '.join(SCHEDULES)}."
            )
            raise ValueError(msg)
        # raises on an invalid sigma2 or v
        self.bound  # noqa: B018

    @property
    def bound(self) -> BoundConfig:
        """The lower-bound settings."""
        return BoundConfig(sigma2=self.sigma2, v=self.v)

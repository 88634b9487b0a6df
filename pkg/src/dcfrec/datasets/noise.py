"""Synthetic false-positive injection with known ground truth."""

import math
from dataclasses import dataclass
import numpy as np
from dcfrec.datasets.interactions import Dataset
from dcfrec.datasets.interactions import InteractionTable
from dcfrec.datasets.validation import CapacityError


@dataclass(frozen=True)
class NoiseSpec:
    """Amount of injected noise.

    `noise_rate` is the number of injected false positives relative to the clean
    train positives.
    """

    noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate the initialized NoiseSpec."""
        if not 0 <= self.noise_rate < 1:
            raise ValueError(
                f"The noise rate should be in [0, 1), got {self.noise_rate}."
            )


def inject_noise(dataset: Dataset, spec: NoiseSpec) -> Dataset:
    """Add false-positive train interactions at non-interacted (user, item) pairs.

    Pairs removed from the test split by the clean-test rule count as
    interacted.

    Injected rows are appended to `train`, so existing sample-ids are unchanged,
    and carry `truly_noisy=True`.

    Args:
        dataset: Clean dataset.
        spec: Noise rate and seed.

    Returns:
        A new dataset with the injected interactions.

    Raises:
        CapacityError: If there are fewer non-interacted pairs than requested.
    """
    # tolerance keeps e.g. 0.29 * 100 from flooring to 28
    num_noisy = math.floor(spec.noise_rate * dataset.num_train_positives + 1e-9)
    if num_noisy == 0:
        return dataset

    observed = dataset.observed_codes()
    free = dataset.num_users * dataset.num_items - len(observed)
    if num_noisy > free:
        msg = (
            f"Cannot inject {num_noisy} noisy interactions: only {free} "
            "non-interacted (user, item) pairs are available."
        )
        raise CapacityError(msg)

    rng = np.random.default_rng(spec.seed)
    candidates = np.setdiff1d(
        np.arange(dataset.num_users * dataset.num_items, dtype=np.int64),
        observed,
        assume_unique=True,
    )
    codes = np.sort(rng.choice(candidates, size=num_noisy, replace=False))

    injected = InteractionTable(
        users=codes // dataset.num_items,
        items=codes % dataset.num_items,
        labels=np.ones(num_noisy, dtype=np.int8),
        ratings=np.full(num_noisy, np.nan),
        truly_noisy=np.ones(num_noisy, dtype=bool),
    )
    return Dataset(
        num_users=dataset.num_users,
        num_items=dataset.num_items,
        train=dataset.train.concat(injected),
        validation=dataset.validation,
        test=dataset.test,
        excluded_codes=dataset.excluded_codes,
    )

"""Epoch-wise training batches with sampled negatives."""

from collections.abc import Iterator
from dataclasses import dataclass
import numpy as np
from dcfrec.datasets.interactions import Dataset
from dcfrec.datasets.validation import CapacityError


# Sample-id of a transient, freshly sampled negative.
NEGATIVE_SAMPLE_ID = -1


@dataclass(frozen=True)
class Batch:
    """A mini-batch of training examples.

    Persistent samples carry their train row index as sample-id; sampled
    negatives carry `NEGATIVE_SAMPLE_ID`.
    """

    sample_ids: np.ndarray
    users: np.ndarray
    items: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        """Return the number of examples."""
        return len(self.sample_ids)

    @property
    def persistent(self) -> np.ndarray:
        """Mask of the examples that are persistent training samples."""
        return self.sample_ids != NEGATIVE_SAMPLE_ID


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """Return the random generator of one epoch."""
    return np.random.default_rng([seed, epoch])


def batch_stream(
    dataset: Dataset,
    batch_size: int,
    negatives_per_positive: int = 1,
    seed: int = 0,
    epoch: int = 1,
    labels: np.ndarray | None = None,
) -> Iterator[Batch]:
    """Stream the shuffled training samples of one epoch.

    Every persistent training sample is emitted exactly once, directly followed
    by `negatives_per_positive` freshly sampled items the user has no train
    interaction with.

    Args:
        dataset: The dataset to train on.
        batch_size: Number of examples (samples plus negatives) per batch.
        negatives_per_positive: Sampled negatives per persistent sample.
        seed: Run seed; together with `epoch` it fixes shuffle and negatives.
        epoch: Epoch number.
        labels: Current labels of the persistent samples, e.g. after label
            correction. Defaults to the observed labels.

    Yields:
        Batches of examples.
    """
    if batch_size < 1:
        raise ValueError(f"Batch size should be at least 1, got {batch_size}.")
    if negatives_per_positive < 0:
        raise ValueError("The number of negatives cannot be negative.")

    train = dataset.train
    labels = train.labels if labels is None else labels
    rng = epoch_rng(seed, epoch)

    order = rng.permutation(len(train))
    negatives = sample_negatives(
        dataset,
        np.repeat(train.users[order], negatives_per_positive),
        rng,
    ).reshape(len(order), negatives_per_positive)

    group = 1 + negatives_per_positive
    sample_ids = np.full((len(order), group), NEGATIVE_SAMPLE_ID, dtype=np.int64)
    sample_ids[:, 0] = order
    users = np.repeat(train.users[order], group).reshape(len(order), group)
    items = np.empty_like(sample_ids)
    items[:, 0] = train.items[order]
    items[:, 1:] = negatives
    example_labels = np.zeros_like(sample_ids, dtype=np.int8)
    example_labels[:, 0] = labels[order]

    sample_ids = sample_ids.ravel()
    users = users.ravel()
    items = items.ravel()
    example_labels = example_labels.ravel()
    for start in range(0, len(sample_ids), batch_size):
        window = slice(start, start + batch_size)
        yield Batch(
            sample_ids=sample_ids[window],
            users=users[window],
            items=items[window],
            labels=example_labels[window],
        )


def sample_negatives(
    dataset: Dataset, users: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw one uniformly random non-interacted train item for each user.

    Args:
        dataset: Dataset holding the train interactions to avoid.
        users: User of each draw.
        rng: Random generator.

    Returns:
        One item per entry of `users`.
    """
    num_items = dataset.num_items
    counts = np.array([len(p) for p in dataset.train_positive_index])
    if len(users) and np.any(counts[users] >= num_items):
        raise CapacityError("A user has interacted with every item.")

    observed = np.unique(dataset.train.pair_codes(num_items))
    items = rng.integers(0, num_items, size=len(users))
    if len(observed) == 0:
        return items
    pending = np.arange(len(users))
    while True:
        codes = users[pending] * num_items + items[pending]
        position = np.searchsorted(observed, codes)
        position[position == len(observed)] = 0
        pending = pending[observed[position] == codes]
        if len(pending) == 0:
            return items
        items[pending] = rng.integers(0, num_items, size=len(pending))

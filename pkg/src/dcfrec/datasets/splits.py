"""Per-user train / validation / clean-test splitting."""

import numpy as np
from dcfrec.datasets.interactions import Dataset
from dcfrec.datasets.interactions import InteractionTable
from dcfrec.datasets.interactions import RawInteractions
from dcfrec.datasets.validation import EmptyDatasetError


MIN_SPLIT_POSITIVES = 3


def make_splits(
    raw: RawInteractions,
    ratio: tuple[int, int, int] = (8, 1, 1),
    min_rating: float | None = 5,
    seed: int = 0,
) -> Dataset:
    """Split every user's positives into train, validation and test.

    Users with fewer than three positives keep all of them in train. Only the
    test split is filtered by the clean-test rule; filtered records leave the
    splits but are kept as `excluded_codes`.

    Args:
        raw: Loaded interactions. Records with a rating above zero are positives.
        ratio: Relative train / validation / test sizes.
        min_rating: Clean-test rule. Test interactions need a rating (or dwell
            time) of at least this value. `None` keeps the full test split.
        seed: Seed of the per-user shuffles.

    Returns:
        The split dataset.
    """
    if len(raw) == 0:
        raise EmptyDatasetError("Cannot split an empty set of interactions.")
    if len(ratio) != 3 or min(ratio) < 0 or ratio[0] <= 0:
        raise ValueError(f"Invalid split ratio {ratio}.")

    positive = raw.ratings > 0
    users = raw.users[positive]
    items = raw.items[positive]
    ratings = raw.ratings[positive]
    order = np.lexsort((items, users))
    users, items, ratings = users[order], items[order], ratings[order]
    bounds = np.searchsorted(users, np.arange(raw.num_users + 1))

    rng = np.random.default_rng(seed)
    total = sum(ratio)
    assignment = np.zeros(len(users), dtype=np.int8)  # 0 train, 1 val, 2 test
    for user in range(raw.num_users):
        start, stop = bounds[user], bounds[user + 1]
        count = stop - start
        if count < MIN_SPLIT_POSITIVES:
            continue
        n_val = _share(count, ratio[1], total)
        n_test = _share(count, ratio[2], total)
        shuffled = start + rng.permutation(count)
        assignment[shuffled[:n_val]] = 1
        assignment[shuffled[n_val : n_val + n_test]] = 2

    keep_test = assignment == 2
    if min_rating is not None:
        keep_test &= ratings >= min_rating
    excluded = (assignment == 2) & ~keep_test

    def table(mask: np.ndarray) -> InteractionTable:
        return InteractionTable(
            users=users[mask],
            items=items[mask],
            labels=np.ones(mask.sum(), dtype=np.int8),
            ratings=ratings[mask],
            truly_noisy=np.zeros(mask.sum(), dtype=bool),
        )

    return Dataset(
        num_users=raw.num_users,
        num_items=raw.num_items,
        train=table(assignment == 0),
        validation=table(assignment == 1),
        test=table(keep_test),
        excluded_codes=users[excluded] * raw.num_items + items[excluded],
    )


def _share(count: int, part: int, total: int) -> int:
    """Rounded size of one split; at least one record when the part is non-zero."""
    if part == 0:
        return 0
    return max(1, int(np.floor(count * part / total + 0.5)))

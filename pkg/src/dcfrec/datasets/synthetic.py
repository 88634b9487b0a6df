"""Synthetic interactions from a planted low-rank preference model."""

from pathlib import Path
import numpy as np
import pandas as pd
from dcfrec.datasets.interactions import RawInteractions


def generate_planted(
    num_users: int = 200,
    num_items: int = 100,
    rank: int = 8,
    positives_per_user: int = 15,
    seed: int = 0,
) -> RawInteractions:
    """Generate clean interactions from a planted rank-`rank` factor model.

    Each user interacts with the items of highest planted preference. All
    interactions get a rating of 5, so they pass the clean-test rule.

    Args:
        num_users: Number of users.
        num_items: Number of items.
        rank: Rank of the planted preference matrix.
        positives_per_user: Interactions per user.
        seed: Random seed.

    Returns:
        Raw interactions.
    """
    if not 0 < positives_per_user < num_items:
        raise ValueError("positives_per_user should be between 0 and num_items.")
    rng = np.random.default_rng(seed)
    user_factors = rng.normal(size=(num_users, rank))
    item_factors = rng.normal(size=(num_items, rank))
    preference = user_factors @ item_factors.T

    top = np.argsort(-preference, axis=1, kind="stable")[:, :positives_per_user]
    users = np.repeat(np.arange(num_users), positives_per_user)
    items = top.ravel()
    order = np.lexsort((items, users))
    return RawInteractions(
        users=users[order],
        items=items[order],
        ratings=np.full(len(users), 5.0),
        num_users=num_users,
        num_items=num_items,
        user_tokens=tuple(str(u) for u in range(num_users)),
        item_tokens=tuple(str(i) for i in range(num_items)),
    )


def write_triplets(raw: RawInteractions, path: Path) -> None:
    """Write raw interactions as a header-less `user \\t item \\t rating` file."""
    frame = pd.DataFrame(
        {
            "user": np.asarray(raw.user_tokens)[raw.users],
            "item": np.asarray(raw.item_tokens)[raw.items],
            "rating": raw.ratings.astype(int),
        }
    )
    frame.to_csv(path, sep="\t", header=False, index=False, lineterminator="\n")

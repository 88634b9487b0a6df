"""Interaction data types and their on-disk artifacts."""

import json
from collections.abc import Iterator
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any
import numpy as np
import pandas as pd


FNAME_MANIFEST = "manifest.json"
FNAME_NOISE_MASK = "noise_mask.csv"
FNAME_EXCLUDED = "excluded.tsv"
SPLIT_NAMES = ("train", "validation", "test")
SPLIT_COLUMNS = ["user", "item", "label", "rating", "truly_noisy"]


@dataclass(frozen=True)
class Interaction:
    """A single observed (user, item) interaction.

    Note: `rating` holds the explicit rating or dwell time in seconds and is only
    used to build the clean test split.
    """

    user: int
    item: int
    label: int
    rating: float | None = None
    truly_noisy: bool = False

    def __post_init__(self) -> None:
        """Validate the initialized Interaction."""
        if self.label not in (0, 1):
            raise ValueError(f"Interaction label must be 0 or 1, got {self.label}.")
        if self.user < 0 or self.item < 0:
            raise ValueError("User and item indices must be non-negative.")
        if self.truly_noisy and self.label != 1:
            raise ValueError("Only positive interactions can be flagged as noisy.")


@dataclass(frozen=True)
class InteractionTable:
    """Column-oriented list of interactions.

    Row `n` is the interaction with sample-id `n`. Iterating yields
    `Interaction` objects.
    """

    users: np.ndarray
    items: np.ndarray
    labels: np.ndarray
    ratings: np.ndarray
    truly_noisy: np.ndarray

    def __post_init__(self) -> None:
        """Cast the columns and check they have equal length."""
        object.__setattr__(self, "users", np.asarray(self.users, dtype=np.int64))
        object.__setattr__(self, "items", np.asarray(self.items, dtype=np.int64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int8))
        object.__setattr__(self, "ratings", np.asarray(self.ratings, dtype=float))
        object.__setattr__(self, "truly_noisy", np.asarray(self.truly_noisy, bool))
        lengths = {
            len(col)
            for col in (
                self.users,
                self.items,
                self.labels,
                self.ratings,
                self.truly_noisy,
            )
        }
        if len(lengths) > 1:
            raise ValueError("All interaction columns should have the same length.")
        if np.any((self.labels != 0) & (self.labels != 1)):
            raise ValueError("Interaction labels must be 0 or 1.")
        if np.any(self.truly_noisy & (self.labels != 1)):
            raise ValueError("Only positive interactions can be flagged as noisy.")

    def __len__(self) -> int:
        """Return the number of interactions."""
        return len(self.users)

    def __getitem__(self, index: int) -> Interaction:
        """Return the interaction with the given sample-id."""
        rating = float(self.ratings[index])
        return Interaction(
            user=int(self.users[index]),
            item=int(self.items[index]),
            label=int(self.labels[index]),
            rating=None if np.isnan(rating) else rating,
            truly_noisy=bool(self.truly_noisy[index]),
        )

    def __iter__(self) -> Iterator[Interaction]:
        """Iterate over the interactions in sample-id order."""
        for index in range(len(self)):
            yield self[index]

    @classmethod
    def empty(cls) -> "InteractionTable":
        """Return a table without rows."""
        return cls(
            np.empty(0), np.empty(0), np.empty(0), np.empty(0), np.empty(0, bool)
        )

    @classmethod
    def from_records(cls, records: list[Interaction]) -> "InteractionTable":
        """Build a table from a list of interactions."""
        if not records:
            return cls.empty()
        return cls(
            users=[r.user for r in records],
            items=[r.item for r in records],
            labels=[r.label for r in records],
            ratings=[np.nan if r.rating is None else r.rating for r in records],
            truly_noisy=[r.truly_noisy for r in records],
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "InteractionTable":
        """Build a table from a dataframe with the split-file columns."""
        return cls(
            users=frame["user"].to_numpy(),
            items=frame["item"].to_numpy(),
            labels=frame["label"].to_numpy(),
            ratings=frame["rating"].to_numpy(dtype=float),
            truly_noisy=frame["truly_noisy"].to_numpy(dtype=bool),
        )

    def to_frame(self) -> pd.DataFrame:
        """Return the table as a dataframe with the split-file columns."""
        return pd.DataFrame(
            {
                "user": self.users,
                "item": self.items,
                "label": self.labels,
                "rating": self.ratings,
                "truly_noisy": self.truly_noisy,
            },
            columns=SPLIT_COLUMNS,
        )

    def concat(self, other: "InteractionTable") -> "InteractionTable":
        """Append the rows of another table; existing sample-ids are unchanged."""
        return InteractionTable(
            users=np.concatenate([self.users, other.users]),
            items=np.concatenate([self.items, other.items]),
            labels=np.concatenate([self.labels, other.labels]),
            ratings=np.concatenate([self.ratings, other.ratings]),
            truly_noisy=np.concatenate([self.truly_noisy, other.truly_noisy]),
        )

    def pair_codes(self, num_items: int) -> np.ndarray:
        """Encode each (user, item) pair as a single integer."""
        return self.users * num_items + self.items


@dataclass(frozen=True)
class RawInteractions:
    """Interactions as loaded from disk, before splitting.

    Tokens are mapped to dense 0-based indices; `user_tokens[n]` is the original
    token of user index `n`.
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    num_users: int
    num_items: int
    user_tokens: tuple[str, ...] = ()
    item_tokens: tuple[str, ...] = ()

    def __len__(self) -> int:
        """Return the number of interactions."""
        return len(self.users)


@dataclass(frozen=True)
class DatasetStatistics:
    """Size summary of an interaction dataset."""

    num_users: int
    num_items: int
    num_interactions: int

    @property
    def sparsity(self) -> float:
        """Fraction of the user-item matrix without an interaction."""
        cells = self.num_users * self.num_items
        return 1.0 - self.num_interactions / cells if cells else 1.0

    def to_dict(self) -> dict[str, Any]:
        """Serialize the statistics."""
        return {
            "num_users": self.num_users,
            "num_items": self.num_items,
            "num_interactions": self.num_interactions,
            "sparsity": self.sparsity,
        }


@dataclass(frozen=True)
class Dataset:
    """Train / validation / clean-test interactions of one recommendation dataset.

    The dataset is immutable after construction and can be shared read-only.
    Sample-ids of persistent training samples are row indices into `train`.
    `excluded_codes` holds the pair codes of interactions removed by the
    clean-test rule; they stay observed, so noise is never injected there.
    """

    num_users: int
    num_items: int
    train: InteractionTable
    validation: InteractionTable
    test: InteractionTable
    excluded_codes: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=np.int64), repr=False
    )
    train_positive_index: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        """Validate index ranges and build the per-user train-positive index."""
        codes = np.unique(np.asarray(self.excluded_codes, dtype=np.int64))
        cells = self.num_users * self.num_items
        if codes.size and (codes[0] < 0 or codes[-1] >= cells):
            raise ValueError("Excluded pair code out of range.")
        object.__setattr__(self, "excluded_codes", codes)
        for name in SPLIT_NAMES:
            table: InteractionTable = getattr(self, name)
            if len(table) == 0:
                continue
            if table.users.max() >= self.num_users or table.users.min() < 0:
                raise ValueError(f"User index out of range in the {name} split.")
            if table.items.max() >= self.num_items or table.items.min() < 0:
                raise ValueError(f"Item index out of range in the {name} split.")

        positives = self.train.labels == 1
        users = self.train.users[positives]
        items = self.train.items[positives]
        order = np.lexsort((items, users))
        users, items = users[order], items[order]
        bounds = np.searchsorted(users, np.arange(self.num_users + 1))
        index = tuple(
            items[bounds[u] : bounds[u + 1]] for u in range(self.num_users)
        )
        object.__setattr__(self, "train_positive_index", index)

    @property
    def num_train_positives(self) -> int:
        """Number of persistent positive training samples."""
        return int(np.sum(self.train.labels == 1))

    def noisy_sample_ids(self) -> set[int]:
        """Sample-ids of the injected (ground-truth noisy) training samples."""
        return {int(s) for s in np.flatnonzero(self.train.truly_noisy)}

    def observed_codes(self) -> np.ndarray:
        """Sorted pair codes of every split plus the excluded test pairs."""
        codes = np.concatenate(
            [getattr(self, name).pair_codes(self.num_items) for name in SPLIT_NAMES]
            + [self.excluded_codes]
        )
        return np.unique(codes)

    def relevant_items(self, split: str) -> dict[int, set[int]]:
        """Map each user to the set of positive items in the given split."""
        table: InteractionTable = getattr(self, split)
        relevant: dict[int, set[int]] = {}
        for user, item, label in zip(
            table.users, table.items, table.labels, strict=True
        ):
            if label == 1:
                relevant.setdefault(int(user), set()).add(int(item))
        return relevant

    def describe(self) -> DatasetStatistics:
        """Summarize the dataset size over all splits."""
        return DatasetStatistics(
            num_users=self.num_users,
            num_items=self.num_items,
            num_interactions=sum(len(getattr(self, s)) for s in SPLIT_NAMES),
        )


def write_splits(
    dataset: Dataset,
    dataset_folder: Path,
    config: dict[str, Any] | None = None,
) -> None:
    """Write the split files and the manifest of a dataset.

    Args:
        dataset: Dataset to be written.
        dataset_folder: Folder where `train.tsv`, `validation.tsv`, `test.tsv`,
            the excluded test pairs and the manifest are stored.
        config: Resolved configuration used to prepare the dataset.
    """
    dataset_folder.mkdir(parents=True, exist_ok=True)
    for name in SPLIT_NAMES:
        table: InteractionTable = getattr(dataset, name)
        table.to_frame().to_csv(
            dataset_folder / f"{name}.tsv", sep="\t", index=False, lineterminator="\n"
        )

    json_dict = {
        "num_users": dataset.num_users,
        "num_items": dataset.num_items,
        "statistics": dataset.describe().to_dict(),
        "splits": {name: len(getattr(dataset, name)) for name in SPLIT_NAMES},
        "noisy_samples": int(dataset.train.truly_noisy.sum()),
        "excluded_pairs": len(dataset.excluded_codes),
        "config": config or {},
    }
    excluded = pd.DataFrame(
        {
            "user": dataset.excluded_codes // dataset.num_items,
            "item": dataset.excluded_codes % dataset.num_items,
        }
    )
    excluded.to_csv(
        dataset_folder / FNAME_EXCLUDED, sep="\t", index=False, lineterminator="\n"
    )

    json_object = json.dumps(json_dict, indent=4, default=str)
    with (dataset_folder / FNAME_MANIFEST).open(mode="w", encoding="utf-8") as file:
        file.write(json_object)


def read_splits(dataset_folder: Path) -> Dataset:
    """Load a dataset written by `write_splits`.

    Args:
        dataset_folder: Folder containing the split files and the manifest.

    Returns:
        The dataset.
    """
    manifest_path = dataset_folder / FNAME_MANIFEST
    if not manifest_path.exists():
        msg = f"No dataset manifest was found at '{manifest_path}'"
        raise FileNotFoundError(msg)
    with manifest_path.open(mode="r", encoding="utf-8") as file:
        manifest = json.load(file)

    tables = {}
    for name in SPLIT_NAMES:
        frame = pd.read_csv(dataset_folder / f"{name}.tsv", sep="\t")
        tables[name] = InteractionTable.from_frame(frame)
    excluded = pd.read_csv(dataset_folder / FNAME_EXCLUDED, sep="\t")
    num_items = manifest["num_items"]
    excluded_codes = (
        excluded["user"].to_numpy(dtype=np.int64) * num_items
        + excluded["item"].to_numpy(dtype=np.int64)
    )

    return Dataset(
        num_users=manifest["num_users"],
        num_items=manifest["num_items"],
        **tables,
        excluded_codes=excluded_codes,
    )


def write_noise_mask(dataset: Dataset, path: Path) -> None:
    """Write the injected training samples as `sample_id,user,item` CSV."""
    sample_ids = np.flatnonzero(dataset.train.truly_noisy)
    frame = pd.DataFrame(
        {
            "sample_id": sample_ids,
            "user": dataset.train.users[sample_ids],
            "item": dataset.train.items[sample_ids],
        }
    )
    frame.to_csv(path, index=False, lineterminator="\n")


def read_noise_mask(path: Path) -> set[int]:
    """Read the sample-ids from a noise-mask CSV."""
    if not path.exists():
        msg = f"No noise mask was found at '{path}'"
        raise FileNotFoundError(msg)
    frame = pd.read_csv(path)
    return {int(s) for s in frame["sample_id"]}

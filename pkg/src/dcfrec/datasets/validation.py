"""Checks for interaction data."""

import numpy as np
from dcfrec.datasets.interactions import Dataset


class ParseError(Exception):
    """Error raised when a record of an interaction file cannot be parsed."""

    ...


class EmptyDatasetError(Exception):
    """Error raised when an interaction file contains no records."""

    ...


class CapacityError(Exception):
    """Error raised when there are not enough non-interacted pairs to sample from."""

    ...


class SplitOverlapError(Exception):
    """Error raised when two splits share a (user, item) pair."""

    ...


def validate_dataset(dataset: Dataset) -> None:
    """Validate the structure of a prepared dataset.

    Args:
        dataset: The dataset to validate.

    Raises:
        SplitOverlapError: If the splits are not disjoint on (user, item) pairs.
    """
    compare_splits(dataset)


def compare_splits(dataset: Dataset) -> None:
    """Check that train, validation and test do not share (user, item) pairs.

    Args:
        dataset: The dataset to validate.

    Raises:
        SplitOverlapError: If any pair occurs in more than one split.
    """
    error_message = ""
    codes = {
        name: np.unique(getattr(dataset, name).pair_codes(dataset.num_items))
        for name in ("train", "validation", "test")
    }
    for first, second in (
        ("train", "validation"),
        ("train", "test"),
        ("validation", "test"),
    ):
        shared = np.intersect1d(codes[first], codes[second]).size
        if shared > 0:
            error_message += (
                f"\nThe '{first}' and '{second}' splits share {shared} pairs."
            )
    if len(error_message) > 0:
        raise SplitOverlapError(error_message)

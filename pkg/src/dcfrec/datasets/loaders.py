"""Readers for interaction files."""

from pathlib import Path
from typing import Protocol
import numpy as np
import pandas as pd
from dcfrec.datasets.interactions import RawInteractions
from dcfrec.datasets.validation import EmptyDatasetError
from dcfrec.datasets.validation import ParseError


## Ignore missing method docstrings: they are documented in the protocol.
# ruff: noqa: D102


MAX_FIELDS = 4


class InteractionFormat(Protocol):
    """An on-disk interaction format.

    Methods:
        load: Read the file into dense-indexed raw interactions.
    """

    name: str
    description: str

    def load(self, path: Path) -> RawInteractions:
        """Load an interaction file.

        Args:
            path: Path to the interaction file.

        Returns:
            Raw interactions with users and items mapped to 0-based indices.
        """
        ...


class TsvTriplet:
    """Header-less `user \\t item \\t rating [\\t timestamp]` file.

    User and item tokens are arbitrary strings, indexed in order of first
    appearance. The third column is either an explicit rating, a dwell time in
    seconds or a 0/1 label.
    """

    name = "tsv-triplet"
    description = "user<TAB>item<TAB>rating[<TAB>timestamp], UTF-8, no header"
    numeric_ids = False

    def load(self, path: Path) -> RawInteractions:
        frame = read_interaction_file(path)
        return to_raw_interactions(frame, numeric_ids=self.numeric_ids)


class MovieLens100K(TsvTriplet):
    """The MovieLens-100K `u.data` file (1-based numeric ids, with timestamp)."""

    name = "movielens-100k"
    description = "MovieLens-100K u.data: user<TAB>item<TAB>rating<TAB>timestamp"
    numeric_ids = True


def read_interaction_file(path: Path) -> pd.DataFrame:
    """Parse a tab-separated interaction file.

    Args:
        path: Path to the file.

    Returns:
        Dataframe with the columns `user`, `item` (string tokens) and `rating`.

    Raises:
        ParseError: If a record cannot be parsed; the message holds its line number.
        EmptyDatasetError: If the file holds no records.
    """
    if not path.exists():
        msg = f"Interaction file '{path}' could not be found."
        raise FileNotFoundError(msg)

    try:
        frame = pd.read_csv(
            path,
            sep="\t",
            header=None,
            names=list(range(MAX_FIELDS + 1)),
            dtype=str,
            skip_blank_lines=False,
            encoding="utf-8",
            engine="python",
        )
    except pd.errors.EmptyDataError as err:
        raise EmptyDatasetError(f"Interaction file '{path}' is empty.") from err
    except pd.errors.ParserError as err:
        raise ParseError(f"Could not parse '{path}': {err}") from err

    blank = frame.isna().all(axis=1)
    frame = frame[~blank]
    if frame.empty:
        raise EmptyDatasetError(f"Interaction file '{path}' is empty.")

    ratings = pd.to_numeric(frame[2], errors="coerce")
    invalid = (
        frame[0].isna()
        | frame[1].isna()
        | ratings.isna()
        | frame[MAX_FIELDS].notna()
    )
    if invalid.any():
        line_number = int(frame.index[invalid.to_numpy()][0]) + 1
        msg = (
            f"Malformed record at line {line_number} of '{path}'. Expected "
            "'user<TAB>item<TAB>rating[<TAB>timestamp]'."
        )
        raise ParseError(msg)

    return pd.DataFrame(
        {
            "user": frame[0].str.strip(),
            "item": frame[1].str.strip(),
            "rating": ratings.to_numpy(dtype=float),
        }
    )


def to_raw_interactions(frame: pd.DataFrame, numeric_ids: bool) -> RawInteractions:
    """Map tokens to dense indices and merge duplicate (user, item) records.

    Duplicates keep their maximum rating.

    Args:
        frame: Parsed interaction records.
        numeric_ids: Sort tokens numerically (e.g. the 1-based MovieLens ids)
            instead of indexing them in order of first appearance.

    Returns:
        Raw interactions.
    """
    if numeric_ids:
        try:
            user_keys = frame["user"].astype(np.int64)
            item_keys = frame["item"].astype(np.int64)
        except ValueError as err:
            raise ParseError("Expected numeric user and item ids.") from err
        users, user_tokens = pd.factorize(user_keys, sort=True)
        items, item_tokens = pd.factorize(item_keys, sort=True)
    else:
        users, user_tokens = pd.factorize(frame["user"], sort=False)
        items, item_tokens = pd.factorize(frame["item"], sort=False)

    merged = (
        pd.DataFrame({"user": users, "item": items, "rating": frame["rating"].values})
        .groupby(["user", "item"], sort=True)["rating"]
        .max()
        .reset_index()
    )

    return RawInteractions(
        users=merged["user"].to_numpy(dtype=np.int64),
        items=merged["item"].to_numpy(dtype=np.int64),
        ratings=merged["rating"].to_numpy(dtype=float),
        num_users=len(user_tokens),
        num_items=len(item_tokens),
        user_tokens=tuple(str(t) for t in user_tokens),
        item_tokens=tuple(str(t) for t in item_tokens),
    )


"""Catalog of interaction formats."""

from pathlib import Path
from dcfrec.datasets.interactions import RawInteractions
from dcfrec.datasets.loaders import InteractionFormat
from dcfrec.datasets.loaders import MovieLens100K
from dcfrec.datasets.loaders import TsvTriplet


# This object tracks which file formats can be read.
FORMATS: dict[str, type[InteractionFormat]] = {
    # All lowercase key.
    "tsv-triplet": TsvTriplet,
    "movielens-100k": MovieLens100K,
}


def load_triplets(path: Path, format: str) -> RawInteractions:  # noqa: A002
    """Load an interaction file in one of the registered formats.

    Args:
        path: Path to the interaction file.
        format: Name of the format, one of the `FORMATS` keys.

    Returns:
        Raw interactions.
    """
    if format.lower() not in FORMATS:
        msg = (
            f"The '{format}' format is not supported.\n"
            f"Please choose one of: {', '.join(FORMATS)}."
        )
        raise ValueError(msg)
    return FORMATS[format.lower()]().load(path)

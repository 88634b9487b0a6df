"""Interaction data: loading, splitting, noise injection and batching."""

from dcfrec.datasets import interactions
from dcfrec.datasets import validation
from dcfrec.datasets.catalog import FORMATS
from dcfrec.datasets.catalog import load_triplets
from dcfrec.datasets.interactions import Dataset
from dcfrec.datasets.interactions import Interaction
from dcfrec.datasets.interactions import InteractionTable
from dcfrec.datasets.interactions import RawInteractions
from dcfrec.datasets.noise import NoiseSpec
from dcfrec.datasets.noise import inject_noise
from dcfrec.datasets.sampling import NEGATIVE_SAMPLE_ID
from dcfrec.datasets.sampling import Batch
from dcfrec.datasets.sampling import batch_stream
from dcfrec.datasets.splits import make_splits


__all__ = [
    "interactions",
    "validation",
    "FORMATS",
    "NEGATIVE_SAMPLE_ID",
    "Batch",
    "Dataset",
    "Interaction",
    "InteractionTable",
    "NoiseSpec",
    "RawInteractions",
    "batch_stream",
    "inject_noise",
    "load_triplets",
    "make_splits",
]

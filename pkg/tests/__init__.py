"""This module contains all tests for dcfrec."""

from pathlib import Path
from dcfrec.datasets.interactions import Dataset
from dcfrec.datasets.noise import NoiseSpec
from dcfrec.datasets.noise import inject_noise
from dcfrec.datasets.splits import make_splits
from dcfrec.datasets.synthetic import generate_planted


test_folder = Path(__file__).resolve().parents[0]
data_folder = test_folder / "test_data"
ML_SAMPLE = data_folder / "u_sample.data"


def planted_dataset(
    num_users: int = 20,
    num_items: int = 30,
    positives: int = 8,
    noise_rate: float = 0.0,
    seed: int = 0,
    rank: int = 4,
) -> Dataset:
    """Small split dataset from the planted factor model."""
    raw = generate_planted(
        num_users, num_items, rank=rank, positives_per_user=positives, seed=seed
    )
    dataset = make_splits(raw, seed=seed)
    return inject_noise(dataset, NoiseSpec(noise_rate=noise_rate, seed=seed))

"""Hyperparameter reference for dcfrec.

Defaults follow the GMF training setup used in the denoising experiments:
Adam with a learning rate of 0.001, batches of 1024 examples, 32-dimensional
embeddings and one sampled negative per observed interaction.
"""

from typing import Any


DEFAULTS: dict[str, Any] = {
    # optimizer / backbone
    "lr": 0.001,
    "beta1": 0.9,
    "beta2": 0.999,
    "epsilon": 1e-8,
    "dim": 32,
    "plain_mf": False,
    # training loop
    "batch": 1024,
    "negatives": 1,
    "epochs": 50,
    "patience": 10,
    # sample dropping correction
    "v": 3,
    "sigma2": 0.01,
    "damping": True,
    "drop_max": 0.1,
    "drop_warmup": 10,
    # progressive label correction
    "R": 0.01,
    "O": 10,
    "schedule": "progressive",
    # data
    "format": "movielens-100k",
    "ratio": (8, 1, 1),
    "min_rating": 5,
    "noise_rate": 0.0,
    # experiment
    "method": "dcf",
    "seed": 0,
    "seeds": 1,
    "K": (5, 20),
    "dump_ledger": False,
}

# Tuning grids of the sensitivity study.
GRIDS: dict[str, tuple[float, ...]] = {
    "R": (0.0, 0.01, 0.03, 0.09, 0.27),
    "sigma2": (0.0, 0.001, 0.01, 0.1),
    "v": (1, 2, 3, 4, 5),
}

"""Epoch schedules and the drop / relabel selection rules."""

import math
import numpy as np
from dcfrec.denoise.config import DenoiseConfig


# Absorbs float error before flooring/ceiling products like 0.07 * 100.
_ROUNDING_TOLERANCE = 1e-9


def relabel_ratio(i: int, R: float, O: int, schedule: str = "progressive") -> float:
    """Share of train positives eligible for relabeling at epoch i.

    The progressive schedule is r_i = min(i R / O, R); the fixed schedule uses
    r_i = R for every i ≥ 1.
    """
    if i < 0:
        raise ValueError(f"The epoch cannot be negative, got {i}.")
    if schedule == "fixed":
        return R if i >= 1 else 0.0
    return min(i * R / O, R)


def drop_fraction(i: int, cfg: DenoiseConfig) -> float:
    """Share of batch positives dropped at epoch i: a linear ramp to drop_max."""
    if i < 0:
        raise ValueError(f"The epoch cannot be negative, got {i}.")
    return min(cfg.drop_max * i / cfg.drop_warmup, cfg.drop_max)


def drop_count(fraction: float, num_positives: int) -> int:
    """Number of positives to drop: ⌈fraction x num_positives⌉."""
    return math.ceil(fraction * num_positives - _ROUNDING_TOLERANCE)


def select_retained(
    sample_ids: np.ndarray,
    scores: np.ndarray,
    fraction: float,
    protected: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Split the positives of a batch into retained and dropped samples.

    The ⌈fraction x positives⌉ samples with the largest score are dropped,
    ties broken by ascending sample-id. Protected samples count towards the
    number of positives but are never dropped.

    Args:
        sample_ids: Sample-ids of the batch positives.
        scores: Drop criterion per sample (ℓ* for DCF, the raw loss for T-CE).
        fraction: Drop fraction in [0, 1).
        protected: Optional mask of samples that may not be dropped.

    Returns:
        Retained and dropped sample-ids, both in ascending order.
    """
    if not 0 <= fraction < 1:
        raise ValueError(f"The drop fraction should be in [0, 1), got {fraction}.")
    sample_ids = np.asarray(sample_ids, dtype=np.int64)
    scores = np.asarray(scores, dtype=float)
    candidates = np.arange(len(sample_ids))
    if protected is not None:
        candidates = candidates[~np.asarray(protected, dtype=bool)]

    n_drop = min(drop_count(fraction, len(sample_ids)), len(candidates))
    order = np.lexsort((sample_ids[candidates], -scores[candidates]))
    dropped_mask = np.zeros(len(sample_ids), dtype=bool)
    dropped_mask[candidates[order[:n_drop]]] = True
    return np.sort(sample_ids[~dropped_mask]), np.sort(sample_ids[dropped_mask])


def relabel_cut(num_positives: int, ratio: float) -> int:
    """Index ⌊B(1 - r_i)⌋ of the relabel threshold in the sorted bounds."""
    return math.floor(num_positives * (1 - ratio) + _ROUNDING_TOLERANCE)


def relabel_threshold(all_bounds: np.ndarray, ratio: float) -> float:
    """Threshold T_i = l[⌊B(1 - r_i)⌋] over the ascending bounds of all B positives.

    Returns +inf when the index falls outside the list, i.e. nothing flips.
    """
    if len(all_bounds) == 0:
        raise ValueError("Cannot compute a relabel threshold without any bounds.")
    index = relabel_cut(len(all_bounds), ratio)
    if index >= len(all_bounds):
        return math.inf
    return float(all_bounds[index])

"""Top-K ranking metrics, flip-precision audit and multi-seed aggregation."""

import math
import os
from collections.abc import Iterable
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import TYPE_CHECKING
from typing import Any
import dask
import numpy as np
import pandas as pd
from dcfrec.datasets.interactions import Dataset
from dcfrec.model.gmf import EmbeddingModel
from dcfrec.model.gmf import rank_scores


if TYPE_CHECKING:
    from dcfrec.denoise.relabel import RelabelEvent


METRICS = ("recall", "ndcg")
SUMMARY_COLUMNS = ["method", "metric", "K", "mean", "std"]
THREADS_ENV = "DCF_THREADS"
USERS_PER_TASK = 256


class EmptyEvaluationError(Exception):
    """Error raised when a split has no user to evaluate."""

    ...


class MetricsMismatchError(Exception):
    """Error raised when reports with different K sets are combined."""

    ...


def recall_at_k(
    ranked: Sequence[int] | np.ndarray, relevant: set[int], k: int
) -> float:
    """Share of the relevant items found in the top-K of the ranking."""
    if not relevant:
        raise ValueError("Recall is undefined without relevant items.")
    hits = sum(1 for item in list(ranked)[:k] if int(item) in relevant)
    return hits / len(relevant)


def ndcg_at_k(
    ranked: Sequence[int] | np.ndarray, relevant: set[int], k: int
) -> float:
    """Normalized discounted cumulative gain with 1-based discount 1/log2(p + 1)."""
    if not relevant:
        raise ValueError("NDCG is undefined without relevant items.")
    dcg = sum(
        1 / math.log2(position + 1)
        for position, item in enumerate(list(ranked)[:k], start=1)
        if int(item) in relevant
    )
    idcg = sum(1 / math.log2(p + 1) for p in range(1, min(len(relevant), k) + 1))
    return dcg / idcg


@dataclass
class MetricsReport:
    """Recall@K and NDCG@K values, optionally aggregated over seeds.

    `values` maps a metric name to its value per K. `std` holds the sample
    standard deviation of aggregated reports and stays empty for single runs.
    """

    values: dict[str, dict[int, float]]
    num_users: int = 0
    flip_precision: float | None = None
    std: dict[str, dict[int, float]] = field(default_factory=dict)
    per_seed: list["MetricsReport"] = field(default_factory=list)

    def __post_init__(self) -> None:
        """Validate the initialized MetricsReport."""
        for name, per_k in self.values.items():
            for k, value in per_k.items():
                if not 0 <= value <= 1:
                    raise ValueError(f"{name}@{k} = {value} lies outside [0, 1].")

    @property
    def ks(self) -> tuple[int, ...]:
        """The evaluated cut-offs."""
        return tuple(sorted(next(iter(self.values.values()), {})))

    def get(self, metric: str, k: int) -> float:
        """Return one metric value."""
        return self.values[metric][k]

    def flat(self) -> dict[str, float]:
        """Flatten to {"recall@5": ..., "ndcg@5": ...}."""
        return {
            f"{name}@{k}": value
            for name, per_k in self.values.items()
            for k, value in sorted(per_k.items())
        }

    def summary_rows(self, method: str) -> list[dict[str, Any]]:
        """Rows of the summary table: method, metric, K, mean, std."""
        return [
            {
                "method": method,
                "metric": name,
                "K": k,
                "mean": value,
                "std": self.std.get(name, {}).get(k, float("nan")),
            }
            for name, per_k in self.values.items()
            for k, value in sorted(per_k.items())
        ]


def _rank_users(
    model: EmbeddingModel,
    dataset: Dataset,
    users: np.ndarray,
    relevant: dict[int, set[int]],
    ks: tuple[int, ...],
) -> dict[str, dict[int, list[float]]]:
    """Rank the full catalog for a group of users and score every cut-off."""
    scores = (model.P[users] * model.h) @ model.Q.T
    top = max(ks)

    values: dict[str, dict[int, list[float]]] = {
        name: {k: [] for k in ks} for name in METRICS
    }
    for row, user in enumerate(users):
        ranked = rank_scores(scores[row], dataset.train_positive_index[user])[:top]
        for k in ks:
            values["recall"][k].append(recall_at_k(ranked, relevant[user], k))
            values["ndcg"][k].append(ndcg_at_k(ranked, relevant[user], k))
    return values


def evaluation_threads() -> int:
    """Number of evaluation threads, capped by the DCF_THREADS variable."""
    available = os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap is None:
        return available
    if not cap.isdigit() or int(cap) < 1:
        raise ValueError(f"{THREADS_ENV} should be a positive integer, got '{cap}'.")
    return min(int(cap), available)


def evaluate(
    model: EmbeddingModel,
    dataset: Dataset,
    ks: Iterable[int] = (5, 20),
    split: str = "test",
) -> MetricsReport:
    """Full-catalog ranking evaluation averaged over the users of a split.

    Each user's train positives are excluded from their ranking. Users without
    a positive in the split are skipped.

    Args:
        model: Trained model.
        dataset: Dataset holding the split.
        ks: Cut-offs.
        split: "test" or "validation".

    Returns:
        The per-user averaged metrics.
    """
    ks = tuple(sorted(set(ks)))
    if not ks or ks[0] < 1:
        raise ValueError(f"Cut-offs should be positive, got {ks}.")
    relevant = dataset.relevant_items(split)
    if not relevant:
        raise EmptyEvaluationError(f"The {split} split has no user to evaluate.")

    users = np.array(sorted(relevant), dtype=np.int64)
    tasks = [
        dask.delayed(_rank_users)(
            model, dataset, users[start : start + USERS_PER_TASK], relevant, ks
        )
        for start in range(0, len(users), USERS_PER_TASK)
    ]
    parts = dask.compute(
        *tasks, scheduler="threads", num_workers=evaluation_threads()
    )
    values = {
        name: {
            k: float(np.mean([v for part in parts for v in part[name][k]]))
            for k in ks
        }
        for name in METRICS
    }
    return MetricsReport(values=values, num_users=len(users))


def flip_precision(
    events: Iterable["RelabelEvent"], ground_truth: set[int]
) -> float | None:
    """Share of flipped samples that are truly noisy; None without any flip."""
    samples = [event.sample for event in events]
    if not samples:
        return None
    return sum(1 for s in samples if s in ground_truth) / len(samples)


def flip_precision_series(
    events: list["RelabelEvent"], ground_truth: set[int], epochs: int
) -> pd.DataFrame:
    """Per-epoch and cumulative flip precision over the epochs of one run."""
    rows = []
    for epoch in range(1, epochs + 1):
        rows.append(
            {
                "epoch": epoch,
                "flips": sum(1 for e in events if e.epoch == epoch),
                "flip_precision": flip_precision(
                    (e for e in events if e.epoch == epoch), ground_truth
                ),
                "cumulative_precision": flip_precision(
                    (e for e in events if e.epoch <= epoch), ground_truth
                ),
            }
        )
    return pd.DataFrame(rows)


def aggregate_seeds(reports: list[MetricsReport]) -> MetricsReport:
    """Mean and sample standard deviation (n - 1) of per-seed reports."""
    if len(reports) < 2:
        raise ValueError("At least two reports are needed to aggregate seeds.")
    reference = {name: set(per_k) for name, per_k in reports[0].values.items()}
    for report in reports[1:]:
        if {name: set(per_k) for name, per_k in report.values.items()} != reference:
            raise MetricsMismatchError("Reports were evaluated at different K sets.")

    values: dict[str, dict[int, float]] = {}
    std: dict[str, dict[int, float]] = {}
    for name, per_k in reference.items():
        values[name], std[name] = {}, {}
        for k in sorted(per_k):
            seeds = np.array([report.values[name][k] for report in reports])
            # the mean of values in [0, 1] can leave the range by rounding
            values[name][k] = float(np.clip(seeds.mean(), seeds.min(), seeds.max()))
            std[name][k] = float(seeds.std(ddof=1))

    precisions = [r.flip_precision for r in reports if r.flip_precision is not None]
    return MetricsReport(
        values=values,
        num_users=reports[0].num_users,
        flip_precision=float(np.mean(precisions)) if precisions else None,
        std=std,
        per_seed=list(reports),
    )


def summarize(reports: list[MetricsReport]) -> MetricsReport:
    """Aggregate several seeds, or pass a single report through."""
    if len(reports) == 1:
        return reports[0]
    return aggregate_seeds(reports)


def write_summary(path: Path, reports: dict[str, MetricsReport]) -> pd.DataFrame:
    """Write the `method,metric,K,mean,std` summary table of several methods."""
    rows = [row for method, r in reports.items() for row in r.summary_rows(method)]
    table = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    table.to_csv(path, index=False)
    return table


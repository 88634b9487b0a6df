"""Generalized matrix factorization with analytic gradients."""

import warnings
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
import numpy as np
from scipy.special import expit
from dcfrec.model.optimizer import AdamState
from dcfrec.model.optimizer import OptimizerConfig
from dcfrec.model.optimizer import adam_step


PROBABILITY_CLAMP = 1e-7
INIT_STD = 0.01
CHECKPOINT_MAGIC = "DCF-CKPT"
CHECKPOINT_VERSION = "v1"


@dataclass
class EmbeddingModel:
    """GMF model: ŷ = sigmoid(hᵀ (P[user] ⊙ Q[item])).

    With `plain_mf` the output weights `h` stay fixed at one, which reduces the
    model to a plain dot product.
    """

    P: np.ndarray
    Q: np.ndarray
    h: np.ndarray
    plain_mf: bool = False
    adam_state: AdamState = field(default_factory=AdamState)

    def __post_init__(self) -> None:
        """Check parameter shapes and create the optimizer state."""
        if self.P.shape[1] != self.Q.shape[1] or self.h.shape != (self.P.shape[1],):
            raise ValueError("Embedding dimensions of P, Q and h do not match.")
        if not self.adam_state.m:
            self.adam_state = AdamState.zeros_like(self.parameters())

    @property
    def num_users(self) -> int:
        """Number of user embeddings."""
        return self.P.shape[0]

    @property
    def num_items(self) -> int:
        """Number of item embeddings."""
        return self.Q.shape[0]

    @property
    def dim(self) -> int:
        """Embedding dimension k."""
        return self.P.shape[1]

    def parameters(self) -> dict[str, np.ndarray]:
        """Return the parameter arrays (not copies)."""
        return {"P": self.P, "Q": self.Q, "h": self.h}

    def copy_parameters(self) -> dict[str, np.ndarray]:
        """Return copies of the parameter arrays."""
        return {name: p.copy() for name, p in self.parameters().items()}

    def load_parameters(self, parameters: dict[str, np.ndarray]) -> None:
        """Overwrite the parameters in place."""
        for name, p in self.parameters().items():
            p[...] = parameters[name]

    def is_finite(self) -> bool:
        """Check that no parameter holds NaN or Inf."""
        return all(np.isfinite(p).all() for p in self.parameters().values())


def init_model(
    num_users: int, num_items: int, k: int, seed: int, plain_mf: bool = False
) -> EmbeddingModel:
    """Create a GMF model with N(0, 0.01²) embeddings and all-ones output weights.

    Args:
        num_users: Number of users.
        num_items: Number of items.
        k: Embedding dimension.
        seed: Random seed.
        plain_mf: Freeze the output weights at one.

    Returns:
        The initialized model with zeroed Adam moments.
    """
    if k < 1:
        raise ValueError(f"The embedding dimension should be at least 1, got {k}.")
    rng = np.random.default_rng(seed)
    return EmbeddingModel(
        P=rng.normal(0.0, INIT_STD, size=(num_users, k)),
        Q=rng.normal(0.0, INIT_STD, size=(num_items, k)),
        h=np.ones(k),
        plain_mf=plain_mf,
    )


def logits(model: EmbeddingModel, users: np.ndarray, items: np.ndarray) -> np.ndarray:
    """Compute z = hᵀ (P[user] ⊙ Q[item]) for each (user, item) pair."""
    return (model.P[users] * model.Q[items]) @ model.h


def predict(model: EmbeddingModel, user: int, item: int) -> float:
    """Predict the interaction probability of one (user, item) pair.

    Args:
        model: The GMF model.
        user: User index.
        item: Item index.

    Returns:
        ŷ in (0, 1).
    """
    if not 0 <= user < model.num_users:
        raise IndexError(f"User index {user} is out of range.")
    if not 0 <= item < model.num_items:
        raise IndexError(f"Item index {item} is out of range.")
    z = logits(model, np.array([user]), np.array([item]))
    return float(expit(z[0]))


def bce_loss(probability: np.ndarray | float, label: np.ndarray | float) -> np.ndarray:
    """Binary cross-entropy with the probability clamped to [1e-7, 1 - 1e-7].

    Args:
        probability: Predicted probability ŷ.
        label: Binary label y.

    Returns:
        ℓ = -[y log ŷ + (1 - y) log(1 - ŷ)], element-wise.
    """
    p = np.clip(probability, PROBABILITY_CLAMP, 1 - PROBABILITY_CLAMP)
    y = np.asarray(label, dtype=float)
    return -(y * np.log(p) + (1 - y) * np.log(1 - p))


def compute_gradients(
    model: EmbeddingModel,
    users: np.ndarray,
    items: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """Compute the mean BCE of the examples and its gradient.

    The logit gradient is (ŷ - y), so ∂ℓ/∂p = (ŷ - y)(h ⊙ q),
    ∂ℓ/∂q = (ŷ - y)(h ⊙ p) and ∂ℓ/∂h = (ŷ - y)(p ⊙ q).

    Args:
        model: The GMF model.
        users: User of each example.
        items: Item of each example.
        labels: Label of each example.

    Returns:
        Mean loss and the gradient per parameter name.
    """
    p = model.P[users]
    q = model.Q[items]
    probability = expit((p * q) @ model.h)
    loss = float(np.mean(bce_loss(probability, labels)))

    dz = (probability - labels) / len(users)
    grad_p = np.zeros_like(model.P)
    grad_q = np.zeros_like(model.Q)
    np.add.at(grad_p, users, dz[:, None] * (model.h * q))
    np.add.at(grad_q, items, dz[:, None] * (model.h * p))
    gradients = {"P": grad_p, "Q": grad_q}
    if not model.plain_mf:
        gradients["h"] = (dz[:, None] * (p * q)).sum(axis=0)
    return loss, gradients


def backward_and_step(
    model: EmbeddingModel,
    users: np.ndarray,
    items: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    opt: OptimizerConfig,
) -> float | None:
    """Take one Adam step on the mean BCE of the retained examples.

    Examples with weight 0 are dropped: they do not contribute to the loss or
    the gradient.

    Args:
        model: The GMF model, updated in place.
        users: User of each example.
        items: Item of each example.
        labels: Label of each example.
        weights: 1 for retained and 0 for dropped examples.
        opt: Optimizer settings.

    Returns:
        Mean retained loss, or None when every example was dropped.
    """
    retained = np.asarray(weights) > 0
    if not retained.any():
        warnings.warn(
            "Every example of the batch was dropped; skipping the update.",
            stacklevel=2,
        )
        return None

    loss, gradients = compute_gradients(
        model,
        users[retained],
        items[retained],
        np.asarray(labels, dtype=float)[retained],
    )
    adam_step(model.parameters(), gradients, model.adam_state, opt)
    return loss


def score_all_items(
    model: EmbeddingModel, user: int, exclude: set[int] | np.ndarray | None = None
) -> np.ndarray:
    """Rank the items of one user by descending logit.

    Ties are broken by ascending item index.

    Args:
        model: The GMF model.
        user: User index.
        exclude: Items left out of the ranking, e.g. the user's train positives.

    Returns:
        Item indices, best first.
    """
    return rank_scores((model.P[user] * model.h) @ model.Q.T, exclude)


def rank_scores(
    scores: np.ndarray, exclude: set[int] | np.ndarray | None = None
) -> np.ndarray:
    """Item indices by descending score, ties by ascending index, without `exclude`."""
    candidates = np.arange(len(scores))
    if exclude is not None and len(exclude) > 0:
        excluded = np.fromiter(exclude, dtype=np.int64, count=len(exclude))
        candidates = np.setdiff1d(candidates, excluded)
    return candidates[np.argsort(-scores[candidates], kind="stable")]


def save_checkpoint(model: EmbeddingModel, path: Path) -> None:
    """Write the model parameters to a checkpoint file.

    The file starts with the header line `DCF-CKPT v1 num_users num_items k`,
    followed by P, Q and h as little-endian float64 arrays in row-major order.
    """
    header = (
        f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION} "
        f"{model.num_users} {model.num_items} {model.dim}\n"
    )
    with path.open(mode="wb") as file:
        file.write(header.encode("ascii"))
        for p in (model.P, model.Q, model.h):
            file.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_checkpoint(path: Path, plain_mf: bool = False) -> EmbeddingModel:
    """Read a model written by `save_checkpoint`; the Adam state starts at zero."""
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint '{path}' could not be found.")
    with path.open(mode="rb") as file:
        header = file.readline().decode("ascii").split()
        payload = file.read()

    if len(header) != 5 or header[:2] != [CHECKPOINT_MAGIC, CHECKPOINT_VERSION]:
        raise ValueError(f"File '{path}' is not a {CHECKPOINT_MAGIC} checkpoint.")
    num_users, num_items, k = (int(value) for value in header[2:])
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    if len(values) != (num_users + num_items + 1) * k:
        raise ValueError(f"Checkpoint '{path}' is truncated.")

    return EmbeddingModel(
        P=values[: num_users * k].reshape(num_users, k).copy(),
        Q=values[num_users * k : (num_users + num_items) * k]
        .reshape(num_items, k)
        .copy(),
        h=values[(num_users + num_items) * k :].copy(),
        plain_mf=plain_mf,
    )

"""Adam optimizer over dense numpy parameters."""

from dataclasses import dataclass
from dataclasses import field
import numpy as np


@dataclass(frozen=True)
class OptimizerConfig:
    """Optimizer and backbone size settings."""

    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    embedding_dim: int = 32

    def __post_init__(self) -> None:
        """Validate the initialized OptimizerConfig."""
        if self.learning_rate <= 0:
            raise ValueError("The learning rate should be positive.")
        for name in ("beta1", "beta2"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"Adam decay rate {name} should be in (0, 1).")
        if self.epsilon <= 0:
            raise ValueError("Adam epsilon should be positive.")
        if self.embedding_dim < 1:
            raise ValueError("The embedding dimension should be at least 1.")


@dataclass
class AdamState:
    """First and second moment accumulators per parameter, plus the step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros_like(cls, parameters: dict[str, np.ndarray]) -> "AdamState":
        """Create zeroed moments that mirror the parameter shapes."""
        return cls(
            m={name: np.zeros_like(p) for name, p in parameters.items()},
            v={name: np.zeros_like(p) for name, p in parameters.items()},
        )


def adam_step(
    parameters: dict[str, np.ndarray],
    gradients: dict[str, np.ndarray],
    state: AdamState,
    opt: OptimizerConfig,
) -> None:
    """Apply one bias-corrected Adam update in place.

    Parameters without a gradient entry are left untouched (frozen).

    Args:
        parameters: Parameter arrays, updated in place.
        gradients: Gradient per parameter name.
        state: Moment accumulators, updated in place.
        opt: Optimizer settings.
    """
    state.t += 1
    correction1 = 1 - opt.beta1**state.t
    correction2 = 1 - opt.beta2**state.t
    for name, grad in gradients.items():
        m = state.m[name]
        v = state.v[name]
        m *= opt.beta1
        m += (1 - opt.beta1) * grad
        v *= opt.beta2
        v += (1 - opt.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        parameters[name] -= opt.learning_rate * m_hat / (np.sqrt(v_hat) + opt.epsilon)

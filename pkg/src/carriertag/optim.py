"""Adam optimizer over named parameter blocks (shared by both taggers)."""

from __future__ import annotations

import numpy as np


class NumericalError(RuntimeError):
    """Raised when a loss, gradient, or parameter turns non-finite."""


class AdamState:
    """First/second moment accumulators plus step counter for Adam updates.

    Minimizes: parameters move against the supplied gradients with bias
    correction, ``p -= lr * m_hat / (sqrt(v_hat) + eps)``.
    """

    def __init__(
        self,
        params: dict[str, np.ndarray],
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step = 0
        self.m = {name: np.zeros_like(p) for name, p in params.items()}
        self.v = {name: np.zeros_like(p) for name, p in params.items()}

    def apply(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """One in-place Adam step.  Raises NumericalError naming the first
        parameter block whose gradient or updated value is non-finite."""
        self.step += 1
        bias1 = 1.0 - self.beta1**self.step
        bias2 = 1.0 - self.beta2**self.step
        for name, p in params.items():
            g = grads[name]
            if not np.all(np.isfinite(g)):
                raise NumericalError(f"non-finite gradient in block {name!r}")
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + self.epsilon)
            if not np.all(np.isfinite(p)):
                raise NumericalError(f"non-finite parameters in block {name!r}")

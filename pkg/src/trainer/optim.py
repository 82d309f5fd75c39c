#!/usr/bin/env python3
"""Adam with exponential per-epoch learning-rate decay."""

from typing import Any, Dict, Mapping

import numpy as np

from src.exceptions import CheckpointError


class Adam:
    """
    Adam over a named map of numpy arrays.

    ``step`` returns new parameter arrays; inputs are never written to.
    """

    def __init__(
        self,
        params: Mapping[str, np.ndarray],
        lr: float,
        betas=(0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.lr = float(lr)
        self.beta1, self.beta2 = (float(b) for b in betas)
        self.eps = float(eps)
        self.t = 0
        self.m = {name: np.zeros_like(np.asarray(v, dtype=np.float64)) for name, v in params.items()}
        self.v = {name: np.zeros_like(np.asarray(v, dtype=np.float64)) for name, v in params.items()}

    def step(self, params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]) -> Dict[str, np.ndarray]:
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        updated = {}
        for name, value in params.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            updated[name] = value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return updated

    def state_dict(self) -> Dict[str, Any]:
        return {
            "lr": self.lr,
            "t": self.t,
            "betas": [self.beta1, self.beta2],
            "eps": self.eps,
            "m": {k: v.copy() for k, v in self.m.items()},
            "v": {k: v.copy() for k, v in self.v.items()},
        }

    def load_state_dict(self, state: Mapping[str, Any]):
        for moment in ("m", "v"):
            given = state[moment]
            for name, current in getattr(self, moment).items():
                if name not in given:
                    raise CheckpointError("Optimizer state is missing a moment", tensor=f"{moment}/{name}")
                if np.shape(given[name]) != current.shape:
                    raise CheckpointError(
                        "Optimizer moment shape does not match",
                        tensor=f"{moment}/{name}",
                        details={"expected": current.shape, "given": np.shape(given[name])},
                    )
        self.lr = float(state["lr"])
        self.t = int(state["t"])
        self.beta1, self.beta2 = (float(b) for b in state["betas"])
        self.eps = float(state["eps"])
        self.m = {k: np.array(state["m"][k], dtype=np.float64) for k in self.m}
        self.v = {k: np.array(state["v"][k], dtype=np.float64) for k in self.v}


class ExponentialDecay:
    """``lr(E) = lr0 * gamma ** E`` after E completed epochs."""

    def __init__(self, optimizer: Adam, base_lr: float, gamma: float):
        self.optimizer = optimizer
        self.base_lr = float(base_lr)
        self.gamma = float(gamma)

    def lr_at(self, epochs_completed: int) -> float:
        return self.base_lr * self.gamma**epochs_completed

    def set_epoch(self, epochs_completed: int) -> float:
        self.optimizer.lr = self.lr_at(epochs_completed)
        return self.optimizer.lr


__all__ = ["Adam", "ExponentialDecay"]

# ====================================
#  ADAM  🏃
# ====================================
"""
Functional Adam over named parameter tensors. adam_step never mutates its
arguments; it returns fresh parameter and state mappings.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
from django.conf import settings

from utils.exceptions import InvalidParams, ShapeMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.lr > 0:
            raise InvalidParams(f"Learning rate must be positive, got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InvalidParams(f"Adam betas must lie in [0, 1), got {self.beta1}, {self.beta2}")

    @classmethod
    def from_settings(cls):
        return cls(lr=settings.LEARNING_RATE)


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params):
        return cls(
            step=0,
            m={name: np.zeros_like(value) for name, value in params.items()},
            v={name: np.zeros_like(value) for name, value in params.items()},
        )


def adam_step(params, grads, state, hyper=None):
    """One bias-corrected Adam update. Returns (new_params, new_state)."""
    hyper = hyper or AdamHyper()
    if set(params) != set(grads):
        raise ShapeMismatch(f"Gradients for {sorted(set(grads) ^ set(params))} missing or unexpected")

    step = state.step + 1
    new_params, new_m, new_v = {}, {}, {}
    for name, value in params.items():
        grad = grads[name]
        if grad.shape != value.shape:
            raise ShapeMismatch(f"{name}: gradient {grad.shape} vs parameter {value.shape}")
        m = state.m.get(name, np.zeros_like(value))
        v = state.v.get(name, np.zeros_like(value))
        m = hyper.beta1 * m + (1.0 - hyper.beta1) * grad
        v = hyper.beta2 * v + (1.0 - hyper.beta2) * grad * grad
        m_hat = m / (1.0 - hyper.beta1 ** step)
        v_hat = v / (1.0 - hyper.beta2 ** step)
        new_params[name] = value - hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)
        new_m[name] = m
        new_v[name] = v

    return new_params, AdamState(step=step, m=new_m, v=new_v)

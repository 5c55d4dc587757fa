"""Bias-corrected Adam."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import Parameter


@dataclass
class AdamState:
    """First/second moment buffers and step counter for one parameter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_shape(cls, shape, **hyper) -> "AdamState":
        return cls(m=np.zeros(shape), v=np.zeros(shape), **hyper)


def adam_step(param: Parameter, state: AdamState) -> None:
    """One in-place update from param.grad; increments state.t."""
    g = param.grad
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * (g * g)
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    param.value -= state.alpha * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class Adam:
    """Adam over a parameter list, one AdamState each."""

    params: list
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    states: list = field(init=False)

    def __post_init__(self):
        self.states = [
            AdamState.for_shape(
                p.value.shape, alpha=self.alpha, beta1=self.beta1, beta2=self.beta2, eps=self.eps
            )
            for p in self.params
        ]

    def step(self) -> None:
        for p, s in zip(self.params, self.states):
            adam_step(p, s)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad[...] = 0.0

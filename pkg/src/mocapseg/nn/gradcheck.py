"""Finite-difference gradient verification.

Central differences at h=1e-4 on 64-bit values, compared against analytic
gradients with the scale-aware relative error
|a - n| / max(|a|, |n|), treated as 0 when both are below 1e-10.

For stochastic forward passes (dropout), callers pass a loss closure that
reseeds its RngStream identically on every call so the mask is frozen and
the loss is a deterministic function of the parameters.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from ..errors import NumericError
from .loss import masked_cross_entropy
from .rng import RngStream

_TINY = 1e-10


def relative_error(analytic: float, numeric: float) -> float:
    a, n = abs(analytic), abs(numeric)
    if a < _TINY and n < _TINY:
        return 0.0
    return abs(analytic - numeric) / max(a, n)


def central_difference(loss_fn, array: np.ndarray, flat_index: int, h: float = 1e-4) -> float:
    """d loss / d array[flat_index] by symmetric perturbation."""
    flat = array.reshape(-1)
    saved = flat[flat_index]
    flat[flat_index] = saved + h
    up = loss_fn()
    flat[flat_index] = saved - h
    down = loss_fn()
    flat[flat_index] = saved
    if not (np.isfinite(up) and np.isfinite(down)):
        raise NumericError("non-finite loss during finite-difference check")
    return (up - down) / (2.0 * h)


@dataclass
class GradCheckEntry:
    name: str
    max_rel_error: float
    checked: int


@dataclass
class GradCheckReport:
    entries: list
    tol: float

    @property
    def max_rel_error(self) -> float:
        return max((e.max_rel_error for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol

    def __str__(self) -> str:
        lines = [
            f"{e.name}: max rel err {e.max_rel_error:.3e} over {e.checked} entries"
            for e in self.entries
        ]
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"gradient check {verdict} (tol {self.tol:g}, worst {self.max_rel_error:.3e})")
        return "\n".join(lines)


def check_parameters(
    loss_fn,
    named_params,
    analytic_grads,
    h: float = 1e-4,
    tol: float = 1e-4,
    max_entries: int | None = None,
    sample_seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    Args:
        loss_fn: zero-argument callable returning the scalar loss from the
            CURRENT parameter values (deterministic across calls).
        named_params: list of (name, array) parameter values to perturb.
        analytic_grads: matching list of gradient arrays.
        max_entries: cap on perturbed entries per parameter (None = all),
            sampled deterministically from sample_seed.
    """
    entries = []
    for (name, value), grad in zip(named_params, analytic_grads):
        size = value.size
        if max_entries is not None and size > max_entries:
            name_key = zlib.crc32(name.encode("utf-8"))
            idx = RngStream(sample_seed).derive(name_key).choice_without_replacement(
                size, max_entries
            )
        else:
            idx = np.arange(size)
        worst = 0.0
        flat_grad = grad.reshape(-1)
        for i in idx:
            numeric = central_difference(loss_fn, value, int(i), h)
            worst = max(worst, relative_error(float(flat_grad[i]), numeric))
        entries.append(GradCheckEntry(name=name, max_rel_error=worst, checked=len(idx)))
    return GradCheckReport(entries=entries, tol=tol)


def gradient_check_model(
    model,
    image,
    labels: np.ndarray,
    mask: np.ndarray | None = None,
    h: float = 1e-4,
    tol: float = 1e-4,
    max_entries: int | None = 40,
    dropout_seed: int = 0,
    training: bool = True,
) -> GradCheckReport:
    """Model-level check through the full forward + masked cross-entropy.

    The dropout stream is re-created from dropout_seed on every forward, so
    the training-mode path is checked with a frozen mask.
    """

    def loss_fn() -> float:
        probs = model.forward(image, training=training, rng=RngStream(dropout_seed))
        loss, _ = masked_cross_entropy(probs, labels, mask)
        return loss

    model.zero_grad()
    probs = model.forward(image, training=training, rng=RngStream(dropout_seed))
    loss, dlogits = masked_cross_entropy(probs, labels, mask)
    if not np.isfinite(loss):
        raise NumericError("non-finite loss in gradient check")
    model.backward(dlogits)

    named = [(name, p.value) for name, p in model.parameters()]
    grads = [p.grad.copy() for _, p in model.parameters()]
    return check_parameters(
        loss_fn, named, grads, h=h, tol=tol, max_entries=max_entries, sample_seed=dropout_seed
    )

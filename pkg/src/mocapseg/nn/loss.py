"""Masked per-frame cross-entropy, fused with the softmax gradient."""

from __future__ import annotations

import numpy as np

PROB_FLOOR = 1e-12


def masked_cross_entropy(
    probs: np.ndarray, labels: np.ndarray, mask: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Mean negative log-probability of the true class over unmasked frames.

    Args:
        probs: (C, M) softmax output.
        labels: (M,) int class indices, all < C.
        mask: optional (M,) booleans; True = frame counts. None = all count.

    Returns:
        (loss, dlogits) where dlogits is the exact gradient with respect to
        the PRE-softmax logits: (probs - onehot) / K on the K unmasked
        frames, zero elsewhere. Masked frames contribute zero loss and zero
        gradient; an all-masked input yields loss 0. Probabilities are
        floored at 1e-12 inside the log.
    """
    c, m = probs.shape
    labels = np.asarray(labels)
    if labels.shape != (m,):
        raise ValueError(f"labels shape {labels.shape} does not match {m} frames")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ValueError("label index out of range")
    if mask is None:
        keep = np.ones(m, dtype=bool)
    else:
        keep = np.asarray(mask, dtype=bool)
        if keep.shape != (m,):
            raise ValueError("mask length must match frame count")

    k = int(keep.sum())
    if k == 0:
        return 0.0, np.zeros_like(probs)

    frames = np.arange(m)
    p_true = probs[labels, frames]
    losses = -np.log(np.maximum(p_true, PROB_FLOOR))
    loss = float(losses[keep].sum() / k)

    dlogits = probs.copy()
    dlogits[labels, frames] -= 1.0
    dlogits /= k
    dlogits[:, ~keep] = 0.0
    return loss, dlogits

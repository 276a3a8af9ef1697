"""Two-way attentive pooling between the node sets of a drug pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ddigraph import tensor as T
from ddigraph.errors import AllMasked, ShapeMismatch
from ddigraph.tensor import Tensor


@dataclass
class AlignmentMatrix:
    P: Tensor  # (n_a, n_b), P[i, j] couples atom i of A with atom j of B
    mask_a: np.ndarray
    mask_b: np.ndarray


@dataclass
class AttentionWeights:
    sigma_a: Tensor
    sigma_b: Tensor
    layer: int = 0


def soft_alignment(reps_a: Tensor, reps_b: Tensor, W: Tensor, mask_a=None, mask_b=None) -> AlignmentMatrix:
    """``tanh(reps_a @ W @ reps_b^T)``, i.e. tanh(A^T W B) with A, B as column sets."""
    if reps_a.shape[1] != W.shape[0] or reps_b.shape[1] != W.shape[1]:
        raise ShapeMismatch(f"soft_alignment: {reps_a.shape}, {W.shape}, {reps_b.shape}")
    P = T.tanh(T.matmul(T.matmul(reps_a, W), T.transpose(reps_b)))
    if mask_a is None:
        mask_a = np.ones(reps_a.shape[0])
    if mask_b is None:
        mask_b = np.ones(reps_b.shape[0])
    return AlignmentMatrix(P, np.asarray(mask_a, float), np.asarray(mask_b, float))


def attention_weights(align: AlignmentMatrix, mask_a=None, mask_b=None, layer: int = 0) -> AttentionWeights:
    """Row-wise max over live columns scores A's atoms, column-wise max over
    live rows scores B's atoms; each is then a masked softmax.

    Masked rows and columns of ``P`` are excluded from both maxima, so
    whatever sits there cannot influence the weights.
    """
    mask_a = align.mask_a if mask_a is None else np.asarray(mask_a, float)
    mask_b = align.mask_b if mask_b is None else np.asarray(mask_b, float)
    if not (mask_a > 0).any() or not (mask_b > 0).any():
        raise AllMasked("each drug needs at least one live atom")
    row_scores = T.masked_max(align.P, mask_a, mask_b, axis=1)
    col_scores = T.masked_max(align.P, mask_a, mask_b, axis=0)
    return AttentionWeights(
        sigma_a=T.masked_softmax(row_scores, mask_a),
        sigma_b=T.masked_softmax(col_scores, mask_b),
        layer=layer,
    )


def attentive_gather(reps: Tensor, sigma: Tensor) -> Tensor:
    """``sum_v sigma_v * r_v`` as a ``(1, d)`` row."""
    if sigma.value.ndim != 1 or sigma.shape[0] != reps.shape[0]:
        raise ShapeMismatch(f"attentive_gather: sigma {sigma.shape}, reps {reps.shape}")
    return T.matmul(T.reshape(sigma, (1, sigma.shape[0])), reps)

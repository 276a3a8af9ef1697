"""Degree-indexed graph convolution and the softmax readout baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ddigraph import tensor as T
from ddigraph.errors import DegreeOverflow, ShapeMismatch
from ddigraph.features import MAX_DEGREE, FeaturizedDrug
from ddigraph.tensor import Parameter, Tensor


@dataclass
class GcnLayerWeights:
    """One weight matrix per atom degree (0..5), no bias.

    With ``shared`` set, every degree uses ``H[0]``.
    """

    H: list[Parameter]
    shared: bool = False

    @property
    def d_in(self) -> int:
        return self.H[0].shape[0]

    @property
    def d_out(self) -> int:
        return self.H[0].shape[1]

    def matrices(self) -> list[Parameter]:
        return [self.H[0]] * (MAX_DEGREE + 1) if self.shared else list(self.H)


def gcn_layer(reps: Tensor, neighbors, degree, weights: GcnLayerWeights) -> Tensor:
    """``relu((r_v + sum_{u in N(v)} r_u) @ H[deg v])`` for every real atom.

    Padding rows (``degree < 0``) come out as zeros.
    """
    if reps.value.ndim != 2 or reps.shape[1] != weights.d_in:
        raise ShapeMismatch(f"gcn_layer: reps {reps.shape} vs weights d_in={weights.d_in}")
    degree = np.asarray(degree)
    if degree.max(initial=-1) > MAX_DEGREE:
        raise DegreeOverflow(f"atom degree {degree.max()} exceeds {MAX_DEGREE}")
    summed = T.neighbor_sum(reps, neighbors)
    return T.relu(T.degree_matmul(summed, weights.matrices(), degree))


def run_encoder(drug: FeaturizedDrug, layers) -> list[Tensor]:
    """Per-layer node representations, one matrix per GCN layer."""
    reps = T.constant(drug.node_features, "atom_features")
    stack = []
    for w in layers:
        reps = gcn_layer(reps, drug.neighbors, drug.degree, w)
        stack.append(reps)
    return stack


def graph_gather_softmax(stack, gather_weights, mask) -> Tensor:
    """Fingerprint-style readout: sum over live atoms and layers of
    ``softmax(r_v^L @ W^L)`` taken over the feature axis.

    Not used by the attentive model; kept as the non-attentive baseline.
    """
    if len(stack) != len(gather_weights):
        raise ShapeMismatch("one gather matrix per layer required")
    mask = np.asarray(mask, dtype=np.float64)
    live = np.flatnonzero(mask > 0)
    total = None
    for reps, W in zip(stack, gather_weights):
        if reps.shape[0] != mask.shape[0]:
            raise ShapeMismatch("mask length does not match node count")
        logits = T.matmul(reps, W)
        width = logits.shape[1]
        ones = np.ones(width)
        for v in live:
            row = T.reshape(_row(logits, v), (width,))
            term = T.masked_softmax(row, ones)
            total = term if total is None else T.add(total, term)
    return total


def _row(mat: Tensor, v: int) -> Tensor:
    shape = mat.shape

    def back(g):
        grad = np.zeros(shape)
        grad[v] = g
        return (grad,)

    return Tensor(mat.value[v : v + 1].copy(), (mat,), back, "row")

"""Synthetic pair data with a planted substructure, for sanity training runs."""

from __future__ import annotations

import numpy as np

from ddigraph.data import PairDataset, PairRecord

FRAGMENTS = (
    "C", "CC", "C(C)C", "c1ccccc1", "C(=O)", "N", "O", "C(Cl)", "C1CCCCC1",
    "CC(F)", "c1ccncc1", "C(O)", "CN(C)",
)  # fmt: skip
MOTIF = "S(=O)(=O)N"


def random_drug(rng: np.random.Generator, with_motif: bool, n_fragments=(2, 4)) -> str:
    k = int(rng.integers(n_fragments[0], n_fragments[1] + 1))
    parts = [FRAGMENTS[i] for i in rng.integers(len(FRAGMENTS), size=k)]
    if with_motif:
        parts.insert(int(rng.integers(0, k + 1)), MOTIF)
    return "C" + "".join(parts)


def motif_pairs(n_pairs: int = 50, seed: int = 0) -> PairDataset:
    """Half positives (both drugs carry a sulfonamide), half negatives (neither does)."""
    rng = np.random.default_rng(seed)
    seen: set[str] = set()

    def fresh(with_motif):
        while True:
            s = random_drug(rng, with_motif)
            if s not in seen:
                seen.add(s)
                return s

    n_pos = n_pairs // 2
    records = []
    for i in range(n_pairs):
        label = int(i < n_pos)
        records.append(PairRecord(fresh(bool(label)), fresh(bool(label)), label))
    order = rng.permutation(len(records))
    return PairDataset([records[i] for i in order])

"""Pair datasets: CSV I/O, negative sampling, train/test split, k-fold."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ddigraph.errors import DDIError, MalformedRow, PoolExhausted
from ddigraph.features import MAX_NODES, featurize
from ddigraph.smiles import parse

HEADER = ["smiles_a", "smiles_b", "label"]


@dataclass(frozen=True)
class PairRecord:
    smiles_a: str
    smiles_b: str
    label: int
    source: str = "given"  # given | positive | sampled-negative

    @property
    def key(self) -> tuple[str, str]:
        return pair_key(self.smiles_a, self.smiles_b)


def pair_key(a: str, b: str) -> tuple[str, str]:
    """Order-free identity of a pair: (a, b) and (b, a) are the same pair."""
    return (a, b) if a <= b else (b, a)


@dataclass
class PairDataset:
    records: list[PairRecord] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for r in self.records:
            if r.label not in (0, 1):
                raise ValueError(f"label {r.label!r} not in {{0, 1}}")
            if r.key in seen:
                raise ValueError(f"duplicate pair {r.key}")
            seen.add(r.key)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=np.int64)

    def subset(self, indices) -> "PairDataset":
        return PairDataset([self.records[i] for i in indices])

    def smiles(self) -> list[str]:
        seen = dict.fromkeys(s for r in self.records for s in (r.smiles_a, r.smiles_b))
        return list(seen)

    def __add__(self, other: "PairDataset") -> "PairDataset":
        return PairDataset(self.records + other.records)


def load_pairs(path, max_nodes: int = MAX_NODES) -> PairDataset:
    """Read a ``smiles_a,smiles_b,label`` CSV.

    Row numbers in errors are file line numbers (the header is line 1).
    Every SMILES is parsed and featurized so bad molecules fail here.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != HEADER:
            raise MalformedRow(1, f"header must be {','.join(HEADER)}")
        records, seen, checked = [], {}, {}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise MalformedRow(line_no, f"expected 3 fields, got {len(row)}")
            a, b, label = (c.strip() for c in row)
            if label not in ("0", "1"):
                raise MalformedRow(line_no, f"label must be 0 or 1, got {label!r}")
            for smi in (a, b):
                if smi not in checked:
                    try:
                        featurize(parse(smi), max_nodes)
                        checked[smi] = None
                    except DDIError as exc:
                        raise MalformedRow(line_no, f"{type(exc).__name__}: {exc}") from exc
            key = pair_key(a, b)
            if key in seen:
                raise MalformedRow(line_no, f"duplicate of the pair on line {seen[key]}")
            seen[key] = line_no
            records.append(PairRecord(a, b, int(label)))
    return PairDataset(records)


def dumps_pairs(data: PairDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in data:
        writer.writerow([r.smiles_a, r.smiles_b, r.label])
    return buf.getvalue()


def write_pairs(data: PairDataset, path) -> None:
    Path(path).write_text(dumps_pairs(data), encoding="utf-8")


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_negatives(positives: PairDataset, drug_pool, rng, attempts_per_pair: int = 100) -> PairDataset:
    """Draw as many random non-positive pairs from ``drug_pool`` as there are positives.

    Pairs are unordered for exclusion purposes; self-pairs and repeats are
    skipped. Gives up with ``PoolExhausted`` after
    ``attempts_per_pair * len(positives)`` draws.
    """
    rng = _rng(rng)
    pool = list(dict.fromkeys(drug_pool))
    target = len(positives)
    if target and len(pool) < 2:
        raise PoolExhausted("drug pool needs at least two distinct drugs")
    taken = {r.key for r in positives}
    out = []
    budget = attempts_per_pair * max(target, 1)
    draws = 0
    while len(out) < target:
        if draws >= budget:
            raise PoolExhausted(f"found {len(out)} of {target} negatives after {draws} draws")
        draws += 1
        i, j = rng.integers(len(pool), size=2)
        if i == j:
            continue
        key = pair_key(pool[i], pool[j])
        if key in taken:
            continue
        taken.add(key)
        out.append(PairRecord(pool[i], pool[j], 0, "sampled-negative"))
    return PairDataset(out)


def balanced_dataset(positives: PairDataset, drug_pool, rng) -> PairDataset:
    pos = PairDataset([PairRecord(r.smiles_a, r.smiles_b, 1, "positive") for r in positives])
    return pos + sample_negatives(pos, drug_pool, rng)


def split_dataset(data: PairDataset, ratio: float = 0.9, seed=0):
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    perm = _rng(seed).permutation(len(data))
    cut = int(np.floor(len(data) * ratio))
    return data.subset(perm[:cut]), data.subset(perm[cut:])


def kfold(data: PairDataset, k: int = 5, seed=0):
    """``k`` (train, validation) splits; validation folds partition the data."""
    if k < 2 or len(data) < k:
        raise ValueError("need k >= 2 and at least k records")
    perm = _rng(seed).permutation(len(data))
    folds = np.array_split(perm, k)
    out = []
    for i, val in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        out.append((data.subset(train), data.subset(val)))
    return out

"""Minibatch training with Adam, and evaluation helpers."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ddigraph import tensor as T
from ddigraph.data import PairDataset
from ddigraph.errors import SingleClassDataset
from ddigraph.features import MAX_NODES, FeaturizedDrug, featurize
from ddigraph.metrics import Metrics, compute_metrics
from ddigraph.model import ModelConfig, ModelParams, forward, init_params, loss, predict_probability
from ddigraph.smiles import parse
from ddigraph.tensor import AdamState

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    epochs: int = 100
    steps_per_epoch: int = 200
    batch_size: int = 64
    gcn_layers: int = 4
    gcn_units: int = 50
    fc_units: int = 100
    fc_layers: int = 3
    max_nodes: int = MAX_NODES
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs", "steps_per_epoch", "batch_size", "gcn_layers", "gcn_units", "fc_units", "fc_layers", "max_nodes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lr < 0:
            raise ValueError("lr must be non-negative")

    def model_config(self, **overrides) -> ModelConfig:
        return ModelConfig(
            gcn_layers=self.gcn_layers,
            gcn_units=self.gcn_units,
            fc_layers=self.fc_layers,
            fc_units=self.fc_units,
            max_nodes=self.max_nodes,
            **overrides,
        )

    def to_dict(self) -> dict:
        return asdict(self)


class FeatureCache:
    """Featurize each distinct SMILES once."""

    def __init__(self, max_nodes: int = MAX_NODES):
        self.max_nodes = max_nodes
        self._cache: dict[str, FeaturizedDrug] = {}

    def __call__(self, smiles: str) -> FeaturizedDrug:
        drug = self._cache.get(smiles)
        if drug is None:
            drug = featurize(parse(smiles), self.max_nodes)
            self._cache[smiles] = drug
        return drug


def _example_grads(record, params, plist, cache, scale):
    pred = forward(cache(record.smiles_a), cache(record.smiles_b), params)
    value = loss(pred.prob_tensor, record.label)
    return value.item(), T.gradients(T.scale(value, scale), plist)


def batch_step(batch, params: ModelParams, cache, pool=None) -> float:
    """Mean cross-entropy over ``batch``; gradients land in ``param.grad``.

    Per-example gradients are summed in batch order, so the result does not
    depend on how many worker threads produced them.
    """
    plist = params.parameters()
    scale = 1.0 / len(batch)
    mapper = pool.map if pool is not None else map
    results = list(mapper(lambda r: _example_grads(r, params, plist, cache, scale), batch))
    total = 0.0
    grads = [np.zeros_like(p.value) for p in plist]
    for value, gs in results:
        total += value
        for acc, g in zip(grads, gs):
            acc += g
    for p, g in zip(plist, grads):
        p.grad = g
    return total * scale


def train(
    data: PairDataset,
    config: TrainConfig = TrainConfig(),
    validation: PairDataset | None = None,
    threads: int = 1,
    model_overrides: dict | None = None,
    progress=None,
):
    """Train a fresh model; returns ``(params, history)``.

    ``history`` holds one dict per epoch with ``epoch``, ``mean_loss`` and,
    when ``validation`` is given, ``val_auc``, ``val_f1``, ``val_aupr``.
    Fully determined by ``config.seed``.
    """
    labels = data.labels
    if len(data) == 0 or labels.min() == labels.max():
        raise SingleClassDataset("training data must contain both labels")
    rng = np.random.default_rng(config.seed)
    params = init_params(config.model_config(**(model_overrides or {})), rng)
    plist = params.parameters()
    state = AdamState()
    cache = FeatureCache(config.max_nodes)
    records = data.records
    order = rng.permutation(len(records))
    cursor = 0
    history = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for epoch in range(1, config.epochs + 1):
            losses = []
            for _ in range(config.steps_per_epoch):
                batch = []
                while len(batch) < min(config.batch_size, len(records)):
                    if cursor == len(order):
                        order, cursor = rng.permutation(len(records)), 0
                    batch.append(records[order[cursor]])
                    cursor += 1
                losses.append(batch_step(batch, params, cache, pool))
                T.adam_step(plist, state, config.lr)
            entry = {"epoch": epoch, "mean_loss": float(np.mean(losses))}
            if validation is not None and len(validation):
                m = evaluate(params, validation, cache=cache)[1]
                entry.update(val_auc=m.roc_auc, val_f1=m.f1, val_aupr=m.aupr)
            history.append(entry)
            log.info("epoch %d mean_loss %.6f", epoch, entry["mean_loss"])
            if progress is not None:
                progress(entry)
    finally:
        if pool is not None:
            pool.shutdown()
    return params, history


def score(params: ModelParams, data: PairDataset, symmetrize: bool = False, cache=None) -> np.ndarray:
    cache = cache or FeatureCache(params.config.max_nodes)
    return np.array(
        [predict_probability(cache(r.smiles_a), cache(r.smiles_b), params, symmetrize) for r in data]
    )


def evaluate(params, data: PairDataset, symmetrize: bool = False, cache=None, scorer=None, threshold=0.5):
    """``(scores, Metrics)``. ``scorer(record) -> float`` replaces the model."""
    if scorer is not None:
        scores = np.array([scorer(r) for r in data], dtype=np.float64)
    else:
        scores = score(params, data, symmetrize, cache)
    return scores, compute_metrics(scores, data.labels, threshold)


def mean_loss(params, data: PairDataset, cache=None) -> float:
    cache = cache or FeatureCache(params.config.max_nodes)
    vals = [loss(forward(cache(r.smiles_a), cache(r.smiles_b), params).prob_tensor, r.label).item() for r in data]
    return float(np.mean(vals))


def history_csv(history) -> str:
    has_val = bool(history) and "val_auc" in history[0]
    cols = ["epoch", "mean_loss"] + (["val_auc", "val_f1", "val_aupr"] if has_val else [])
    lines = [",".join(cols)]
    for h in history:
        lines.append(",".join(str(h[c]) if c == "epoch" else f"{h[c]:.10g}" for c in cols))
    return "\n".join(lines) + "\n"


__all__ = [
    "FeatureCache",
    "Metrics",
    "TrainConfig",
    "batch_step",
    "evaluate",
    "history_csv",
    "mean_loss",
    "score",
    "train",
]

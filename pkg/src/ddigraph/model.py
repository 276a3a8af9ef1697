"""Siamese GCN encoder + per-layer attentive pooling + fully connected head."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ddigraph import tensor as T
from ddigraph.attention import AttentionWeights, attention_weights, attentive_gather, soft_alignment
from ddigraph.errors import ShapeMismatch
from ddigraph.features import FEATURE_LAYOUT, MAX_DEGREE, MAX_NODES, N_ATOM_FEATURES, FeaturizedDrug
from ddigraph.gcn import GcnLayerWeights, run_encoder
from ddigraph.tensor import Parameter, Tensor, xavier_init


@dataclass(frozen=True)
class ModelConfig:
    n_atom_features: int = N_ATOM_FEATURES
    gcn_layers: int = 4
    gcn_units: int = 50
    fc_layers: int = 3
    fc_units: int = 100
    max_nodes: int = MAX_NODES
    shared_degree_weights: bool = False
    share_attention_w: bool = False
    feature_layout: str = FEATURE_LAYOUT

    def to_dict(self) -> dict:
        return asdict(self)

    def architecture(self) -> dict:
        """Fields that determine parameter shapes and semantics (not max_nodes)."""
        d = self.to_dict()
        d.pop("max_nodes")
        return d


@dataclass
class ModelParams:
    config: ModelConfig
    gcn: list[GcnLayerWeights]
    attention: list[Parameter]  # one per GCN layer; may repeat one object
    fc: list[tuple[Parameter, Parameter]]  # (weight, bias) of the hidden layers
    out: tuple[Parameter, Parameter]

    def parameters(self) -> list[Parameter]:
        """Unique parameters in a fixed order (shared objects appear once)."""
        seen, ordered = set(), []
        groups = [layer.H[:1] if layer.shared else layer.H for layer in self.gcn]
        candidates = [p for g in groups for p in g] + list(self.attention)
        candidates += [p for pair in self.fc for p in pair] + list(self.out)
        for p in candidates:
            if id(p) not in seen:
                seen.add(id(p))
                ordered.append(p)
        return ordered

    def named(self) -> dict[str, Parameter]:
        return {p.name: p for p in self.parameters()}


def init_params(config: ModelConfig = ModelConfig(), rng=None, zeros: bool = False) -> ModelParams:
    """Xavier-uniform weights, zero biases. ``zeros`` gives an all-zero model."""
    rng = np.random.default_rng(0) if rng is None else rng

    def weight(fan_in, fan_out, name):
        if zeros:
            return Parameter(np.zeros((fan_in, fan_out)), name)
        return Parameter(xavier_init(fan_in, fan_out, rng).value, name)

    gcn = []
    d_in = config.n_atom_features
    n_deg = 1 if config.shared_degree_weights else MAX_DEGREE + 1
    for layer in range(config.gcn_layers):
        H = [weight(d_in, config.gcn_units, f"gcn{layer}.H{d}") for d in range(n_deg)]
        gcn.append(GcnLayerWeights(H, shared=config.shared_degree_weights))
        d_in = config.gcn_units

    if config.share_attention_w:
        w = weight(config.gcn_units, config.gcn_units, "att.W")
        attention = [w] * config.gcn_layers
    else:
        attention = [weight(config.gcn_units, config.gcn_units, f"att{k}.W") for k in range(config.gcn_layers)]

    fc = []
    width = 2 * config.gcn_units
    for k in range(config.fc_layers):
        fc.append((weight(width, config.fc_units, f"fc{k}.W"), Parameter(np.zeros((1, config.fc_units)), f"fc{k}.b")))
        width = config.fc_units
    out = (weight(width, 1, "out.W"), Parameter(np.zeros((1, 1)), "out.b"))
    return ModelParams(config, gcn, attention, fc, out)


@dataclass
class Prediction:
    probability: float
    attention: list[AttentionWeights]
    h_a: np.ndarray
    h_b: np.ndarray
    n_atoms_a: int = 0
    n_atoms_b: int = 0
    prob_tensor: Tensor = field(repr=False, default=None)
    logit_tensor: Tensor = field(repr=False, default=None)

    def sigmas(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(w.sigma_a.value, w.sigma_b.value) for w in self.attention]


def forward(drug_a: FeaturizedDrug, drug_b: FeaturizedDrug, params: ModelParams, alignment_hook=None) -> Prediction:
    """Score one ordered drug pair.

    ``alignment_hook(layer, P)`` may return a replacement alignment matrix;
    it exists so tests can tamper with masked regions of ``P``.
    """
    if drug_a.max_nodes != drug_b.max_nodes:
        raise ShapeMismatch("both drugs must be featurized with the same max_nodes")
    # the same layer objects encode both drugs
    stack_a = run_encoder(drug_a, params.gcn)
    stack_b = run_encoder(drug_b, params.gcn)
    h_a = h_b = None
    attn = []
    for layer, (ra, rb, W) in enumerate(zip(stack_a, stack_b, params.attention), start=1):
        align = soft_alignment(ra, rb, W, drug_a.node_mask, drug_b.node_mask)
        if alignment_hook is not None:
            replaced = alignment_hook(layer, align.P)
            if replaced is not None:
                align.P = replaced
        weights = attention_weights(align, layer=layer)
        attn.append(weights)
        ga = attentive_gather(ra, weights.sigma_a)
        gb = attentive_gather(rb, weights.sigma_b)
        h_a = ga if h_a is None else T.add(h_a, ga)
        h_b = gb if h_b is None else T.add(h_b, gb)

    x = T.concat([h_a, h_b], axis=1)
    for W, b in params.fc:
        x = T.relu(T.add(T.matmul(x, W), b))
    logit = T.add(T.matmul(x, params.out[0]), params.out[1])
    prob = T.sigmoid(logit)
    return Prediction(
        probability=prob.item(),
        attention=attn,
        h_a=h_a.value.reshape(-1),
        h_b=h_b.value.reshape(-1),
        n_atoms_a=drug_a.n_atoms,
        n_atoms_b=drug_b.n_atoms,
        prob_tensor=prob,
        logit_tensor=logit,
    )


def loss(probability: Tensor, label) -> Tensor:
    """Binary cross-entropy of one prediction."""
    return T.binary_cross_entropy(probability, float(label))


def predict_probability(drug_a, drug_b, params, symmetrize: bool = False) -> float:
    p = forward(drug_a, drug_b, params).probability
    if symmetrize:
        p = 0.5 * (p + forward(drug_b, drug_a, params).probability)
    return p

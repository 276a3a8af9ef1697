"""Drug-drug interaction prediction with a Siamese graph-convolutional
encoder and two-way attentive pooling, built on a small numpy autodiff core."""

from ddigraph.explain import attention_map, explain_pair, render_highlights
from ddigraph.features import FeaturizedDrug, featurize
from ddigraph.kernels import BACKEND
from ddigraph.model import ModelConfig, ModelParams, Prediction, forward, init_params, loss
from ddigraph.model_io import load_model, save_model
from ddigraph.smiles import MolecularGraph, parse, tokenize

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FeaturizedDrug",
    "ModelConfig",
    "ModelParams",
    "MolecularGraph",
    "Prediction",
    "attention_map",
    "explain_pair",
    "featurize",
    "forward",
    "init_params",
    "load_model",
    "loss",
    "parse",
    "render_highlights",
    "save_model",
    "tokenize",
]

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddigraph import tensor as T
from ddigraph.errors import ShapeMismatch
from ddigraph.features import featurize, featurize_smiles
from ddigraph.gcn import GcnLayerWeights, gcn_layer, graph_gather_softmax, run_encoder
from ddigraph.model import ModelConfig, init_params
from ddigraph.smiles import parse
from ddigraph.tensor import Parameter, constant, gradients, grad_check

from oracles import gcn_layer_loops
from test_smiles import CORPUS


def layer(rng, d_in, d_out, shared=False):
    n = 1 if shared else 6
    return GcnLayerWeights([Parameter(rng.normal(size=(d_in, d_out)), f"H{d}") for d in range(n)], shared)


@pytest.mark.parametrize("shared", [False, True])
@pytest.mark.parametrize("smi", ["CCO", "CC(C)(C)C", "c1ccc2ccccc2c1", "O=C1NC(=O)C(N1)(c1ccccc1)c1ccccc1"])
def test_layer_matches_loop_oracle(smi, shared, rng):
    d = featurize_smiles(smi, 24)
    w = layer(rng, 62, 7, shared)
    out = gcn_layer(constant(d.node_features), d.neighbors, d.degree, w).value
    ref = gcn_layer_loops(d.node_features, d.graph.adjacency, d.n_atoms, [h.value for h in w.H], shared)
    np.testing.assert_allclose(out, ref, rtol=0, atol=1e-12)
    assert not out[d.n_atoms :].any()


def test_stack_shapes_and_chaining():
    params = init_params(ModelConfig())
    d = featurize_smiles("CC(=O)Nc1ccc(O)cc1")
    stack = run_encoder(d, params.gcn)
    assert [s.shape for s in stack] == [(65, 50)] * 4
    assert [(l.d_in, l.d_out) for l in params.gcn] == [(62, 50)] + [(50, 50)] * 3


def test_zero_features_give_zero_stack():
    params = init_params(ModelConfig())
    d = featurize_smiles("CCO")
    zeroed = type(d)(np.zeros_like(d.node_features), d.neighbors, d.degree, d.node_mask, d.bond_features, d.n_atoms)
    assert all(not s.value.any() for s in run_encoder(zeroed, params.gcn))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([r[0] for r in CORPUS]), st.integers(0, 2**32 - 1))
def test_encoder_permutation_equivariant(smi, seed):
    rng = np.random.default_rng(seed)
    params = init_params(ModelConfig(gcn_units=8), rng)
    g = parse(smi)
    perm = rng.permutation(g.n_atoms).tolist()
    s1 = run_encoder(featurize(g), params.gcn)
    s2 = run_encoder(featurize(g.permuted(perm)), params.gcn)
    for a, b in zip(s1, s2):
        np.testing.assert_allclose(a.value[: g.n_atoms], b.value[perm], rtol=0, atol=1e-12)


def test_layer_gradients(rng):
    d = featurize_smiles("CC(=O)N", 6)
    w = layer(rng, 62, 3)
    used = sorted({int(x) for x in d.degree if x >= 0})

    def comp():
        return T.sum(T.tanh(gcn_layer(constant(d.node_features), d.neighbors, d.degree, w)))

    params = [w.H[k] for k in used]
    assert grad_check(comp, params) <= 1e-6
    # unused degree matrices receive zero gradient
    grads = gradients(comp(), w.H)
    assert all(not grads[k].any() for k in range(6) if k not in used)


def test_shape_mismatch(rng):
    d = featurize_smiles("CC")
    with pytest.raises(ShapeMismatch):
        gcn_layer(constant(d.node_features), d.neighbors, d.degree, layer(rng, 50, 4))


def test_gather_softmax_single_atom(rng):
    d = featurize_smiles("C", 4)
    w = layer(rng, 62, 5)
    stack = [gcn_layer(constant(d.node_features), d.neighbors, d.degree, w)]
    out = graph_gather_softmax(stack, [Parameter(rng.normal(size=(5, 6)), "G")], d.node_mask)
    assert out.value.sum() == pytest.approx(1.0, abs=1e-15)

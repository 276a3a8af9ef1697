import math
import struct

import numpy as np
import pytest

from ddigraph import tensor as T
from ddigraph.errors import CorruptFile, IncompatibleHyperparameters, ShapeMismatch, VersionMismatch
from ddigraph.features import featurize, featurize_smiles
from ddigraph.model import ModelConfig, forward, init_params, loss, predict_probability
from ddigraph.model_io import FORMAT_VERSION, dumps, load_model, loads, read_header, save_model
from ddigraph.smiles import parse

from conftest import small_config
from oracles import BatchedModelLoss


def test_parameter_names_and_shapes():
    p = init_params(ModelConfig())
    named = {k: v.shape for k, v in p.named().items()}
    assert named["gcn0.H0"] == (62, 50) and named["gcn3.H5"] == (50, 50)
    assert named["att2.W"] == (50, 50)
    assert named["fc0.W"] == (100, 100) and named["fc0.b"] == (1, 100)
    assert named["out.W"] == (100, 1) and named["out.b"] == (1, 1)
    assert len(named) == 4 * 6 + 4 + 3 * 2 + 2


def test_shared_variants_reduce_parameters():
    p = init_params(ModelConfig(shared_degree_weights=True, share_attention_w=True))
    names = list(p.named())
    assert "gcn0.H0" in names and "gcn0.H1" not in names
    assert names.count("att.W") == 1 and not any(n.startswith("att0") for n in names)


def test_zero_model_probability_half():
    p = init_params(ModelConfig(), zeros=True)
    pred = forward(featurize_smiles("CCO"), featurize_smiles("c1ccccc1"), p)
    assert pred.probability == 0.5
    assert loss(pred.prob_tensor, 1).item() == pytest.approx(math.log(2), abs=1e-15)
    assert loss(pred.prob_tensor, 0).item() == pytest.approx(math.log(2), abs=1e-15)
    sa, sb = pred.sigmas()[0]
    np.testing.assert_allclose(sa[:3], 1 / 3, atol=1e-15)
    np.testing.assert_allclose(sb[:6], 1 / 6, atol=1e-15)


def test_layer_ids_and_shapes():
    p = init_params(ModelConfig())
    pred = forward(featurize_smiles("CCO"), featurize_smiles("CN"), p)
    assert [w.layer for w in pred.attention] == [1, 2, 3, 4]
    assert pred.h_a.shape == (50,) and pred.h_b.shape == (50,)
    assert 0 < pred.probability < 1


def test_mismatched_padding_rejected():
    p = init_params(ModelConfig())
    with pytest.raises(ShapeMismatch):
        forward(featurize_smiles("C", 65), featurize_smiles("C", 80), p)


def test_forward_matches_dense_oracle():
    p = init_params(ModelConfig(max_nodes=12), np.random.default_rng(5))
    pairs = [(featurize_smiles("CC(=O)Nc1ccc(O)cc1", 12), featurize_smiles("OC(=O)C1CC1", 12), 1)]
    tape = loss(forward(*pairs[0][:2], p).prob_tensor, 1).item()
    assert BatchedModelLoss(p, pairs)()[0] == pytest.approx(tape, rel=0, abs=1e-12)


def test_symmetrize_is_order_free():
    p = init_params(ModelConfig(), np.random.default_rng(1))
    a, b = featurize_smiles("CCN(CC)CC"), featurize_smiles("c1ccoc1")
    assert predict_probability(a, b, p, True) == pytest.approx(predict_probability(b, a, p, True), abs=1e-15)


def test_end_to_end_gradient_small(small_params):
    a, b = featurize_smiles("CC(=O)O", 8), featurize_smiles("OCC(F)Cl", 8)

    def comp():
        return loss(forward(a, b, small_params).prob_tensor, 1)

    assert T.grad_check(comp, small_params.parameters()) <= 1e-4


# ------------------------------------------------------------------ files


def test_round_trip_bitwise(tmp_path):
    p = init_params(ModelConfig(), np.random.default_rng(2))
    path = tmp_path / "m.ddig"
    save_model(p, path, {"seed": 3})
    q = load_model(path)
    for (n1, a), (n2, b) in zip(p.named().items(), q.named().items()):
        assert n1 == n2 and a.value.tobytes() == b.value.tobytes()
    assert read_header(path)["train"] == {"seed": 3}
    assert dumps(q, {"seed": 3}) == path.read_bytes()


def test_truncated_and_modified_files(small_params):
    blob = dumps(small_params)
    with pytest.raises(CorruptFile):
        loads(blob[:-10])
    with pytest.raises(CorruptFile):
        loads(b"XXXX" + blob[4:])
    flipped = bytearray(blob)
    flipped[len(blob) // 2] ^= 1
    with pytest.raises(CorruptFile):
        loads(bytes(flipped))


def test_version_mismatch(small_params):
    blob = bytearray(dumps(small_params))
    blob[4:8] = struct.pack("<I", FORMAT_VERSION + 1)
    with pytest.raises(VersionMismatch):
        loads(bytes(blob))


def test_incompatible_architecture(small_params):
    with pytest.raises(IncompatibleHyperparameters):
        loads(dumps(small_params), expected=small_config(gcn_units=6))
    # padding width is not part of the architecture
    loads(dumps(small_params), expected=small_config(max_nodes=30))


def test_wider_padding_on_load(tmp_path):
    p = init_params(ModelConfig(), np.random.default_rng(4))
    path = tmp_path / "m.ddig"
    save_model(p, path)
    wide = load_model(path, max_nodes=80)
    assert wide.config.max_nodes == 80
    g_a, g_b = parse("CC(=O)OC1=CC=CC=C1C(=O)O"), parse("CN1C=NC2=C1C(=O)N(C(=O)N2C)C")
    narrow = forward(featurize(g_a, 65), featurize(g_b, 65), p).probability
    assert forward(featurize(g_a, 80), featurize(g_b, 80), wide).probability == pytest.approx(narrow, abs=1e-12)

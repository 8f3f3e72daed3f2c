import numpy as np
import pytest

from src.nncore.layers import Conv2D, Flatten, Linear
from src.nncore.losses import softmax
from src.splitnet.client_model import ClientModel, load_shared, local_loss, private_params, shared_params
from src.splitnet.network import build_cnn_split, build_mlp_layers, coarse_boundaries, split_layers
from src.splitnet.ways import FULLY_SHARED, WayKind, canonical, enumerate_ways, format_way, parse_way
from src.utils.exceptions import ConfigurationError, ProtocolError, UnsupportedMetricError, WayParseError
from src.xcli.checks import way_grad_error


# ----------------------------------------------------------------------
# Way calculus
# ----------------------------------------------------------------------
def test_two_blocks_have_seven_ways():
    names = [format_way(w, 2) for w in enumerate_ways(2)]
    assert len(names) == 7
    assert set(names) == {"AB", "aB", "ab", "Ab", "AaB", "AaBb", "ABb"}


@pytest.mark.parametrize("name,kind,b", [
    ("AB", WayKind.PS, 1),
    ("aB", WayKind.PS, 2),
    ("ab", WayKind.SP, 1),
    ("Ab", WayKind.SP, 2),
    ("AaB", WayKind.SPS, 2),
    ("AaBb", WayKind.SSP, 1),
    ("ABb", WayKind.SSP, 2),
])
def test_parse_way_two_blocks(name, kind, b):
    way = parse_way(name, 2)
    assert way == canonical(kind, b)
    assert format_way(way, 2) == name


def test_sps_one_collapses_to_fully_shared():
    assert canonical(WayKind.SPS, 1) == FULLY_SHARED


def test_fine_grained_chains_parse():
    for name in ("ABCD", "aBCD", "abCD", "abcD", "ABCd", "ABcd", "Abcd", "AaBbCcD"):
        assert format_way(parse_way(name, 4), 4) == name


@pytest.mark.parametrize("name,position", [
    ("ZZ", 0),
    ("aAB", 1),
    ("A", 1),
    ("ABC", 2),
])
def test_malformed_way_names(name, position):
    with pytest.raises(WayParseError) as info:
        parse_way(name, 2)
    assert info.value.position == position


def test_roles_matching_no_pattern():
    with pytest.raises(WayParseError) as info:
        parse_way("aBc", 3)
    assert info.value.position == 2


def test_global_model_availability():
    assert parse_way("AB", 2).has_global_model
    assert parse_way("AaB", 2).has_global_model
    assert parse_way("ABb", 2).has_global_model
    assert not parse_way("aB", 2).has_global_model
    assert not parse_way("Ab", 2).has_global_model


# ----------------------------------------------------------------------
# Splits
# ----------------------------------------------------------------------
def test_default_split_one_parametric_layer_per_block(rng):
    split = split_layers(build_mlp_layers(4, [5, 5], 3, rng))
    assert split.num_blocks == 3
    assert all(isinstance(block[0], Linear) for block in split.blocks)


def test_leading_flatten_stays_in_first_block(rng):
    split = split_layers([Flatten(), *build_mlp_layers(4, [5], 3, rng)])
    assert split.num_blocks == 2
    assert isinstance(split.blocks[0][0], Flatten)
    assert isinstance(split.blocks[0][1], Linear)


def test_cnn_split_default_and_coarse(rng):
    fine = build_cnn_split(1, 8, 8, [2, 3], 3, [5], 4, rng)
    assert fine.num_blocks == 4
    coarse = build_cnn_split(1, 8, 8, [2, 3], 3, [5], 4, rng, coarse=True)
    assert coarse.num_blocks == 2
    assert any(isinstance(layer, Conv2D) for layer in coarse.blocks[0])
    assert all(not isinstance(layer, Conv2D) for layer in coarse.blocks[1])
    assert coarse.forward(rng.normal(size=(2, 1, 8, 8))).shape == (2, 4)


def test_coarse_mlp_puts_last_linear_in_classifier(rng):
    layers = build_mlp_layers(4, [5, 5], 3, rng)
    assert coarse_boundaries(layers) == [4]


def test_bad_boundaries(rng):
    layers = build_mlp_layers(4, [5], 3, rng)
    with pytest.raises(ConfigurationError):
        split_layers(layers, [0])
    with pytest.raises(ConfigurationError):
        split_layers(layers, [2, 2])


# ----------------------------------------------------------------------
# Client models
# ----------------------------------------------------------------------
def test_fully_shared_model_equals_unsplit_network(small_split, rng):
    x = rng.normal(size=(5, 4))
    model = ClientModel(small_split, FULLY_SHARED, rng)
    np.testing.assert_array_equal(model.forward(x).logits[0], small_split.forward(x))
    assert model.private_size() == 0
    assert model.shared_size() == small_split.param_total()


def test_partition_sizes(small_split, rng):
    total = small_split.param_total()
    assert ClientModel(small_split, parse_way("ab", 2), rng).shared_size() == 0
    assert ClientModel(small_split, parse_way("ab", 2), rng).private_size() == total
    double = ClientModel(small_split, parse_way("AaBb", 2), rng)
    assert double.shared_size() == total and double.private_size() == total
    single = ClientModel(small_split, parse_way("aB", 2), rng)
    assert single.private_size() == small_split.block_size(0)
    assert single.shared_size() == small_split.block_size(1)


def test_private_copies_are_freshly_initialized(small_split, rng):
    model = ClientModel(small_split, parse_way("aB", 2), rng)
    original = small_split.blocks[0][0].params[0]
    assert not np.array_equal(model.private_blocks[0][0].params[0], original)
    assert model.private_blocks[0][0].params[0].shape == original.shape


def test_two_heads_for_ssp(small_split, rng):
    x = rng.normal(size=(3, 4))
    outputs = ClientModel(small_split, parse_way("ABb", 2), rng).forward(x)
    assert len(outputs.logits) == 2
    assert outputs.logits[0].shape == outputs.logits[1].shape == (3, 3)


def test_ssp_prediction_averages_heads(small_split, rng):
    x = rng.normal(size=(3, 4))
    model = ClientModel(small_split, parse_way("AaBb", 2), rng)
    o_s, o_p = model.forward(x).logits
    np.testing.assert_allclose(model.predict(x), 0.5 * (softmax(o_s) + softmax(o_p)))


def test_global_predict_needs_complete_shared_model(small_split, rng):
    x = rng.normal(size=(2, 4))
    with pytest.raises(UnsupportedMetricError):
        ClientModel(small_split, parse_way("aB", 2), rng).global_predict(x)
    model = ClientModel(small_split, parse_way("AaB", 2), rng)
    np.testing.assert_allclose(model.global_predict(x), softmax(small_split.forward(x)))


@pytest.mark.parametrize("way", enumerate_ways(2), ids=lambda w: format_way(w, 2))
def test_every_way_passes_gradcheck(way):
    gen = np.random.default_rng(99)
    for _ in range(5):
        assert way_grad_error(way, gen) < 1e-4


def test_shared_vector_round_trip_and_length_check(small_split, rng):
    model = ClientModel(small_split, parse_way("ABb", 2), rng)
    theta = shared_params(model) + 1.0
    load_shared(model, theta)
    np.testing.assert_array_equal(shared_params(model), theta)
    with pytest.raises(ProtocolError):
        load_shared(model, theta[:-1])


def test_local_loss_touches_only_live_parameters(small_split, rng):
    model = ClientModel(small_split, parse_way("Ab", 2), rng)
    before = private_params(model)
    result = local_loss(model, rng.normal(size=(4, 4)), [0, 1, 2, 0])
    assert result.total > 0
    assert any(g.any() for g in model.private_grads())
    np.testing.assert_array_equal(private_params(model), before)

import numpy as np
import pytest

from src.autofuse.model import AutoFuseModel
from src.autofuse.params import FusionMode, FusionParams
from src.fedsim.config import FedConfig
from src.fedsim.metrics import accuracy
from src.fedsim.runner import run_experiment
from src.interp.sweep import DEFAULT_GRID, InterpGrid, check_grid, interp_predict, interp_sweep, recommend_way
from src.nncore.layers import run_layers
from src.nncore.losses import softmax
from src.splitnet.client_model import ClientModel
from src.splitnet.ways import FULLY_SHARED, parse_way
from src.utils.exceptions import ConfigurationError, UsageError


def _grid_with_peak(alpha: float, beta: float) -> InterpGrid:
    alphas = np.array(DEFAULT_GRID)
    betas = np.array(DEFAULT_GRID)
    acc = np.full((alphas.size, betas.size), 0.5)
    acc[int(np.flatnonzero(np.isclose(alphas, alpha))[0]), int(np.flatnonzero(np.isclose(betas, beta))[0])] = 0.9
    return InterpGrid(alphas, betas, acc)


def _private_chain(model: ClientModel):
    return [layer for block in model.private_blocks for layer in block]


def test_corners_equal_direct_branch_predictions(small_split, rng):
    model = ClientModel(small_split, parse_way("AaBb", 2), rng)
    x = rng.normal(size=(6, 4))
    np.testing.assert_allclose(interp_predict(model, x, 1.0, 1.0), model.global_predict(x), rtol=0, atol=1e-12)
    np.testing.assert_allclose(interp_predict(model, x, 0.0, 0.0), softmax(run_layers(_private_chain(model), x)),
                               rtol=0, atol=1e-12)


def test_sweep_corners_match_independent_evaluation(iid_scene, small_split):
    cfg = FedConfig(rounds=3, local_epochs=1, batch_size=8, record_every=1, lrs=[0.05])
    result = run_experiment(iid_scene, small_split, parse_way("AaBb", 2), cfg, 0.05)
    grid = interp_sweep(result.clients)
    assert grid.acc.shape == (11, 11)

    shared = np.mean([accuracy(c.model.global_predict(c.test_x), c.test_y) for c in result.clients])
    private = np.mean([accuracy(softmax(run_layers(_private_chain(c.model), c.test_x)), c.test_y)
                       for c in result.clients])
    assert grid.cell(1.0, 1.0) == pytest.approx(shared, abs=1e-12)
    assert grid.cell(0.0, 0.0) == pytest.approx(private, abs=1e-12)
    frame = grid.to_frame()
    assert list(frame.columns) == ["alpha", "beta", "local_acc"]
    assert len(frame) == 121


def test_sweep_leaves_parameters_untouched(iid_scene, small_split):
    cfg = FedConfig(rounds=1, local_epochs=1, batch_size=8, record_every=1, lrs=[0.05])
    result = run_experiment(iid_scene, small_split, FusionMode.CS, cfg, 0.05)
    before = [p.copy() for p in result.clients[0].model.shared_arrays()]
    interp_sweep(result.clients, [0.0, 0.3, 1.0], [0.0, 1.0])
    for p, q in zip(result.clients[0].model.shared_arrays(), before):
        np.testing.assert_array_equal(p, q)


def test_interp_accepts_auto_models_and_uneven_grids(small_split, rng):
    model = AutoFuseModel(small_split, FusionParams.zeros(FusionMode.SA), rng)
    x = rng.normal(size=(3, 4))
    assert interp_predict(model, x, 0.05, 0.9).shape == (3, 3)
    np.testing.assert_array_equal(check_grid([0.0, 0.05, 0.1, 0.5, 1.0], "alpha"), [0.0, 0.05, 0.1, 0.5, 1.0])


@pytest.mark.parametrize("values", [[0.0, 0.5], [0.1, 1.0], [0.0, 0.7, 0.3, 1.0], [0.0, 1.5]])
def test_bad_grids(values):
    with pytest.raises(ConfigurationError):
        check_grid(values, "alpha")


def test_interp_needs_full_double_branch(small_split, rng):
    model = ClientModel(small_split, FULLY_SHARED, rng)
    with pytest.raises(UsageError):
        interp_predict(model, rng.normal(size=(2, 4)), 0.5, 0.5)


def test_out_of_range_mix_is_usage_error(small_split, rng):
    model = ClientModel(small_split, parse_way("AaBb", 2), rng)
    with pytest.raises(UsageError):
        interp_predict(model, rng.normal(size=(2, 4)), 1.5, 0.5)


@pytest.mark.parametrize("alpha,beta,way", [
    (1.0, 1.0, "AB"),
    (1.0, 0.1, "ABb"),
    (0.8, 0.5, "AaBb"),
    (0.3, 1.0, "AaB"),
])
def test_recommend_way(alpha, beta, way):
    verdict = recommend_way(_grid_with_peak(alpha, beta))
    assert verdict.way == way
    assert (verdict.alpha, verdict.beta) == (pytest.approx(alpha), pytest.approx(beta))
    assert verdict.accuracy == pytest.approx(0.9)


def test_recommend_way_ties_prefer_sharing():
    grid = InterpGrid(np.array(DEFAULT_GRID), np.array(DEFAULT_GRID), np.full((11, 11), 0.7))
    assert recommend_way(grid).way == "AB"


def test_recommend_way_names_fine_split():
    verdict = recommend_way(_grid_with_peak(1.0, 0.2), num_blocks=3)
    assert verdict.way == "ABCc"

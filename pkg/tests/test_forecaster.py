"""Next-day return regression: dataset layout, loss, accuracy, training."""

import math

import numpy as np
import pytest

from conftest import finite_diff_grad, frame_features, max_rel_err, synthetic_frame
from rlfolio import autodiff as ad
from rlfolio import forecaster as fc
from rlfolio import networks as nets


def _dataset(n_days=30, window=6, seed=0):
    frame = synthetic_frame(n_days=n_days, n_assets=2, seed=seed)
    feats = frame_features(frame)
    windows, targets = fc.build_forecast_dataset(frame, feats, window)
    return frame, feats, windows, targets


# ---------------------------------------------------------------------------
# dataset


def test_dataset_shapes_and_pairing():
    frame, feats, windows, targets = _dataset(n_days=30, window=6)
    assert windows.shape == (24, 2, 5, 5)  # t = 5 .. 28
    assert targets.shape == (24, 2)
    closes = frame.closes
    # sample k ends at day t = window - 1 + k and predicts the move into t+1
    for k in (0, 7, 23):
        t = 5 + k
        np.testing.assert_array_equal(windows[k], feats[:, t - 5 : t, :])
        np.testing.assert_allclose(
            targets[k], np.log(closes[:, t + 1] / closes[:, t]), atol=1e-15
        )


def test_dataset_requires_enough_days():
    frame = synthetic_frame(n_days=6, n_assets=2, seed=1)
    with pytest.raises(fc.EmptyDatasetError):
        fc.build_forecast_dataset(frame, frame_features(frame), window=6)


# ---------------------------------------------------------------------------
# loss


def test_mean_rmse_hand_example():
    # per-asset RMSEs of 0.1 and 0.3 average to 0.2
    preds = ad.Tensor(np.zeros((4, 2)))
    targets = np.column_stack([np.full(4, 0.1), np.full(4, -0.3)])
    loss = fc.mean_rmse_loss(preds, targets)
    assert loss.item() == pytest.approx(0.2, abs=1e-15)


def test_mean_rmse_mixed_errors_longhand():
    preds = ad.Tensor(np.array([[0.1, 0.0], [0.3, -0.2]]))
    targets = np.array([[0.0, 0.1], [0.1, 0.0]])
    want = 0.5 * (
        math.sqrt((0.1**2 + 0.2**2) / 2) + math.sqrt((0.1**2 + 0.2**2) / 2)
    )
    assert fc.mean_rmse_loss(preds, targets).item() == pytest.approx(want, abs=1e-15)


def test_mean_rmse_zero_on_perfect_fit():
    y = np.random.default_rng(0).normal(size=(6, 3))
    assert fc.mean_rmse_loss(ad.Tensor(y.copy()), y).item() == 0.0


def test_mean_rmse_shape_mismatch():
    with pytest.raises(ad.ShapeMismatchError):
        fc.mean_rmse_loss(ad.Tensor(np.zeros((3, 2))), np.zeros((2, 3)))


def test_mean_rmse_gradient_through_sqrt():
    rng = np.random.default_rng(1)
    p = rng.normal(size=(5, 3))
    y = rng.normal(size=(5, 3))

    def loss_of(arr):
        return fc.mean_rmse_loss(ad.Tensor(arr, requires_grad=True), y)

    t = ad.Tensor(p, requires_grad=True)
    loss = fc.mean_rmse_loss(t, y)
    ad.backward(loss)
    numeric = finite_diff_grad(lambda: loss_of(p).item(), p)
    assert max_rel_err(t.grad, numeric) < 1e-4


# ---------------------------------------------------------------------------
# directional accuracy


def test_directional_accuracy_hand_example():
    preds = np.array([[0.1, -0.2], [0.3, 0.4], [-0.1, 0.2]])
    targets = np.array([[0.2, 0.1], [0.1, 0.3], [-0.3, -0.1]])
    # matches: (0,0), (1,0), (1,1), (2,0) -> 4 of 6
    assert fc.directional_accuracy(preds, targets) == pytest.approx(4 / 6)


def test_directional_accuracy_zero_is_its_own_sign():
    assert fc.directional_accuracy(np.array([0.0]), np.array([0.0])) == 1.0
    assert fc.directional_accuracy(np.array([0.0]), np.array([0.1])) == 0.0


def test_directional_accuracy_rejects_empty_or_mismatched():
    with pytest.raises(ValueError):
        fc.directional_accuracy(np.array([]), np.array([]))
    with pytest.raises(ValueError):
        fc.directional_accuracy(np.zeros(3), np.zeros(4))


# ---------------------------------------------------------------------------
# training loop


def test_train_forecaster_loss_decreases_and_logs():
    _, _, windows, targets = _dataset(n_days=40, window=6, seed=2)
    cfg = nets.NetConfig(n_assets=2, window=6, hidden=8, lstm_layers=1)
    rng = np.random.default_rng(3)
    params, curve = fc.train_forecaster(
        windows, targets, cfg, rng, epochs=12, batch_size=16, lr=3e-3,
        val_fraction=0.2,
    )
    assert [c["epoch"] for c in curve] == list(range(12))
    assert curve[-1]["train_loss"] < curve[0]["train_loss"]
    assert all(np.isfinite(c["val_loss"]) for c in curve)
    # trailing split: validation windows are the LAST samples
    n_val = int(len(windows) * 0.2)
    assert n_val >= 1
    preds = fc.forecast(params, _window_of(windows[0]), cfg)
    assert preds.shape == (2,)


def _window_of(arr):
    from rlfolio.data import FeatureWindow

    return FeatureWindow(values=arr, end_index=0)


def test_train_forecaster_empty_guards():
    cfg = nets.NetConfig(n_assets=2, window=6, hidden=8, lstm_layers=1)
    rng = np.random.default_rng(4)
    with pytest.raises(fc.EmptyDatasetError):
        fc.train_forecaster(np.empty((0, 2, 5, 5)), np.empty((0, 2)), cfg, rng)
    _, _, windows, targets = _dataset()
    with pytest.raises(fc.EmptyDatasetError):
        fc.train_forecaster(windows[:1], targets[:1], cfg, rng, val_fraction=1.0)


def test_train_forecaster_seeded_repeatability():
    _, _, windows, targets = _dataset(n_days=30, window=6, seed=5)
    cfg = nets.NetConfig(n_assets=2, window=6, hidden=8, lstm_layers=1)

    def run():
        params, curve = fc.train_forecaster(
            windows, targets, cfg, np.random.default_rng(7), epochs=3,
            batch_size=8, lr=1e-3,
        )
        return params, curve

    p1, c1 = run()
    p2, c2 = run()
    assert c1 == c2
    for name in p1.names():
        assert np.array_equal(p1[name].data, p2[name].data)

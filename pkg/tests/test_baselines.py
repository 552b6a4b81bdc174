import math

import numpy as np
import pytest

from conftest import toy_raw_dataset
from cyltouch.baselines import (
    CovarianceModel,
    MlpConfig,
    frechet_mean,
    geodesic_distance,
    load_mdcm,
    load_mlp,
    mdcm_distances,
    mlp_loss_and_grads,
    predict_mdcm,
    predict_mlp_batch,
    sample_covariance,
    save_mdcm,
    save_mlp,
    train_mdcm,
    train_mlp,
)
from cyltouch.dataset import LabeledDataset
from cyltouch.featurize import featurize_dataset
from cyltouch.simgen import GeneratorConfig, generate
from cyltouch.types import GridShape, IntentLabel, LABELS, TactileWindow


def random_spd(rng, d=6):
    A = rng.normal(size=(d, d))
    return A @ A.T + d * np.eye(d)


# --- covariance ---------------------------------------------------------------

def test_constant_window_floored_to_identity_scale():
    w = TactileWindow(GridShape(3, 2), np.full((10, 3, 2), 0.4))
    C = sample_covariance(w, shrinkage=0.1)
    assert np.allclose(C, 1e-8 * np.eye(6))


def test_one_cell_window_hand_computed():
    # values {0, 2} over two frames: sample covariance (T-1 norm) is [2.0]
    w = TactileWindow(GridShape(2, 1), np.array([[[0.0], [0.0]], [[2.0], [2.0]]]))
    lam = 0.25
    C = sample_covariance(w, shrinkage=lam)
    raw = np.array([[2.0, 2.0], [2.0, 2.0]])
    mu = np.trace(raw) / 2
    expected = (1 - lam) * raw + lam * mu * np.eye(2)
    assert np.allclose(C, expected)


def test_covariance_is_spd_for_noisy_windows():
    rng = np.random.default_rng(0)
    for _ in range(5):
        w = TactileWindow(GridShape(4, 3), rng.random((9, 4, 3)))
        C = sample_covariance(w, shrinkage=0.1)
        assert np.allclose(C, C.T)
        assert np.linalg.eigvalsh(C)[0] > 0


def test_covariance_validates_args():
    w = TactileWindow(GridShape(2, 2), np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        sample_covariance(w, 0.1)  # single frame
    w2 = TactileWindow(GridShape(2, 2), np.zeros((3, 2, 2)))
    with pytest.raises(ValueError):
        sample_covariance(w2, 0.0)
    with pytest.raises(ValueError):
        sample_covariance(w2, 1.5)


# --- geodesic distance ----------------------------------------------------------

def test_geodesic_identity():
    rng = np.random.default_rng(1)
    a = random_spd(rng)
    assert geodesic_distance(a, a) == pytest.approx(0.0, abs=1e-9)


def test_geodesic_scalar_closed_form():
    p, q = 0.7, 3.1
    d = geodesic_distance(np.array([[p]]), np.array([[q]]))
    assert d == pytest.approx(abs(math.log(q / p)), abs=1e-12)


def test_geodesic_symmetry_and_congruence_invariance():
    rng = np.random.default_rng(2)
    for _ in range(10):
        a, b = random_spd(rng), random_spd(rng)
        d_ab = geodesic_distance(a, b)
        assert d_ab == pytest.approx(geodesic_distance(b, a), abs=1e-9)
        W = rng.normal(size=a.shape)
        while abs(np.linalg.det(W)) < 1e-3:
            W = rng.normal(size=a.shape)
        d_w = geodesic_distance(W @ a @ W.T, W @ b @ W.T)
        assert d_w == pytest.approx(d_ab, abs=1e-6)


def test_geodesic_rejects_non_spd():
    a = np.diag([1.0, -1.0])
    with pytest.raises(ValueError):
        geodesic_distance(a, np.eye(2))


# --- MDCM ----------------------------------------------------------------------

def test_frechet_mean_of_identical_points():
    rng = np.random.default_rng(3)
    a = random_spd(rng)
    M = frechet_mean([a, a, a])
    assert np.allclose(M, a, atol=1e-8)


def test_frechet_mean_scalar_geometric_mean():
    M = frechet_mean([np.array([[1.0]]), np.array([[math.e ** 2]])])
    assert M[0, 0] == pytest.approx(math.e, rel=1e-6)


def test_frechet_mean_order_invariant():
    rng = np.random.default_rng(4)
    mats = [random_spd(rng) for _ in range(6)]
    M1 = frechet_mean(mats)
    M2 = frechet_mean(mats[::-1])
    assert np.allclose(M1, M2, atol=1e-9)


def test_mdcm_requires_raw_and_two_samples_per_class():
    rng = np.random.default_rng(5)
    ds = toy_raw_dataset(rng, per_class=2, n_frames=8)
    feat = featurize_dataset(ds)
    with pytest.raises(ValueError):
        train_mdcm(feat)
    one = LabeledDataset("raw", ds.items[:1] + ds.items[2:], ds.meta)
    with pytest.raises(ValueError):
        train_mdcm(one)


def test_mdcm_beats_chance_on_separated_classes():
    ds = generate(GeneratorConfig(samples_per_class=8, frames_per_sample=20,
                                  noise_sigma=0.04, max_shift=0, seed=0))
    model = train_mdcm(ds, shrinkage=0.1)
    pred = [predict_mdcm(model, w) for w, _ in ds.items]
    acc = np.mean([p == l for p, (_, l) in zip(pred, ds.items)])
    assert acc > 0.2


def test_mdcm_tie_breaks_to_smaller_label():
    # two identical centroids produce an exact distance tie for any input
    rng = np.random.default_rng(6)
    c = random_spd(rng, d=6)
    model = CovarianceModel(
        {IntentLabel.stop: c.copy(), IntentLabel.turn_right: c.copy()},
        shrinkage=0.5)
    w = TactileWindow(GridShape(3, 2), rng.random((20, 3, 2)))
    dists = mdcm_distances(model, w)
    assert dists[IntentLabel.stop] == dists[IntentLabel.turn_right]
    assert predict_mdcm(model, w) == IntentLabel.turn_right  # index 1 < 3


def test_mdcm_matches_brute_force_argmin():
    rng = np.random.default_rng(7)
    ds = toy_raw_dataset(rng, per_class=3, n_frames=10)
    model = train_mdcm(ds, shrinkage=0.2)
    for w, _ in ds.items[:5]:
        dists = mdcm_distances(model, w)
        brute = min(dists, key=lambda l: (dists[l], int(l)))
        assert predict_mdcm(model, w) == brute


def test_mdcm_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    ds = toy_raw_dataset(rng, per_class=3, n_frames=10)
    model = train_mdcm(ds, shrinkage=0.2)
    save_mdcm(model, tmp_path / "m.json")
    back = load_mdcm(tmp_path / "m.json")
    for w, _ in ds.items[:5]:
        assert predict_mdcm(model, w) == predict_mdcm(back, w)


# --- MLP -----------------------------------------------------------------------

def featurized_toy(seed=0):
    return featurize_dataset(generate(GeneratorConfig(
        samples_per_class=6, frames_per_sample=10, noise_sigma=0.03,
        max_shift=0, seed=seed)))


def test_mlp_gradient_matches_finite_differences():
    ds = featurized_toy()
    probe = LabeledDataset("featurized", ds.items[:3], ds.meta)
    X = probe.feature_array().reshape(3, -1)
    y = probe.labels()
    onehot = np.zeros((3, 5))
    onehot[np.arange(3), y] = 1.0

    rng = np.random.default_rng(0)
    sizes = [X.shape[1], 8, 5]
    weights = [rng.normal(0, 0.3, (a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [rng.normal(0, 0.1, b) for b in sizes[1:]]
    _, gW, gb = mlp_loss_and_grads(weights, biases, X, onehot)

    eps = 1e-6
    checked = 0
    for layer in range(2):
        W = weights[layer]
        for idx in [(0, 0), (1, 2), (W.shape[0] - 1, W.shape[1] - 1)]:
            orig = W[idx]
            W[idx] = orig + eps
            lp, _, _ = mlp_loss_and_grads(weights, biases, X, onehot)
            W[idx] = orig - eps
            lm, _, _ = mlp_loss_and_grads(weights, biases, X, onehot)
            W[idx] = orig
            numeric = (lp - lm) / (2 * eps)
            analytic = gW[layer][idx]
            denom = max(abs(numeric), abs(analytic), 1e-8)
            assert abs(numeric - analytic) / denom < 1e-5
            checked += 1
    assert checked == 6


def test_mlp_loss_nonincreasing_on_separable_toy():
    ds = featurized_toy()
    model = train_mlp(ds, MlpConfig(hidden=(16,), lr=0.005, epochs=120, seed=0))
    curve = np.array(model.loss_curve)
    assert np.all(np.diff(curve) <= 1e-9)


def test_mlp_seed_determinism(tmp_path):
    ds = featurized_toy()
    m1 = train_mlp(ds, MlpConfig(seed=5, epochs=50))
    m2 = train_mlp(ds, MlpConfig(seed=5, epochs=50))
    save_mlp(m1, tmp_path / "a.json")
    save_mlp(m2, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_mlp_architecture_and_round_trip(tmp_path):
    ds = featurized_toy()
    model = train_mlp(ds, MlpConfig(seed=1))
    assert model.layer_sizes == [220, 64, 5]
    save_mlp(model, tmp_path / "m.json")
    back = load_mlp(tmp_path / "m.json")
    pred_a = predict_mlp_batch(model, ds.payloads())
    pred_b = predict_mlp_batch(back, ds.payloads())
    assert np.array_equal(pred_a, pred_b)
    # a trained MLP should at least fit this tiny separable set well
    assert np.mean(pred_a == ds.labels()) > 0.8

import math

import numpy as np
import pytest

from conftest import random_feature_map
from cyltouch import svm
from cyltouch.dataset import LabeledDataset
from cyltouch.featurize import featurize_dataset
from cyltouch.kernels import KernelSpec, gram, cross_kernel
from cyltouch.simgen import GeneratorConfig, generate
from cyltouch.svm import (
    GridSearchResult,
    default_grid,
    decision_values_slow,
    grid_search,
    kkt_violation,
    load_model,
    model_from_dict,
    model_to_dict,
    predict,
    predict_batch,
    save_model,
    smo_solve,
    train_binary,
    train_multiclass,
)
from cyltouch.types import FeatureMap, GridShape, IntentLabel, LABELS


def small_featurized(seed=0, per_class=8, noise=0.03, max_shift=1):
    cfg = GeneratorConfig(samples_per_class=per_class, frames_per_sample=9,
                          noise_sigma=noise, temporal_jitter_sigma=0.0,
                          max_shift=max_shift, seed=seed)
    return featurize_dataset(generate(cfg))


def test_two_sample_dual_matches_analytic_solution():
    # two points, labels (+1, -1): alpha* = 1/(1 - K12), b* = 0 when interior
    shape = GridShape(2, 1)
    a = FeatureMap(shape, np.zeros((4, 2, 1)))
    ch = np.zeros((4, 2, 1))
    ch[0] = 1.0
    b = FeatureMap(shape, ch)
    spec = KernelSpec("rbf", 0.5)
    g = gram(spec, [a, b])
    k12 = g.entries[0, 1]
    assert k12 < 0.9  # keeps the analytic optimum interior for C=10
    alpha, bias, converged, _ = train_binary(g, [1.0, -1.0], C=10.0)
    expected = 1.0 / (1.0 - k12)
    assert converged
    assert alpha[0] == pytest.approx(expected, abs=1e-12)
    assert alpha[1] == pytest.approx(expected, abs=1e-12)
    assert bias == pytest.approx(0.0, abs=1e-12)
    # both support vectors, decision signs match labels
    f = g.entries @ (alpha * np.array([1.0, -1.0])) + bias
    assert f[0] > 0 > f[1]


def test_train_binary_rejects_single_class():
    rng = np.random.default_rng(0)
    fms = [random_feature_map(rng) for _ in range(4)]
    g = gram(KernelSpec("rbf", 0.5), fms)
    with pytest.raises(ValueError):
        train_binary(g, [1.0, 1.0, 1.0, 1.0], C=1.0)


def separable_clusters(n_per=10, gap=4.0, seed=0):
    """Two far-apart clusters of tiny grids; kernel-separable by construction."""
    rng = np.random.default_rng(seed)
    shape = GridShape(2, 1)
    fms, y = [], []
    for sign in (+1.0, -1.0):
        center = 0.0 if sign > 0 else gap
        for _ in range(n_per):
            ch = np.zeros((4, 2, 1))
            ch[0] = center + rng.normal(0, 0.05, (2, 1))
            fms.append(FeatureMap(shape, ch))
            y.append(sign)
    return fms, np.array(y)


def test_linearly_separable_toy_set_fits_exactly():
    fms, y = separable_clusters()
    # brute-force check that the clusters really are kernel-separable:
    # nearest same-cluster similarity exceeds max cross-cluster similarity
    spec = KernelSpec("rbf", 0.5)
    g = gram(spec, fms)
    same = g.entries[:10, :10].min()
    cross = g.entries[:10, 10:].max()
    assert same > cross
    alpha, b, converged, _ = train_binary(g, y, C=10.0)
    f = g.entries @ (alpha * y) + b
    assert converged
    assert np.all(np.sign(f) == y)


def test_kkt_conditions_on_psd_gram():
    for seed in range(6):
        rng = np.random.default_rng(seed)
        fms = [random_feature_map(rng) for _ in range(30)]
        y = np.where(rng.random(30) > 0.5, 1.0, -1.0)
        if np.all(y == y[0]):
            y[0] = -y[0]
        g = gram(KernelSpec("rbf", 0.3), fms)
        alpha, b, converged, _ = smo_solve(g.entries, y, C=5.0, tol=1e-3,
                                           max_passes=300, seed=seed)
        assert converged
        assert kkt_violation(g.entries, y, alpha, b, C=5.0) <= 1e-3


def test_duplicating_samples_preserves_predictions():
    fms, y = separable_clusters(n_per=6)
    spec = KernelSpec("rbf", 0.5)
    g1 = gram(spec, fms)
    a1, b1, _, _ = train_binary(g1, y, C=10.0)
    doubled = fms + fms
    y2 = np.concatenate([y, y])
    g2 = gram(spec, doubled)
    a2, b2, _, _ = train_binary(g2, y2, C=10.0)
    f1 = g1.entries @ (a1 * y) + b1
    f2 = cross_kernel(spec, fms, doubled) @ (a2 * y2) + b2
    assert np.all(np.sign(f1) == np.sign(f2))


def test_multiclass_has_ten_binaries_and_vote_totals():
    ds = small_featurized()
    spec = KernelSpec.default(ds.grid_shape(), "cylindrical")
    model = train_multiclass(ds, spec, C=10.0, seed=0)
    assert len(model.binaries) == 10
    for b in model.binaries:
        # the equality constraint of the dual survives support-vector pruning
        assert abs(b.dual_coef.sum()) < 1e-6
    label, votes = predict(model, ds.items[0][0])
    assert votes.sum() == 10
    assert isinstance(label, IntentLabel)


def test_psd_clip_mode_trains_and_is_recorded():
    ds = small_featurized(per_class=6)
    spec = KernelSpec("cylindrical", 1.0, 1.0)
    clipped = train_multiclass(ds, spec, C=10.0, seed=0, psd_clip=True)
    assert clipped.train_meta["psd_clip"] is True
    assert "gram_min_eig" in clipped.train_meta
    pred, _ = predict_batch(clipped, ds.payloads())
    assert np.mean(pred == ds.labels()) > 0.8

    from cyltouch.svm import clip_psd

    g = gram(spec, ds.payloads())
    K = clip_psd(g.entries)
    assert np.linalg.eigvalsh(K)[0] >= -1e-9
    assert np.allclose(K, K.T)


def test_training_set_interpolation():
    ds = small_featurized(noise=0.01)
    spec = KernelSpec.default(ds.grid_shape(), "cylindrical")
    model = train_multiclass(ds, spec, C=10.0, seed=0)
    pred, _ = predict_batch(model, ds.payloads())
    assert np.mean(pred == ds.labels()) == 1.0


def test_shifted_prediction_agreement():
    from cyltouch.kernels import rotate_rows

    ds = small_featurized(per_class=10, max_shift=0)
    spec = KernelSpec.default(ds.grid_shape(), "cylindrical")
    model = train_multiclass(ds, spec, C=10.0, seed=0)
    plain, _ = predict_batch(model, ds.payloads())
    shifted, _ = predict_batch(model, [rotate_rows(fm, 1) for fm in ds.payloads()])
    assert np.mean(plain == shifted) >= 0.99


def test_model_file_round_trip_and_determinism(tmp_path):
    ds = small_featurized()
    spec = KernelSpec.default(ds.grid_shape(), "cylindrical")
    model = train_multiclass(ds, spec, C=10.0, seed=3)
    p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
    save_model(model, p1)
    model_again = train_multiclass(ds, spec, C=10.0, seed=3)
    save_model(model_again, p2)
    assert p1.read_bytes() == p2.read_bytes()

    loaded = load_model(p1)
    probe = [random_feature_map(np.random.default_rng(5)) for _ in range(10)]
    a, va = predict_batch(model, probe)
    b, vb = predict_batch(loaded, probe)
    assert np.array_equal(a, b)
    assert np.array_equal(va, vb)


def test_decision_consistency_against_slow_path():
    ds = small_featurized(per_class=6)
    spec = KernelSpec.default(ds.grid_shape(), "cylindrical")
    model = train_multiclass(ds, spec, C=10.0, seed=0)
    rng = np.random.default_rng(11)
    for _ in range(3):
        fm = random_feature_map(rng)
        slow = decision_values_slow(model, fm)
        K_cross = cross_kernel(model.spec, [fm], model.support_vectors)
        for b in model.binaries:
            fast = float(K_cross[0, b.support_indices] @ b.dual_coef + b.bias)
            key = (b.class_pair[0].name, b.class_pair[1].name)
            assert fast == pytest.approx(slow[key], abs=1e-9)


def test_permutation_invariance_of_predictions():
    ds = small_featurized(per_class=6, noise=0.02)
    spec = KernelSpec("rbf", 0.5)
    model = train_multiclass(ds, spec, C=10.0, seed=0)
    rng = np.random.default_rng(1)
    perm = rng.permutation(len(ds))
    shuffled = ds.subset([int(i) for i in perm])
    model_p = train_multiclass(shuffled, spec, C=10.0, seed=0)
    probe = ds.payloads()[:12]
    a, _ = predict_batch(model, probe)
    b, _ = predict_batch(model_p, probe)
    assert np.array_equal(a, b)


def test_predict_shape_mismatch():
    ds = small_featurized(per_class=4)
    spec = KernelSpec("rbf", 0.5)
    model = train_multiclass(ds, spec, C=10.0, seed=0)
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError):
        predict(model, random_feature_map(rng, GridShape(7, 3)))


def test_multiclass_needs_two_classes():
    ds = small_featurized(per_class=4)
    only = LabeledDataset("featurized",
                          [it for it in ds.items if it[1] == IntentLabel.stop],
                          ds.meta)
    with pytest.raises(ValueError):
        train_multiclass(only, KernelSpec("rbf", 0.5))


def test_nonconvergence_is_flagged_but_usable():
    ds = small_featurized(per_class=6)
    spec = KernelSpec.default(ds.grid_shape(), "cylindrical")
    model = train_multiclass(ds, spec, C=100.0, max_passes=1, seed=0)
    assert model.train_meta["converged_pairs"] < len(model.binaries)
    label, votes = predict(model, ds.items[0][0])
    assert votes.sum() == 10


def test_grid_search_degenerate_point():
    ds = small_featurized(per_class=5)
    grid = {"gamma": [0.1], "C": [1.0], "delta": [2.0]}
    res = grid_search(ds, "cylindrical", grid=grid, folds=2, seed=0)
    assert res.best_spec == KernelSpec("cylindrical", 0.1, 2.0)
    assert res.best_C == 1.0
    assert len(res.table) == 1
    assert res.best_cv_accuracy == res.table[0]["mean_accuracy"]


def test_grid_search_superset_dominates():
    ds = small_featurized(per_class=5)
    small = {"gamma": [1.0 / 220.0], "C": [10.0], "delta": [2.0]}
    big = {"gamma": [1.0 / 220.0, 0.1], "C": [10.0, 1.0], "delta": [2.0, 4.0]}
    res_small = grid_search(ds, "cylindrical", grid=small, folds=3, seed=0)
    res_big = grid_search(ds, "cylindrical", grid=big, folds=3, seed=0)
    assert res_big.best_cv_accuracy >= res_small.best_cv_accuracy
    assert len(res_big.table) == 8


def test_grid_search_validates_inputs():
    ds = small_featurized(per_class=4)
    with pytest.raises(ValueError):
        grid_search(ds, "rbf", folds=1)
    with pytest.raises(ValueError):
        grid_search(ds, "rbf", grid={"gamma": [], "C": [1.0]}, folds=2)


@pytest.mark.skipif(svm.DEFAULT_SMO_BACKEND == "numpy",
                    reason="compiled backend not built")
def test_smo_backends_take_identical_paths():
    rng = np.random.default_rng(3)
    fms = [random_feature_map(rng) for _ in range(25)]
    y = np.where(rng.random(25) > 0.5, 1.0, -1.0)
    y[0] = 1.0
    y[1] = -1.0
    for spec in (KernelSpec("rbf", 0.4), KernelSpec("cylindrical", 0.4, 1.0)):
        g = gram(spec, fms)
        a1, b1, c1, p1 = smo_solve(g.entries, y, 10.0, seed=9, backend="numpy")
        a2, b2, c2, p2 = smo_solve(g.entries, y, 10.0, seed=9, backend="compiled")
        assert (c1, p1) == (c2, p2)
        assert np.max(np.abs(a1 - a2)) < 1e-9
        assert abs(b1 - b2) < 1e-9

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import toy_raw_dataset
from cyltouch.dataset import (
    LabeledDataset,
    dataset_from_jsonl,
    dataset_to_jsonl,
    load_dataset,
    save_dataset,
    split_train_test,
    validate_dataset,
)
from cyltouch.simgen import GeneratorConfig, generate
from cyltouch.types import (
    FeatureMap,
    GridShape,
    IntentLabel,
    LABELS,
    TactileFrame,
    TactileWindow,
)


def test_label_encoding_bijection():
    assert [int(l) for l in LABELS] == [0, 1, 2, 3, 4]
    assert [l.name for l in LABELS] == [
        "turn_left", "turn_right", "speed_up", "stop", "neutral"]
    for l in LABELS:
        assert IntentLabel.from_name(l.name) is l
    with pytest.raises(ValueError):
        IntentLabel.from_name("sideways")


def test_grid_shape_invariants():
    assert GridShape().rows == 11 and GridShape().cols == 5
    with pytest.raises(ValueError):
        GridShape(1, 5)
    with pytest.raises(ValueError):
        GridShape(11, 0)


def test_frame_shape_checked():
    with pytest.raises(ValueError):
        TactileFrame(GridShape(11, 5), np.zeros((10, 5)))
    f = TactileFrame(GridShape(2, 2), np.zeros((2, 2)))
    assert not f.values.flags.writeable


def test_window_from_frames_rejects_mixed_shapes():
    a = TactileFrame(GridShape(2, 2), np.zeros((2, 2)))
    b = TactileFrame(GridShape(3, 2), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        TactileWindow.from_frames([a, b])
    with pytest.raises(ValueError):
        TactileWindow.from_frames([])


def test_validate_well_formed_default_dataset():
    ds = generate(GeneratorConfig(samples_per_class=40))
    report = validate_dataset(ds)
    assert report.valid, report.violations
    assert all(report.class_counts[l.name] == 40 for l in LABELS)


def test_validate_flags_nan():
    rng = np.random.default_rng(0)
    ds = toy_raw_dataset(rng)
    vals = ds.items[0][0].values.copy()
    vals[0, 0, 0] = np.nan
    ds.items[0] = (TactileWindow(ds.items[0][0].shape, vals), ds.items[0][1])
    report = validate_dataset(ds)
    assert not report.valid
    assert sum("non-finite" in v for v in report.violations) == 1


def test_validate_flags_shape_mismatch():
    rng = np.random.default_rng(0)
    ds = toy_raw_dataset(rng)
    odd = TactileWindow(GridShape(10, 5), rng.random((12, 10, 5)))
    ds.items.append((odd, IntentLabel.neutral))
    report = validate_dataset(ds)
    assert not report.valid
    assert any("grid shape" in v for v in report.violations)


def test_validate_flags_negative_and_empty_class():
    rng = np.random.default_rng(1)
    ds = toy_raw_dataset(rng)
    vals = ds.items[0][0].values.copy()
    vals[0, 0, 0] = -0.25
    ds.items[0] = (TactileWindow(ds.items[0][0].shape, vals), ds.items[0][1])
    ds.items = [(p, l) for p, l in ds.items if l != IntentLabel.stop]
    report = validate_dataset(ds)
    assert any("negative pressure" in v for v in report.violations)
    assert any(v == "empty class: stop" for v in report.violations)


def test_split_sizes_and_determinism():
    ds = generate(GeneratorConfig(samples_per_class=40))
    train, test = split_train_test(ds, 0.8, seed=7)
    assert (len(train), len(test)) == (160, 40)
    train2, test2 = split_train_test(ds, 0.8, seed=7)
    assert train.meta["split"]["indices"] == train2.meta["split"]["indices"]
    assert test.meta["split"]["indices"] == test2.meta["split"]["indices"]


@given(n_pairs=st.integers(2, 12), seed=st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_split_partitions(n_pairs, seed):
    rng = np.random.default_rng(0)
    ds = toy_raw_dataset(rng, per_class=max(1, n_pairs // 5 + 1), n_frames=3)
    train, test = split_train_test(ds, 0.5, seed=seed)
    tr = train.meta["split"]["indices"]
    te = test.meta["split"]["indices"]
    assert set(tr) | set(te) == set(range(len(ds)))
    assert not set(tr) & set(te)
    assert len(train) >= 1 and len(test) >= 1


def test_split_ten_samples_half():
    rng = np.random.default_rng(2)
    ds = toy_raw_dataset(rng, per_class=2, n_frames=3)
    assert len(ds) == 10
    train, test = split_train_test(ds, 0.5, seed=3)
    assert (len(train), len(test)) == (5, 5)


def test_split_rejects_bad_fraction():
    rng = np.random.default_rng(3)
    ds = toy_raw_dataset(rng, per_class=1, n_frames=3)
    for bad in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            split_train_test(ds, bad, seed=0)


def test_jsonl_round_trip_bit_exact(tmp_path):
    ds = generate(GeneratorConfig(samples_per_class=2))
    path = tmp_path / "d.jsonl"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back == ds
    # and the file itself is reproducible
    text = dataset_to_jsonl(ds)
    assert dataset_from_jsonl(text) == ds
    save_dataset(back, tmp_path / "d2.jsonl")
    assert (tmp_path / "d.jsonl").read_bytes() == (tmp_path / "d2.jsonl").read_bytes()


def test_featurized_round_trip(tmp_path):
    from cyltouch.featurize import featurize_dataset

    ds = featurize_dataset(generate(GeneratorConfig(samples_per_class=2)))
    path = tmp_path / "f.jsonl"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back == ds
    assert back.kind == "featurized"


def test_load_rejects_wrong_header(tmp_path):
    p = tmp_path / "x.jsonl"
    p.write_text('{"format": "something-else", "version": 1}\n')
    with pytest.raises(ValueError, match="not a cyltouch-dataset"):
        load_dataset(p)

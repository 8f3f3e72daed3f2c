import struct

import numpy as np
import pytest

from src.scenes.dataset import Dataset, Scene
from src.scenes.fsds import decode_dataset, encode_dataset, load_dataset, save_dataset
from src.scenes.partition import (
    build_global_test,
    covariate_shift_partition,
    iid_partition,
    label_shift_partition,
    reserve_held_out,
    split_local,
)
from src.scenes.stats import partition_stats, scene_summary
from src.scenes.synth import synth_image_dataset, synth_label_dataset
from src.utils.exceptions import ConfigurationError, DataError, FormatError
from src.xcli.models import parse_config
from src.xcli.scene_builder import build_scene


def test_label_shift_reproduces_fecifar_shape(rng):
    ds = synth_label_dataset(50_000, 10, 8, 3.0, rng)
    partition = label_shift_partition(ds, 100, 50, 5, rng)
    report = partition_stats(partition, ds)
    assert partition.num_clients == 100
    assert np.all(report.classes_per_client() == 5)
    assert np.all(report.sample_counts == 500)
    assert all(t.size == 400 for t in partition.train)
    assert all(t.size == 100 for t in partition.test)


def test_label_shift_is_seeded():
    ds = synth_label_dataset(400, 4, 3, 3.0, np.random.default_rng(0))
    first = label_shift_partition(ds, 4, 2, 2, np.random.default_rng(5))
    second = label_shift_partition(ds, 4, 2, 2, np.random.default_rng(5))
    for a, b in zip(first.train, second.train):
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("clients,per_class,per_client", [
    (5, 2, 3),   # K*m != C*S
    (4, 5, 5),   # m > C
])
def test_label_shift_infeasible(rng, clients, per_class, per_client):
    ds = synth_label_dataset(400, 4, 3, 3.0, rng)
    with pytest.raises(ConfigurationError):
        label_shift_partition(ds, clients, per_class, per_client, rng)


@pytest.mark.parametrize("build", [
    lambda ds, g: iid_partition(ds, 7, g),
    lambda ds, g: covariate_shift_partition(ds, 7, 0.5, g),
])
def test_partitions_are_disjoint(rng, build):
    ds = synth_label_dataset(300, 3, 4, 3.0, rng)
    partition = build(ds, rng)
    owned = np.concatenate([partition.client_indices(k) for k in range(partition.num_clients)])
    assert owned.size == np.unique(owned).size == 300


def test_covariate_shift_transforms_features(rng):
    ds = synth_label_dataset(100, 3, 4, 3.0, rng)
    shifted = Scene.build(ds, covariate_shift_partition(ds, 4, 1.0, rng))
    assert not np.allclose(shifted.dataset.features, ds.features)
    np.testing.assert_array_equal(shifted.dataset.labels, ds.labels)


def test_covariate_shift_moves_client_means(rng):
    ds = synth_label_dataset(2000, 4, 5, 3.0, rng)
    partition = covariate_shift_partition(ds, 2, 1.0, rng)
    shifted = Scene.build(ds, partition).dataset
    a, b = (shifted.features[partition.client_indices(k)] for k in range(2))
    assert a.shape[0] == b.shape[0] == 1000
    t = np.abs(a.mean(axis=0) - b.mean(axis=0)) / np.sqrt(a.var(axis=0, ddof=1) / len(a) + b.var(axis=0, ddof=1) / len(b))
    # largest Welch statistic clears the 1% two-sided level across 5 features
    assert t.max() > 3.5
    raw_a, raw_b = (ds.features[partition.client_indices(k)] for k in range(2))
    raw_gap = np.abs(raw_a.mean(axis=0) - raw_b.mean(axis=0)).max()
    assert np.abs(a.mean(axis=0) - b.mean(axis=0)).max() > 2 * raw_gap


def test_zero_strength_is_identity(rng):
    ds = synth_label_dataset(100, 3, 4, 3.0, rng)
    scene = Scene.build(ds, covariate_shift_partition(ds, 4, 0.0, rng))
    np.testing.assert_allclose(scene.dataset.features, ds.features)


def test_split_local_rounds_to_nearest():
    train, test = split_local(np.arange(10), 0.8, np.random.default_rng(1))
    assert train.size == 8 and test.size == 2
    assert np.intersect1d(train, test).size == 0


def test_held_out_reservation(rng):
    ds = synth_label_dataset(100, 2, 3, 3.0, rng)
    pool, held = reserve_held_out(ds, 0.2, rng)
    assert held.size == 20 and pool.size == 80
    assert np.intersect1d(pool, held).size == 0
    partition = iid_partition(ds, 4, rng, indices=pool)
    assert not np.isin(np.concatenate(partition.train), held).any()
    np.testing.assert_array_equal(build_global_test(partition, "held_out", held), held)


def test_union_of_local_global_test(iid_scene):
    expected = sum(t.size for t in iid_scene.partition.test)
    assert iid_scene.global_test.size == expected


def test_unknown_global_test_mode(iid_scene):
    with pytest.raises(ConfigurationError):
        build_global_test(iid_scene.partition, "everything")


def test_stats_frames(label_scene):
    report = partition_stats(label_scene.partition, label_scene.dataset)
    frame = report.to_frame()
    assert list(frame.columns) == ["client", "class", "count"]
    assert len(frame) == 4 * 4
    assert frame["count"].sum() == 240
    summary = scene_summary(label_scene.partition, label_scene.dataset, label_scene.global_test)
    assert summary.iloc[0].to_dict() == {"K": 4, "C": 4, "mean_train": 48.0, "mean_test": 12.0, "M": 48}


def test_stats_conserve_class_totals_with_held_out(config_document):
    config = parse_config(config_document())
    assert config.scene.global_test == "held_out"
    scene = build_scene(config.scene, config.seed)
    report = partition_stats(scene.partition, scene.dataset)
    np.testing.assert_array_equal(report.histogram.sum(axis=0), report.class_totals)
    np.testing.assert_array_equal(report.class_totals + report.held_out_totals, scene.dataset.class_counts())
    assert report.held_out_totals.sum() == scene.global_test.size == 40


def test_stats_without_held_out(label_scene):
    report = partition_stats(label_scene.partition, label_scene.dataset)
    assert not report.held_out_totals.any()
    np.testing.assert_array_equal(report.class_totals, label_scene.dataset.class_counts())


def test_dataset_rejects_bad_labels():
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 3)), np.array([0, 3]), 3)


def test_synth_image_shape(rng):
    ds = synth_image_dataset(20, 4, 6, 5, rng)
    assert ds.sample_shape == (1, 6, 5)
    assert np.all(ds.class_counts() == 5)


# ----------------------------------------------------------------------
# FSDS
# ----------------------------------------------------------------------
def test_fsds_file_round_trip(tmp_path, rng):
    ds = synth_image_dataset(12, 3, 4, 4, rng)
    path = tmp_path / "images.fsds"
    save_dataset(ds, path)
    loaded = load_dataset(path)
    assert loaded.sample_shape == (1, 4, 4)
    np.testing.assert_array_equal(loaded.labels, ds.labels)
    np.testing.assert_array_equal(loaded.features, ds.features)


def test_fsds_reloads_synthetic_features_bit_exactly(tmp_path, rng):
    ds = synth_label_dataset(50, 5, 7, 2.0, rng)
    path = tmp_path / "blobs.fsds"
    save_dataset(ds, path)
    loaded = load_dataset(path)
    assert np.array_equal(loaded.features, ds.features)
    assert np.array_equal(loaded.labels, ds.labels)
    assert loaded.num_classes == ds.num_classes
    assert loaded.features.dtype == np.float64


def test_fsds_bad_magic():
    with pytest.raises(FormatError) as info:
        decode_dataset(b"NOPE" + bytes(40))
    assert info.value.offset == 0


def test_fsds_truncated(rng):
    raw = encode_dataset(synth_label_dataset(6, 2, 3, 1.0, rng))
    with pytest.raises(FormatError):
        decode_dataset(raw[:-1])


def test_fsds_huge_dims_are_a_format_error():
    # 32-byte header, then a single record that cannot hold (2**32-1)**2 features
    raw = b"FSDS" + struct.pack("<IQI", 1, 1, 2) + struct.pack("<2I", 2 ** 32 - 1, 2 ** 32 - 1)
    raw += struct.pack("<I", 2) + bytes(16)
    with pytest.raises(FormatError) as info:
        decode_dataset(raw)
    assert info.value.offset == 32
    assert "features" in str(info.value)


def test_fsds_label_out_of_range(rng):
    raw = bytearray(encode_dataset(synth_label_dataset(6, 3, 3, 1.0, rng)))
    # rank 1: the class count sits right after the single dim
    raw[24:28] = struct.pack("<I", 1)
    with pytest.raises(FormatError) as info:
        decode_dataset(bytes(raw))
    assert "label" in str(info.value)


def test_missing_fsds_file(tmp_path):
    with pytest.raises(FormatError):
        load_dataset(tmp_path / "absent.fsds")

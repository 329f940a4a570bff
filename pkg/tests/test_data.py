"""Synthetic generation determinism/geometry and the dataset container."""

import numpy as np
import pytest

from conftest import mini_spec
from supersub.data import (
    Dataset,
    SyntheticSpec,
    deserialize_dataset,
    generate_synthetic,
    load_dataset,
    save_dataset,
    serialize_dataset,
)
from supersub.errors import FormatError, ParameterError
from supersub.hierarchy import make_manifest
from supersub.tensor import F32


class TestSyntheticSpec:
    def test_separation_ordering_enforced(self):
        with pytest.raises(ParameterError):
            mini_spec(super_sep=1.0, sub_sep=2.0)

    def test_noise_must_be_positive(self):
        with pytest.raises(ParameterError):
            mini_spec(noise_sigma=0.0)

    def test_subs_per_super_length_checked(self):
        with pytest.raises(ParameterError):
            mini_spec(subs_per_super=(2, 2, 2))


class TestGenerateSynthetic:
    def test_row_counts_exact(self):
        spec = mini_spec(n_train_per_sub=5)
        train, test = generate_synthetic(spec)
        assert train.n_rows == 4 * 5
        assert test.n_rows == 4 * 8
        counts = np.bincount(train.sub_labels, minlength=4)
        assert list(counts) == [5, 5, 5, 5]

    def test_same_seed_byte_identical(self):
        a_train, a_test = generate_synthetic(mini_spec())
        b_train, b_test = generate_synthetic(mini_spec())
        assert a_train.features.tobytes() == b_train.features.tobytes()
        assert a_test.features.tobytes() == b_test.features.tobytes()
        assert np.array_equal(a_train.sub_labels, b_train.sub_labels)

    def test_different_seed_differs(self):
        a, _ = generate_synthetic(mini_spec())
        b, _ = generate_synthetic(mini_spec(seed=0xBEEF))
        assert a.features.tobytes() != b.features.tobytes()

    def test_nearest_centroid_oracle_separates_superclasses(self):
        # With super_sep/noise at 6:1 the superclass problem is near-trivial:
        # a nearest-superclass-centroid classifier fit on train must clear 99%.
        spec = mini_spec(n_super=4, subs_per_super=(3, 3, 3, 3), dim=16,
                         n_train_per_sub=30, n_test_per_sub=25)
        train, test = generate_synthetic(spec)
        train_supers = train.super_labels()
        centroids = np.stack([
            train.features[train_supers == s].mean(axis=0) for s in range(spec.n_super)
        ])
        test_supers = test.super_labels()
        dists = ((test.features[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        pred = dists.argmin(axis=1)
        accuracy = (pred == test_supers).mean()
        assert accuracy >= 0.99

    def test_partition_property_random_specs(self):
        for seed in range(5):
            spec = mini_spec(n_super=2 + seed % 3,
                             subs_per_super=tuple([2 + seed % 2] * (2 + seed % 3)),
                             seed=seed, n_train_per_sub=3, n_test_per_sub=2)
            train, _ = generate_synthetic(spec)
            manifest = train.manifest
            assert sum(manifest.subclass_count(i) for i in range(manifest.n_super)) == manifest.n_sub


class TestDatasetContainer:
    def test_round_trip_bit_exact(self, mini_train):
        data = serialize_dataset(mini_train)
        again = deserialize_dataset(data)
        assert again.features.tobytes() == mini_train.features.tobytes()
        assert np.array_equal(again.sub_labels, mini_train.sub_labels)
        assert again.manifest == mini_train.manifest
        assert serialize_dataset(again) == data

    def test_file_round_trip(self, tmp_path, mini_train):
        path = tmp_path / "ds.hsds"
        save_dataset(mini_train, path)
        again = load_dataset(path)
        assert serialize_dataset(again) == serialize_dataset(mini_train)

    def test_corrupted_checksum_detected(self, mini_train):
        data = bytearray(serialize_dataset(mini_train))
        data[-1] ^= 0xFF
        with pytest.raises(FormatError):
            deserialize_dataset(bytes(data))

    def test_corrupted_payload_detected(self, mini_train):
        data = bytearray(serialize_dataset(mini_train))
        data[len(data) // 2] ^= 0x10
        with pytest.raises(FormatError):
            deserialize_dataset(bytes(data))

    def test_truncation_detected(self, mini_train):
        data = serialize_dataset(mini_train)
        with pytest.raises(FormatError):
            deserialize_dataset(data[: len(data) // 2])

    def test_bad_magic_detected(self, mini_train):
        data = bytearray(serialize_dataset(mini_train))
        data[0:4] = b"XXXX"
        with pytest.raises(FormatError):
            deserialize_dataset(bytes(data))

    def test_empty_dataset_round_trips(self):
        manifest = make_manifest([("A", ["a1", "a2"]), ("B", ["b1", "b2"])])
        empty = Dataset(np.zeros((0, 5), dtype=F32), np.zeros(0, dtype=np.int64), manifest)
        again = deserialize_dataset(serialize_dataset(empty))
        assert again.n_rows == 0
        assert again.dim == 5
        assert again.manifest == manifest

    def test_round_trip_many_random_specs(self):
        for seed in range(25):
            spec = SyntheticSpec(
                n_super=2 + seed % 3,
                subs_per_super=tuple([2 + (seed + 1) % 3] * (2 + seed % 3)),
                dim=1 + seed % 6,
                super_sep=5.0 + seed,
                sub_sep=1.0,
                noise_sigma=0.5,
                n_train_per_sub=1 + seed % 4,
                n_test_per_sub=1,
                seed=seed * 977,
            )
            train, test = generate_synthetic(spec)
            for ds in (train, test):
                blob = serialize_dataset(ds)
                assert serialize_dataset(deserialize_dataset(blob)) == blob


class TestDatasetViews:
    def test_super_labels_derived(self, mini_train):
        manifest = mini_train.manifest
        expected = np.asarray([manifest.super_of(int(s)) for s in mini_train.sub_labels])
        assert np.array_equal(mini_train.super_labels(), expected)

    def test_restrict_to_super(self, mini_train):
        sub = mini_train.restrict_to_super(1)
        assert sub.n_rows == 40
        assert set(int(s) for s in sub.super_labels()) == {1}

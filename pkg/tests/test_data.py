import json

import numpy as np
import pytest

from robust_reject import DataConfig, DatasetParseError, LabeledDataset, generate, load, save


def test_default_counts():
    train, test = generate(DataConfig(seed=7))
    assert len(train) == 600  # 2 * (100 + 200)
    assert len(test) == 300
    assert not train.is_test and test.is_test


def test_determinism_bit_identical():
    a_train, a_test = generate(DataConfig(seed=42))
    b_train, b_test = generate(DataConfig(seed=42))
    assert np.array_equal(a_train.points, b_train.points)
    assert np.array_equal(a_train.labels, b_train.labels)
    assert np.array_equal(a_test.points, b_test.points)
    assert np.array_equal(a_test.labels, b_test.labels)


def test_different_seeds_differ():
    a, _ = generate(DataConfig(seed=1))
    b, _ = generate(DataConfig(seed=2))
    assert not np.array_equal(a.points, b.points)


def test_all_points_inside_unit_ball():
    for seed in (0, 3, 9):
        train, test = generate(DataConfig(seed=seed))
        assert np.linalg.norm(train.points, axis=1).max() <= 1.0
        assert np.linalg.norm(test.points, axis=1).max() <= 1.0


def test_region_counts_and_class_balance():
    cfg = DataConfig(seed=5)
    train, _ = generate(cfg)
    x1 = train.points[:, 0]
    # pre-flip label = sign(x1): 300 per side
    assert (x1 > 0).sum() == 300 and (x1 < 0).sum() == 300
    band = np.abs(x1) <= cfg.reject_band_halfwidth
    assert band.sum() == 200  # 100 per class
    assert ((x1 > 0) & band).sum() == 100
    assert ((x1 > cfg.reject_band_halfwidth)).sum() == 200


def test_flip_counts():
    cfg = DataConfig(seed=11)
    train, test = generate(cfg)
    for ds, n_reject in ((train, 100), (test, 50)):
        flipped = ds.labels != np.sign(ds.points[:, 0]).astype(int)
        band = np.abs(ds.points[:, 0]) <= cfg.reject_band_halfwidth
        expected = int(np.floor(cfg.flip_fraction * n_reject + 0.5))
        assert flipped.sum() == 2 * expected  # per class
        assert np.all(band[flipped])  # flips only inside the band


def test_no_flips_gives_separable_data():
    train, test = generate(DataConfig(seed=13, flip_fraction=0.0))
    for ds in (train, test):
        assert np.all(ds.labels == np.sign(ds.points[:, 0]).astype(int))


def test_round_trip(tmp_path):
    train, _ = generate(DataConfig(seed=21))
    path = save(train, tmp_path / "train.csv")
    back = load(path)
    assert np.array_equal(back.points, train.points)
    assert np.array_equal(back.labels, train.labels)
    assert back.seed == train.seed and back.is_test == train.is_test
    assert back.config == train.config


def test_sidecar_metadata(tmp_path):
    train, _ = generate(DataConfig(seed=33))
    save(train, tmp_path / "d.csv")
    meta = json.loads((tmp_path / "d.meta.json").read_text())
    assert meta["seed"] == 33
    assert meta["generator"] == "numpy-pcg64"
    assert meta["config"]["n_reject_per_class"] == 100


def test_empty_dataset_round_trip(tmp_path):
    empty = LabeledDataset(np.empty((0, 2)), np.empty(0, dtype=int))
    path = save(empty, tmp_path / "empty.csv")
    assert path.read_text() == "x1,x2,label\n"
    assert len(load(path)) == 0


class TestParseErrors:
    def _write(self, tmp_path, body):
        p = tmp_path / "bad.csv"
        p.write_text("x1,x2,label\n" + body)
        return p

    def test_zero_label_names_line(self, tmp_path):
        p = self._write(tmp_path, "0.1,0.2,1\n0.3,0.1,0\n")
        with pytest.raises(DatasetParseError, match=":3"):
            load(p)

    def test_wrong_column_count(self, tmp_path):
        p = self._write(tmp_path, "0.1,0.2\n")
        with pytest.raises(DatasetParseError, match="3 columns"):
            load(p)

    def test_point_outside_ball(self, tmp_path):
        p = self._write(tmp_path, "0.9,0.9,1\n")
        with pytest.raises(DatasetParseError, match="unit ball"):
            load(p)
        assert len(load(p, check_ball=False)) == 1

    def test_non_numeric(self, tmp_path):
        p = self._write(tmp_path, "a,0.2,1\n")
        with pytest.raises(DatasetParseError, match=":2"):
            load(p)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("a,b,c\n")
        with pytest.raises(DatasetParseError, match=":1"):
            load(p)


class TestConfigValidation:
    @pytest.mark.parametrize("kwargs", [
        {"flip_fraction": -0.1}, {"flip_fraction": 1.5},
        {"n_reject_per_class": -1}, {"reject_band_halfwidth": 0.0},
        {"reject_band_halfwidth": 1.0}, {"seed": -1},
    ])
    def test_rejected(self, kwargs):
        with pytest.raises(ValueError):
            DataConfig(**kwargs)

    def test_label_validation(self):
        with pytest.raises(ValueError):
            LabeledDataset(np.zeros((2, 2)), np.array([1, 0]))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            LabeledDataset(np.zeros((2, 2)), np.array([1]))


def test_test_scale_changes_counts():
    train, test = generate(DataConfig(seed=2, test_scale=0.25))
    assert len(train) == 600
    assert len(test) == 150  # 2 * (25 + 50)

import numpy as np
import pytest

import cxrpipe


def blobs(rng, counts, dim=6, sep=4.0):
    X, y = [], []
    for c, n in enumerate(counts):
        centre = np.zeros(dim)
        centre[c % dim] = sep
        X.append(centre + rng.normal(size=(n, dim)))
        y += [c] * n
    return np.vstack(X), np.array(y, dtype=np.int32)


def test_enhance_constant_goes_black_and_keeps_shape():
    out = cxrpipe.enhance(np.full((12, 20), 90.0))
    assert out.shape == (12, 20)
    assert np.all(out == 0.0)


def test_enhance_gamma_one_on_random_image_stays_in_range():
    rng = np.random.default_rng(1)
    out = cxrpipe.enhance(rng.integers(0, 256, size=(32, 32)).astype(float), gamma=1.0)
    assert out.min() >= 0.0 and out.max() <= 255.0


def test_hog_length_and_block_norm():
    rng = np.random.default_rng(2)
    v = cxrpipe.hog(rng.uniform(0, 255, size=(64, 64)))
    assert v.shape == (1764,)
    blocks = v.reshape(-1, 36)
    assert np.all(np.linalg.norm(blocks, axis=1) <= 1.0 + 1e-9)
    with pytest.raises(cxrpipe.ArgumentError):
        cxrpipe.hog(np.zeros((20, 20)))


def test_fit_resample_balances_and_keeps_originals():
    rng = np.random.default_rng(3)
    X, y = blobs(rng, [30, 20, 10, 5])
    Xr, yr = cxrpipe.fit_resample(X, y, "all=30", seed=4)
    assert np.array_equal(Xr[: len(X)], X)
    assert np.bincount(yr).tolist() == [30, 30, 30, 30]
    Xa, _ = cxrpipe.fit_resample(X, y, "all=30", seed=4)
    assert np.array_equal(Xa, Xr)


def test_classifiers_fit_separable_blobs_and_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    X, y = blobs(rng, [25, 25, 25, 25])
    for model in (cxrpipe.train_svm(X, y, C=10.0, kernel="linear"), cxrpipe.train_forest(X, y, n_trees=15, seed=1)):
        p = model.predict_proba(X)
        assert p.shape == (100, 4)
        assert np.allclose(p.sum(axis=1), 1.0)
        assert (cxrpipe.predict(model, X) == y).mean() >= 0.95
        path = tmp_path / "model.modl"
        cxrpipe.save_model(model, str(path))
        assert np.array_equal(cxrpipe.load_model(str(path)).predict_proba(X), p)


def test_metrics_report_worked_example():
    r = cxrpipe.metrics_report(np.array([0, 0, 1, 1]), np.array([0, 1, 1, 1]), classes=2)
    assert r["accuracy"] == pytest.approx(0.75)
    assert r["macro_f1"] == pytest.approx((2 / 3 + 0.8) / 2)
    assert r["support"] == [2, 2]


def test_lime_finds_planted_segment_and_overlay_shape():
    rng = np.random.default_rng(6)
    img = rng.integers(0, 256, size=(32, 32)).astype(float)

    def classifier(x):
        s = x[8:16, 16:24].mean() / 255.0  # segment 6 of a 4x4 grid
        return [s, 1.0 - s]

    e = cxrpipe.lime(img, classifier, target=0, grid=4, num_samples=300, seed=2)
    assert len(e["weights"]) == 16
    assert int(np.argmax(np.abs(e["weights"]))) == 6
    ov = cxrpipe.overlay(img, e["weights"], grid=4, top_k=1)
    assert ov.shape == (32, 32, 3)

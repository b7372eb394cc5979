import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from rnaseg.candidates import Candidate
from rnaseg.imgcore import AnnotationSet
from rnaseg.model import (LinearModel, ModelFormatError, NormStats, SingleClassError,
                          TrainConfig, class_weights, feature_shares, fit, label_candidates,
                          load_model, sample_weights, save_model, svm_objective, train,
                          weight_breakdown, write_breakdown)
from rnaseg.texture import manifest


def _truth(*pts):
    return AnnotationSet(np.array(pts, float).reshape(-1, 2), source="t")


def test_labels_boundary():
    c = [Candidate(10, 10, 0, 0)]
    assert label_candidates(c, _truth((10, 11))).tolist() == [1]
    assert label_candidates(c, _truth((11, 11))).tolist() == [0]
    assert label_candidates(c, _truth()).tolist() == [0]
    arr = np.array([[10, 10, 0, 0], [0, 0, 0, 0]])
    assert label_candidates(arr, _truth((10.6, 10.7))).tolist() == [1, 0]


def test_normaliser_examples():
    X = np.array([[0.0, 5.0], [2.0, 5.0]])
    n = NormStats.fit(X)
    assert n.apply(X).tolist() == [[-1.0, 0.0], [1.0, 0.0]]
    rng = np.random.default_rng(3)
    Y = rng.normal(size=(50, 4)) * [1, 10, 1e3, 0.1] + 7
    m = NormStats.fit(Y)
    Z = m.apply(Y)
    assert np.allclose(Z.mean(axis=0), 0, atol=1e-12) and np.allclose(Z.std(axis=0), 1)
    assert np.allclose(m.invert(Z), Y, atol=1e-12, rtol=0)
    with pytest.raises(ValueError):
        NormStats.fit(np.zeros((0, 3)))


def test_toy_one_dimension():
    m = train(np.array([[-1.0], [1.0]]), np.array([0, 1]))
    assert m.weights[0] == pytest.approx(1.0, abs=1e-6)
    assert m.bias == pytest.approx(0.0, abs=1e-6)
    assert m.predict_label(np.array([[0.5]])).tolist() == [1]
    assert np.all(np.array([-1, 1]) * m.predict_score(np.array([[-1.0], [1.0]])) >= 1 - 1e-6)


def test_balanced_weights():
    y = np.array([0] * 90 + [1] * 10)
    cw = class_weights(y)
    assert cw[0] == pytest.approx(100 / 180) and cw[1] == 5.0
    assert sample_weights(y, TrainConfig(class_weighting="none")).tolist() == [1.0] * 100


def test_duplicated_rows_with_half_c(rng):
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] + 0.5 * rng.normal(size=40) > 0).astype(int)
    a = train(X, y, TrainConfig(C=1.0))
    b = train(np.vstack([X, X]), np.concatenate([y, y]), TrainConfig(C=0.5))
    assert np.allclose(a.weights, b.weights, atol=1e-5)
    assert a.bias == pytest.approx(b.bias, abs=1e-5)


def test_single_class_rejected():
    with pytest.raises(SingleClassError):
        train(np.zeros((3, 2)), np.array([1, 1, 1]))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(C=0)
    with pytest.raises(ValueError):
        TrainConfig(tol=-1)
    with pytest.raises(ValueError):
        TrainConfig(penalty="l1")


def test_zero_model_and_dimension_check():
    m = LinearModel(np.zeros(3), 0.0, NormStats(np.zeros(3), np.ones(3)))
    assert m.predict_score(np.array([4.0, -2.0, 9.0])) == 0
    with pytest.raises(ValueError, match="expected 3"):
        m.predict_score(np.zeros((2, 4)))


def test_constant_dimension_with_zero_weight(rng):
    X = rng.normal(size=(30, 2))
    y = (X[:, 1] > 0).astype(int)
    m = fit(X, y)
    X3 = np.column_stack([X, np.full(30, 4.0)])
    m3 = fit(X3, y)
    assert m3.weights[2] == 0
    assert np.allclose(m.predict_score(X), m3.predict_score(X3), atol=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_toy_optimum_matches_grid(seed):
    rng = np.random.default_rng(seed)
    d = 1 + seed % 2
    n = 25
    X = rng.normal(size=(n, d))
    y = (X @ rng.normal(size=d) + rng.normal(scale=0.7, size=n) > 0).astype(int)
    cfg = TrainConfig(C=[0.1, 1.0, 10.0][seed % 3])
    m = train(X, y, cfg)
    ys = np.where(y > 0, 1.0, -1.0)
    cost = cfg.C * sample_weights(y, cfg)
    grid, _ = O.svm_grid_optimum(X, ys, cost)
    ours = svm_objective(m.weights, m.bias, X, y, cfg.C, sample_weights(y, cfg))
    assert abs(ours - grid) <= 1e-4 * grid


def test_training_is_deterministic(rng):
    X = rng.normal(size=(200, 5))
    y = (X[:, 0] - X[:, 3] > 0.2).astype(int)
    a, b = fit(X, y), fit(X, y)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 100), st.floats(-50, 50), st.integers(0, 1000))
def test_scaling_inputs_keeps_labels(scale, shift, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 2))
    y = (X[:, 0] + 0.3 * rng.normal(size=40) > 0).astype(int)
    if len(set(y)) < 2:
        return
    probe = rng.normal(size=(20, 2))
    a = fit(X, y)
    b = fit(X * scale + shift, y)
    sa, sb = a.predict_score(probe), b.predict_score(probe * scale + shift)
    assert np.allclose(sa, sb, atol=1e-5)
    confident = np.abs(sa) > 1e-4
    assert np.array_equal(sa[confident] > 0, sb[confident] > 0)


def test_persistence_roundtrip(tmp_path, rng):
    specs = manifest("reduced")
    X = rng.normal(size=(60, 24)) * 3 + 1
    y = (X[:, 0] + X[:, 5] > 2).astype(int)
    m = fit(X, y, specs=specs, feature_set="reduced")
    save_model(tmp_path / "m.txt", m)
    back = load_model(tmp_path / "m.txt")
    probe = rng.normal(size=(30, 24))
    assert np.array_equal(m.predict_score(probe), back.predict_score(probe))
    assert back.specs == specs and back.config == m.config
    custom = fit(X[:, :3], y)
    save_model(tmp_path / "c.txt", custom)
    assert np.array_equal(load_model(tmp_path / "c.txt").weights, custom.weights)


def test_bad_model_file(tmp_path):
    (tmp_path / "x.txt").write_text("format=other\n[features]\n")
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "x.txt")
    (tmp_path / "y.txt").write_text("hello\n")
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "y.txt")


def _model_with(weights):
    specs = manifest("reduced")
    return LinearModel(np.asarray(weights, float), 0.0, NormStats(np.zeros(24), np.ones(24)),
                       specs, "reduced")


def test_breakdown_single_weight():
    w = np.zeros(24)
    w[7] = -3.0
    rows = weight_breakdown(_model_with(w))
    spec = manifest("reduced")[7]
    assert rows[0]["share"] == 1.0
    assert (rows[0]["family"], rows[0]["feature"], rows[0]["channel"]) == (
        spec.family, spec.name, spec.channel)


def test_breakdown_uniform(tmp_path):
    rows = weight_breakdown(_model_with(np.ones(24)))
    shares = feature_shares(rows)
    assert len(shares) == 4 and all(v == pytest.approx(0.25) for v in shares.values())
    assert sum(r["share"] for r in rows) == pytest.approx(1.0, abs=1e-12)
    write_breakdown(tmp_path / "b.csv", rows)
    assert (tmp_path / "b.csv").read_text().startswith("family,feature,channel,share\n")


def test_breakdown_all_zero():
    assert all(r["share"] == 0 for r in weight_breakdown(_model_with(np.zeros(24))))

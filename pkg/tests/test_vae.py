import json
import math

import numpy as np
import pytest

from conftest import small_detector
from vaeguard.errors import (
    CorruptModelFile,
    InsufficientData,
    NotFittedError,
    SchemaMismatch,
)
from vaeguard.nn import VaeArchitecture
from vaeguard.summarize import FEATURE_DIM, ActivityVector, IntervalKey
from vaeguard.thresholds import KSigmaThreshold
from vaeguard.vae import (
    TrainConfig,
    VaeStabilityDetector,
    load_model,
    save_model,
    train,
)


def toy_matrix(n=40, dim=6, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 1, size=(n, dim))


TOY_CONFIG = TrainConfig(epochs=10, batch_size=8, accumulation_target=20, seed=1)
TOY_ARCH = VaeArchitecture(input_dim=6, hidden_units=(5, 4), latent_dim=2)


def test_train_is_deterministic():
    X = toy_matrix()
    params_a, curve_a = train(X, TOY_ARCH, TOY_CONFIG)
    params_b, curve_b = train(X, TOY_ARCH, TOY_CONFIG)
    for key in params_a:
        np.testing.assert_array_equal(params_a[key], params_b[key])
    assert curve_a.recon_per_epoch == curve_b.recon_per_epoch
    assert curve_a.error_mean == curve_b.error_mean


def test_train_curve_shape_and_stats():
    X = toy_matrix()
    _, curve = train(X, TOY_ARCH, TOY_CONFIG)
    assert len(curve.recon_per_epoch) == TOY_CONFIG.epochs
    assert len(curve.kl_per_epoch) == TOY_CONFIG.epochs
    assert curve.settled_error == curve.recon_per_epoch[-1]
    assert curve.error_mean >= 0 and curve.error_sd >= 0
    assert all(math.isfinite(v) and v >= 0 for v in curve.recon_per_epoch)
    assert all(math.isfinite(v) and v >= 0 for v in curve.kl_per_epoch)


def test_train_rejects_insufficient_data():
    X = toy_matrix(n=119, dim=4)
    arch = VaeArchitecture(input_dim=4, hidden_units=(4,), latent_dim=2)
    with pytest.raises(InsufficientData) as excinfo:
        train(X, arch, TrainConfig(accumulation_target=120, epochs=1))
    assert excinfo.value.actual == 119
    assert excinfo.value.required == 120
    assert "119" in str(excinfo.value) and "120" in str(excinfo.value)


def test_training_reduces_reconstruction_error(small_baseline_summaries):
    from vaeguard.summarize import vectors_to_matrix

    X = vectors_to_matrix([v for _, _, v in small_baseline_summaries])
    detector = small_detector().fit(X)
    curve = detector.curve_
    assert curve.recon_per_epoch[-1] <= curve.recon_per_epoch[0]


# -- estimator surface --------------------------------------------------------


def test_fit_returns_self_and_sets_attributes():
    detector = small_detector(accumulation_target=20, epochs=5)
    X = toy_matrix(n=20)
    assert detector.fit(X) is detector
    assert detector.n_features_in_ == 6
    assert detector.scaler_ is not None
    assert detector.threshold_ > 0
    assert isinstance(detector.threshold_policy_, KSigmaThreshold)


def test_unfitted_detector_raises():
    with pytest.raises(NotFittedError):
        small_detector().score_samples(toy_matrix(n=2))


def test_get_params_set_params_protocol():
    detector = small_detector()
    params = detector.get_params()
    assert params["latent_dim"] == 4
    assert params["threshold_k"] == 3.0
    clone = VaeStabilityDetector(**params)
    assert clone.get_params() == params
    detector.set_params(threshold_k=5.0)
    assert detector.threshold_k == 5.0
    with pytest.raises(ValueError):
        detector.set_params(nonsense=1)


def test_score_samples_deterministic_and_nonnegative(small_trained_detector, small_baseline_summaries):
    from vaeguard.summarize import vectors_to_matrix

    X = vectors_to_matrix([v for _, _, v in small_baseline_summaries])
    errors_a = small_trained_detector.score_samples(X)
    errors_b = small_trained_detector.score_samples(X)
    np.testing.assert_array_equal(errors_a, errors_b)
    assert (errors_a >= 0).all()


def test_training_members_score_near_settled_error(small_trained_detector, small_baseline_summaries):
    from vaeguard.summarize import vectors_to_matrix

    X = vectors_to_matrix([v for _, _, v in small_baseline_summaries])
    errors = small_trained_detector.score_samples(X)
    assert (errors <= 10.0 * small_trained_detector.curve_.error_mean).all()


def test_zero_vector_is_unstable_against_traffic_model(small_trained_detector):
    key = IntervalKey("web-0", 999, 30.0)
    zero = ActivityVector(key=key, features=np.zeros(FEATURE_DIM))
    record = small_trained_detector.score_vector(zero)
    assert record.recon_error > small_trained_detector.threshold_


def test_predict_outlier_convention(small_trained_detector, small_baseline_summaries):
    from vaeguard.summarize import vectors_to_matrix

    X = vectors_to_matrix([v for _, _, v in small_baseline_summaries])
    verdicts = small_trained_detector.predict(X)
    assert set(np.unique(verdicts)) <= {-1, 1}
    assert (verdicts == 1).mean() >= 0.9
    spike = X.copy()[:1] * 1000.0
    assert small_trained_detector.predict(spike)[0] == -1


def test_transform_returns_latent_means(small_trained_detector):
    X = toy_matrix(n=3, dim=FEATURE_DIM, seed=5)
    latent = small_trained_detector.transform(X)
    assert latent.shape == (3, small_trained_detector.latent_dim)
    mu, logvar = small_trained_detector.encode(X)
    np.testing.assert_array_equal(latent, mu)
    assert logvar.shape == (3, small_trained_detector.latent_dim)


def test_score_vector_round_trip(small_trained_detector, small_baseline_summaries):
    _, _, vector = small_baseline_summaries[0]
    record = small_trained_detector.score_vector(vector)
    assert record.key == vector.key
    assert record.mu.shape == (small_trained_detector.latent_dim,)
    again = small_trained_detector.score_vector(vector)
    assert record.recon_error == again.recon_error
    np.testing.assert_array_equal(record.mu, again.mu)


def test_score_vector_schema_checks(small_trained_detector):
    bad_version = ActivityVector(
        key=IntervalKey("web-0", 0, 30.0),
        features=np.zeros(FEATURE_DIM),
        schema_version=99,
    )
    with pytest.raises(SchemaMismatch):
        small_trained_detector.score_vector(bad_version)
    with pytest.raises(SchemaMismatch):
        small_trained_detector.score_samples(np.zeros((1, FEATURE_DIM + 1)))


def test_set_threshold_k_rederives_policy(small_trained_detector):
    detector = small_trained_detector
    t3 = detector.threshold_
    detector.set_threshold_k(5.0)
    t5 = detector.threshold_
    detector.set_threshold_k(3.0)
    assert t5 > t3
    assert detector.threshold_ == t3


# -- persistence --------------------------------------------------------------


def test_save_load_round_trip_is_bit_identical(tmp_path, small_trained_detector):
    X = toy_matrix(n=5, dim=FEATURE_DIM, seed=9) * 100
    path = tmp_path / "model.json"
    save_model(small_trained_detector, path)
    loaded = load_model(path)
    np.testing.assert_array_equal(
        small_trained_detector.score_samples(X), loaded.score_samples(X)
    )
    for key in small_trained_detector.weights_:
        np.testing.assert_array_equal(
            small_trained_detector.weights_[key], loaded.weights_[key]
        )
    assert loaded.threshold_ == small_trained_detector.threshold_
    assert loaded.container_id == small_trained_detector.container_id


def test_save_twice_is_byte_identical(tmp_path, small_trained_detector):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    save_model(small_trained_detector, a)
    save_model(small_trained_detector, b)
    assert a.read_bytes() == b.read_bytes()


def test_truncated_bundle_is_corrupt(tmp_path, small_trained_detector):
    path = tmp_path / "model.json"
    save_model(small_trained_detector, path)
    payload = path.read_bytes()
    path.write_bytes(payload[: len(payload) // 2])
    with pytest.raises(CorruptModelFile):
        load_model(path)


def test_wrong_format_is_corrupt(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps({"format": "something-else"}), encoding="utf-8")
    with pytest.raises(CorruptModelFile):
        load_model(path)


def test_missing_file_is_corrupt(tmp_path):
    with pytest.raises(CorruptModelFile):
        load_model(tmp_path / "nope.json")


def test_dimension_mismatch_on_load(tmp_path, small_trained_detector):
    path = tmp_path / "model.json"
    save_model(small_trained_detector, path)
    with pytest.raises(SchemaMismatch):
        load_model(path, expected_dim=FEATURE_DIM + 1)
    assert load_model(path, expected_dim=FEATURE_DIM) is not None


def test_schema_version_mismatch_on_load(tmp_path, small_trained_detector):
    path = tmp_path / "model.json"
    save_model(small_trained_detector, path)
    bundle = json.loads(path.read_text(encoding="utf-8"))
    bundle["schema_version"] = 99
    path.write_text(json.dumps(bundle), encoding="utf-8")
    with pytest.raises(SchemaMismatch):
        load_model(path)


def test_heuristic_policy_round_trip(tmp_path, small_trained_detector):
    from vaeguard.thresholds import HeuristicThreshold

    path = tmp_path / "model.json"
    original_policy = small_trained_detector.threshold_policy_
    try:
        small_trained_detector.threshold_policy_ = HeuristicThreshold(0.5)
        save_model(small_trained_detector, path)
    finally:
        small_trained_detector.threshold_policy_ = original_policy
    loaded = load_model(path)
    assert isinstance(loaded.threshold_policy_, HeuristicThreshold)
    assert loaded.threshold_ == 0.5


def test_tampered_weights_are_corrupt(tmp_path, small_trained_detector):
    path = tmp_path / "model.json"
    save_model(small_trained_detector, path)
    bundle = json.loads(path.read_text(encoding="utf-8"))
    bundle["weights"]["enc0_w"]["data"] = [1.0, 2.0]
    path.write_text(json.dumps(bundle), encoding="utf-8")
    with pytest.raises(CorruptModelFile):
        load_model(path)

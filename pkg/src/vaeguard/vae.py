"""Per-container stability detector: scaler + VAE + threshold in one estimator.

VaeStabilityDetector follows the sklearn estimator protocol. fit() takes a
matrix of raw activity vectors, fits the min-max scaler, trains the VAE
with mini-batch Adam, and derives the k-sigma decision threshold from the
final epoch's training reconstruction errors. Scoring is deterministic:
the latent code is the posterior mean, never a sample, so one interval
always yields one reconstruction error.

Model bundles persist as a single JSON document (text, trailing newline).
JSON numbers round-trip float64 exactly via repr, which is what makes
fixed-seed training runs byte-identical on disk.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass

import numpy as np

from vaeguard import nn
from vaeguard.errors import (
    CorruptModelFile,
    InsufficientData,
    SchemaMismatch,
)
from vaeguard.nn import AdamConfig, VaeArchitecture
from vaeguard.scaling import ActivityScaler
from vaeguard.summarize import SCHEMA_VERSION, ActivityVector, IntervalKey
from vaeguard.thresholds import (
    HeuristicThreshold,
    KSigmaThreshold,
    ThresholdPolicy,
    fit_threshold_ksigma,
)
from vaeguard.validation import (
    ParamsMixin,
    as_float_matrix,
    check_dimension,
    check_finite,
    check_fitted,
)

logger = logging.getLogger(__name__)

BUNDLE_FORMAT = "vaeguard.model"
BUNDLE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults are the published configuration."""

    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 100
    batch_size: int = 16
    kl_weight: float = 1.0
    accumulation_target: int = 120
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.accumulation_target < 1:
            raise ValueError("accumulation_target must be >= 1")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValueError("learning_rate and epsilon must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.kl_weight < 0:
            raise ValueError("kl_weight must be >= 0")

    def adam(self) -> AdamConfig:
        return AdamConfig(
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
        )


@dataclass
class TrainingCurve:
    """Per-epoch training losses plus the settled last-epoch statistics."""

    recon_per_epoch: list[float]
    kl_per_epoch: list[float]
    error_mean: float
    error_sd: float
    settled_error: float


@dataclass(frozen=True)
class LatentRecord:
    """Compact per-interval record: posterior and its reconstruction error."""

    key: IntervalKey
    mu: np.ndarray
    logvar: np.ndarray
    recon_error: float


def train(
    data: np.ndarray, arch: VaeArchitecture, config: TrainConfig
) -> tuple[nn.Params, TrainingCurve]:
    """Mini-batch gradient descent over normalized vectors.

    Weight init, epoch shuffles, and reparameterization draws all come
    from one seeded generator, so (data, config) fully determines the
    returned weights.
    """
    data = as_float_matrix(data, "training data")
    check_finite(data, "training data")
    n = data.shape[0]
    if n < config.accumulation_target:
        raise InsufficientData(n, config.accumulation_target)
    check_dimension(arch.input_dim, data.shape[1], "training data")

    rng = np.random.default_rng(config.seed)
    params = nn.init_params(arch, rng)
    state = nn.adam_init(params)
    adam_config = config.adam()

    recon_curve: list[float] = []
    kl_curve: list[float] = []
    last_epoch_errors: np.ndarray | None = None
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        recon_sum = 0.0
        kl_sum = 0.0
        final_epoch = epoch == config.epochs - 1
        collected: list[np.ndarray] = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb = data[idx]
            eps = rng.standard_normal((len(idx), arch.latent_dim))
            grads, (_, recon, kl) = nn.elbo_gradients(
                arch, params, xb, eps, config.kl_weight
            )
            if final_epoch:
                collected.append(
                    nn.sampled_reconstruction_errors(arch, params, xb, eps)
                )
            step += 1
            params, state = nn.adam_step(params, grads, state, adam_config, step)
            recon_sum += recon * len(idx)
            kl_sum += kl * len(idx)
        recon_curve.append(recon_sum / n)
        kl_curve.append(kl_sum / n)
        if final_epoch:
            last_epoch_errors = np.concatenate(collected)

    assert last_epoch_errors is not None
    curve = TrainingCurve(
        recon_per_epoch=recon_curve,
        kl_per_epoch=kl_curve,
        error_mean=float(np.mean(last_epoch_errors)),
        error_sd=float(np.std(last_epoch_errors)),
        settled_error=recon_curve[-1],
    )
    logger.info(
        "trained VAE: %d samples, %d epochs, recon %.6g -> %.6g",
        n,
        config.epochs,
        recon_curve[0],
        curve.settled_error,
    )
    return params, curve


class VaeStabilityDetector(ParamsMixin):
    """Learns a container's stable runtime pattern from activity vectors.

    Higher score_samples() output means further from the trained pattern;
    predict() returns +1 for stable intervals, -1 for drifted ones,
    using the k-sigma threshold fitted from the training curve.
    """

    def __init__(
        self,
        hidden_units: tuple[int, ...] = (16, 16, 16),
        latent_dim: int = 10,
        learning_rate: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        epochs: int = 100,
        batch_size: int = 16,
        kl_weight: float = 1.0,
        accumulation_target: int = 120,
        threshold_k: float = 3.0,
        seed: int = 0,
    ):
        self.hidden_units = hidden_units
        self.latent_dim = latent_dim
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.epochs = epochs
        self.batch_size = batch_size
        self.kl_weight = kl_weight
        self.accumulation_target = accumulation_target
        self.threshold_k = threshold_k
        self.seed = seed

        self.scaler_: ActivityScaler | None = None
        self.architecture_: VaeArchitecture | None = None
        self.weights_: nn.Params | None = None
        self.curve_: TrainingCurve | None = None
        self.threshold_policy_: ThresholdPolicy | None = None
        self.container_id: str | None = None

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
            epochs=self.epochs,
            batch_size=self.batch_size,
            kl_weight=self.kl_weight,
            accumulation_target=self.accumulation_target,
            seed=self.seed,
        )

    @property
    def n_features_in_(self) -> int:
        check_fitted(self, "architecture_")
        return self.architecture_.input_dim

    @property
    def threshold_(self) -> float:
        check_fitted(self, "threshold_policy_")
        return self.threshold_policy_.threshold

    def fit(self, X, y=None) -> "VaeStabilityDetector":
        X = as_float_matrix(X)
        check_finite(X, "X")
        config = self._train_config()
        arch = VaeArchitecture(
            input_dim=X.shape[1],
            hidden_units=tuple(self.hidden_units),
            latent_dim=self.latent_dim,
        )
        self.scaler_ = ActivityScaler().fit(X)
        normalized = self.scaler_.transform(X)
        self.weights_, self.curve_ = train(normalized, arch, config)
        self.architecture_ = arch
        self.threshold_policy_ = fit_threshold_ksigma(self.curve_, self.threshold_k)
        return self

    def set_threshold_k(self, k: float) -> "VaeStabilityDetector":
        """Re-derive the k-sigma policy from the stored training curve."""
        check_fitted(self, "curve_")
        self.threshold_policy_ = fit_threshold_ksigma(self.curve_, k)
        self.threshold_k = k
        return self

    def _check_ready(self, X) -> np.ndarray:
        check_fitted(self, "weights_")
        X = as_float_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise SchemaMismatch(
                f"input has {X.shape[1]} features, model expects {self.n_features_in_}"
            )
        return X

    def encode(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Posterior (mu, logvar) for raw vectors; normalization is internal."""
        X = self._check_ready(X)
        return nn.encode(self.architecture_, self.weights_, self.scaler_.transform(X))

    def decode(self, Z) -> np.ndarray:
        """Decode latent codes back to normalized feature space."""
        check_fitted(self, "weights_")
        return nn.decode(self.architecture_, self.weights_, Z)

    def transform(self, X) -> np.ndarray:
        """The compact representation published for stable intervals."""
        mu, _ = self.encode(X)
        return mu

    def score_samples(self, X) -> np.ndarray:
        """Deterministic reconstruction error per sample (higher = drift)."""
        X = self._check_ready(X)
        normalized = self.scaler_.transform(X)
        mu, _ = nn.encode(self.architecture_, self.weights_, normalized)
        recon = nn.decode(self.architecture_, self.weights_, mu)
        return np.atleast_1d(nn.reconstruction_error(normalized, recon))

    def predict(self, X) -> np.ndarray:
        """+1 for intervals within the stable pattern, -1 for drift."""
        errors = self.score_samples(X)
        with np.errstate(invalid="ignore"):
            stable = np.isfinite(errors) & (errors <= self.threshold_)
        return np.where(stable, 1, -1)

    def score_vector(self, vector: ActivityVector) -> LatentRecord:
        """Score one interval, returning its publishable latent record."""
        check_fitted(self, "weights_")
        if vector.schema_version != SCHEMA_VERSION:
            raise SchemaMismatch(
                f"vector schema v{vector.schema_version}, expected v{SCHEMA_VERSION}"
            )
        if vector.features.shape[0] != self.n_features_in_:
            raise SchemaMismatch(
                f"vector has {vector.features.shape[0]} features,"
                f" model expects {self.n_features_in_}"
            )
        normalized = self.scaler_.transform_vector(vector.features)
        mu, logvar = nn.encode(self.architecture_, self.weights_, normalized)
        recon = nn.decode(self.architecture_, self.weights_, mu)
        return LatentRecord(
            key=vector.key,
            mu=mu,
            logvar=logvar,
            recon_error=float(nn.reconstruction_error(normalized, recon)),
        )

    def save(self, path) -> None:
        save_model(self, path)

    @classmethod
    def load(cls, path, expected_dim: int | None = None) -> "VaeStabilityDetector":
        return load_model(path, expected_dim=expected_dim)


# -- persistence ------------------------------------------------------------


def _weights_to_json(params: nn.Params) -> dict:
    return {
        key: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
        for key, arr in params.items()
    }


def _weights_from_json(raw: dict) -> nn.Params:
    params: nn.Params = {}
    for key, entry in raw.items():
        shape = tuple(entry["shape"])
        data = np.array(entry["data"], dtype=np.float64)
        if data.size != int(np.prod(shape)):
            raise CorruptModelFile(f"weight {key}: data does not match shape {shape}")
        params[key] = data.reshape(shape)
    return params


def save_model(detector: VaeStabilityDetector, path) -> None:
    """Write the fitted detector as a self-describing JSON bundle."""
    check_fitted(detector, "weights_")
    policy = detector.threshold_policy_
    threshold_doc = {"kind": "ksigma", "value": policy.threshold}
    if isinstance(policy, KSigmaThreshold):
        threshold_doc.update(
            k=policy.k, error_mean=policy.error_mean, error_sd=policy.error_sd
        )
    else:
        threshold_doc["kind"] = "heuristic"
    bundle = {
        "format": BUNDLE_FORMAT,
        "format_version": BUNDLE_FORMAT_VERSION,
        "schema_version": SCHEMA_VERSION,
        "container_id": detector.container_id,
        "architecture": {
            "input_dim": detector.architecture_.input_dim,
            "hidden_units": list(detector.architecture_.hidden_units),
            "latent_dim": detector.architecture_.latent_dim,
        },
        "train_config": asdict(detector._train_config()),
        "threshold": threshold_doc,
        "scaler": {
            "min": detector.scaler_.data_min_.tolist(),
            "max": detector.scaler_.data_max_.tolist(),
        },
        "curve": asdict(detector.curve_),
        "weights": _weights_to_json(detector.weights_),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(bundle, fh, separators=(",", ":"))
        fh.write("\n")


def load_model(path, expected_dim: int | None = None) -> VaeStabilityDetector:
    """Load a bundle written by save_model; lossless down to the bit."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            bundle = json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModelFile(f"cannot read model bundle {path}: {exc}") from exc

    try:
        if bundle["format"] != BUNDLE_FORMAT:
            raise CorruptModelFile(f"not a model bundle: {bundle['format']!r}")
        if bundle["format_version"] != BUNDLE_FORMAT_VERSION:
            raise CorruptModelFile(
                f"unsupported bundle version {bundle['format_version']}"
            )
        if bundle["schema_version"] != SCHEMA_VERSION:
            raise SchemaMismatch(
                f"bundle carries feature schema v{bundle['schema_version']},"
                f" this build uses v{SCHEMA_VERSION}"
            )
        arch_doc = bundle["architecture"]
        config = TrainConfig(**bundle["train_config"])
        detector = VaeStabilityDetector(
            hidden_units=tuple(arch_doc["hidden_units"]),
            latent_dim=arch_doc["latent_dim"],
            learning_rate=config.learning_rate,
            beta1=config.beta1,
            beta2=config.beta2,
            epsilon=config.epsilon,
            epochs=config.epochs,
            batch_size=config.batch_size,
            kl_weight=config.kl_weight,
            accumulation_target=config.accumulation_target,
            threshold_k=bundle["threshold"].get("k", 3.0),
            seed=config.seed,
        )
        detector.container_id = bundle.get("container_id")
        detector.architecture_ = VaeArchitecture(
            input_dim=arch_doc["input_dim"],
            hidden_units=tuple(arch_doc["hidden_units"]),
            latent_dim=arch_doc["latent_dim"],
        )
        scaler = ActivityScaler()
        scaler.data_min_ = np.array(bundle["scaler"]["min"], dtype=np.float64)
        scaler.data_max_ = np.array(bundle["scaler"]["max"], dtype=np.float64)
        detector.scaler_ = scaler
        detector.curve_ = TrainingCurve(**bundle["curve"])
        detector.weights_ = _weights_from_json(bundle["weights"])
        threshold_doc = bundle["threshold"]
        if threshold_doc["kind"] == "ksigma":
            detector.threshold_policy_ = KSigmaThreshold(
                k=threshold_doc["k"],
                error_mean=threshold_doc["error_mean"],
                error_sd=threshold_doc["error_sd"],
            )
        else:
            detector.threshold_policy_ = HeuristicThreshold(
                threshold=threshold_doc["value"]
            )
    except (SchemaMismatch, CorruptModelFile):
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModelFile(f"model bundle {path} is invalid: {exc}") from exc

    expected_keys = set(
        nn.init_params(detector.architecture_, np.random.default_rng(0))
    )
    if set(detector.weights_) != expected_keys:
        raise CorruptModelFile("model bundle weights do not match architecture")
    if expected_dim is not None and detector.architecture_.input_dim != expected_dim:
        raise SchemaMismatch(
            f"model input dimension {detector.architecture_.input_dim},"
            f" expected {expected_dim}"
        )
    return detector

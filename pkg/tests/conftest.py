from __future__ import annotations

import numpy as np
import pytest

from vaeguard.nn import elbo_terms
from vaeguard.pipeline import summarize_trace
from vaeguard.scenarios import ScenarioConfig, gen_baseline
from vaeguard.summarize import vectors_to_matrix
from vaeguard.vae import VaeStabilityDetector


def finite_difference_gradients(arch, params, x, eps, kl_weight, h=1e-5):
    """Central-difference oracle; independent of the backprop code path."""
    grads = {}
    for key, value in params.items():
        grad = np.zeros_like(value)
        flat = value.ravel()
        grad_flat = grad.ravel()
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            plus, _, _ = elbo_terms(arch, params, x, eps, kl_weight)
            flat[i] = original - h
            minus, _, _ = elbo_terms(arch, params, x, eps, kl_weight)
            flat[i] = original
            grad_flat[i] = (plus - minus) / (2 * h)
        grads[key] = grad
    return grads


def max_relative_error(analytic, numeric):
    worst = 0.0
    for key in analytic:
        a = analytic[key].ravel()
        n = numeric[key].ravel()
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def small_detector(**overrides) -> VaeStabilityDetector:
    """Reduced architecture and schedule for fast unit tests."""
    params = dict(
        hidden_units=(8, 8),
        latent_dim=4,
        epochs=25,
        accumulation_target=32,
        batch_size=8,
        seed=0,
    )
    params.update(overrides)
    return VaeStabilityDetector(**params)


@pytest.fixture(scope="session")
def small_baseline_summaries():
    """32 intervals of baseline traffic (16 simulated minutes)."""
    events = gen_baseline(ScenarioConfig(seed=7, duration_s=960.0))
    return summarize_trace(events, 30.0)["web-0"]


@pytest.fixture(scope="session")
def small_trained_detector(small_baseline_summaries):
    X = vectors_to_matrix([vector for _, _, vector in small_baseline_summaries])
    return small_detector().fit(X)

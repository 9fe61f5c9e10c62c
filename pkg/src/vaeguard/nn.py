"""Fully connected VAE: forward passes, ELBO, analytic gradients, Adam.

Everything here is plain numpy (float64) so that training is exactly
reproducible under a fixed seed and gradients can be audited against
finite differences parameter by parameter.

Parameter layout (row-major weight matrices, shape (fan_in, fan_out)):
    enc{i}_w / enc{i}_b   encoder trunk, tanh after each layer
    mu_w / mu_b           linear head -> latent mean
    lv_w / lv_b           linear head -> latent log-variance
    dec{i}_w / dec{i}_b   decoder trunk, tanh after each layer
    out_w / out_b         linear output head (unbounded; inputs are
                          min-max scaled but anomalies leave [0, 1])

The hidden activation is tanh: smooth with bounded slope, so encoder
outputs stay finite for arbitrarily large anomalous inputs and
finite-difference checks are clean everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from vaeguard.errors import DimensionMismatch, NonFiniteInput

Params = dict[str, np.ndarray]


@dataclass(frozen=True)
class VaeArchitecture:
    input_dim: int
    hidden_units: tuple[int, ...] = (16, 16, 16)
    latent_dim: int = 10

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if not self.hidden_units:
            raise ValueError("hidden_units must be non-empty")
        object.__setattr__(self, "hidden_units", tuple(int(u) for u in self.hidden_units))


def init_params(arch: VaeArchitecture, rng: np.random.Generator) -> Params:
    """Seeded uniform init scaled by 1/sqrt(fan_in); biases start at zero."""

    def layer(fan_in: int, fan_out: int, name: str, params: Params) -> None:
        bound = 1.0 / np.sqrt(fan_in)
        params[f"{name}_w"] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        params[f"{name}_b"] = np.zeros(fan_out, dtype=np.float64)

    params: Params = {}
    widths = (arch.input_dim, *arch.hidden_units)
    for i in range(len(arch.hidden_units)):
        layer(widths[i], widths[i + 1], f"enc{i}", params)
    trunk_out = arch.hidden_units[-1]
    layer(trunk_out, arch.latent_dim, "mu", params)
    layer(trunk_out, arch.latent_dim, "lv", params)
    dec_widths = (arch.latent_dim, *arch.hidden_units)
    for i in range(len(arch.hidden_units)):
        layer(dec_widths[i], dec_widths[i + 1], f"dec{i}", params)
    layer(trunk_out, arch.input_dim, "out", params)
    return params


def zero_params(arch: VaeArchitecture) -> Params:
    """All-zero parameter set (useful as a degenerate fixture)."""
    rng = np.random.default_rng(0)
    return {k: np.zeros_like(v) for k, v in init_params(arch, rng).items()}


def _as_batch(x: np.ndarray, dim: int, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatch(
            f"{name} must have {dim} features, got shape {np.asarray(x).shape}"
        )
    return arr, single


def encode(
    arch: VaeArchitecture, params: Mapping[str, np.ndarray], x: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic forward pass to the posterior (mu, logvar)."""
    batch, single = _as_batch(x, arch.input_dim, "x")
    if not np.all(np.isfinite(batch)):
        raise NonFiniteInput("encoder input contains NaN or infinity")
    h = batch
    for i in range(len(arch.hidden_units)):
        h = np.tanh(h @ params[f"enc{i}_w"] + params[f"enc{i}_b"])
    mu = h @ params["mu_w"] + params["mu_b"]
    logvar = h @ params["lv_w"] + params["lv_b"]
    if single:
        return mu[0], logvar[0]
    return mu, logvar


def decode(
    arch: VaeArchitecture, params: Mapping[str, np.ndarray], z: np.ndarray
) -> np.ndarray:
    """Deterministic decoder pass; output head is linear."""
    batch, single = _as_batch(z, arch.latent_dim, "z")
    g = batch
    for i in range(len(arch.hidden_units)):
        g = np.tanh(g @ params[f"dec{i}_w"] + params[f"dec{i}_b"])
    recon = g @ params["out_w"] + params["out_b"]
    return recon[0] if single else recon


def sample_latent(
    mu: np.ndarray, logvar: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Reparameterized draw z = mu + exp(logvar/2) * eps, eps ~ N(0, I)."""
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    if mu.shape != logvar.shape:
        raise DimensionMismatch(
            f"mu shape {mu.shape} != logvar shape {logvar.shape}"
        )
    eps = rng.standard_normal(mu.shape)
    return mu + np.exp(0.5 * logvar) * eps


def kl_divergence(mu: np.ndarray, logvar: np.ndarray):
    """KL(N(mu, diag exp(logvar)) || N(0, I)), closed form.

    Returns a scalar for 1-D inputs, a per-row array for 2-D.
    """
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    if mu.shape != logvar.shape:
        raise DimensionMismatch(
            f"mu shape {mu.shape} != logvar shape {logvar.shape}"
        )
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(logvar))):
        raise NonFiniteInput("kl_divergence requires finite inputs")
    terms = 1.0 + logvar - np.square(mu) - np.exp(logvar)
    kl = -0.5 * np.sum(terms, axis=-1)
    return float(kl) if kl.ndim == 0 else kl


def reconstruction_error(x: np.ndarray, recon: np.ndarray):
    """Mean squared error across features; per-row for 2-D inputs."""
    x = np.asarray(x, dtype=np.float64)
    recon = np.asarray(recon, dtype=np.float64)
    if x.shape != recon.shape:
        raise DimensionMismatch(f"shape {x.shape} != {recon.shape}")
    err = np.mean(np.square(x - recon), axis=-1)
    return float(err) if err.ndim == 0 else err


@dataclass
class _ForwardCache:
    x: np.ndarray
    enc_h: list[np.ndarray]
    mu: np.ndarray
    logvar: np.ndarray
    sigma: np.ndarray
    eps: np.ndarray
    z: np.ndarray
    dec_g: list[np.ndarray]
    recon: np.ndarray


def _forward(
    arch: VaeArchitecture, params: Mapping[str, np.ndarray], x: np.ndarray, eps: np.ndarray
) -> _ForwardCache:
    enc_h: list[np.ndarray] = []
    h = x
    for i in range(len(arch.hidden_units)):
        h = np.tanh(h @ params[f"enc{i}_w"] + params[f"enc{i}_b"])
        enc_h.append(h)
    mu = h @ params["mu_w"] + params["mu_b"]
    logvar = h @ params["lv_w"] + params["lv_b"]
    sigma = np.exp(0.5 * logvar)
    z = mu + sigma * eps
    dec_g: list[np.ndarray] = []
    g = z
    for i in range(len(arch.hidden_units)):
        g = np.tanh(g @ params[f"dec{i}_w"] + params[f"dec{i}_b"])
        dec_g.append(g)
    recon = g @ params["out_w"] + params["out_b"]
    return _ForwardCache(x, enc_h, mu, logvar, sigma, eps, z, dec_g, recon)


def elbo_terms(
    arch: VaeArchitecture,
    params: Mapping[str, np.ndarray],
    x: np.ndarray,
    eps: np.ndarray,
    kl_weight: float = 1.0,
) -> tuple[float, float, float]:
    """Loss terms for a fixed noise draw: (loss, recon_term, kl_term).

    loss = recon + kl_weight * kl, averaged over the batch. Minimizing it
    maximizes the evidence lower bound with MSE standing in for the
    negative reconstruction log-likelihood.
    """
    batch, _ = _as_batch(x, arch.input_dim, "x")
    noise, _ = _as_batch(eps, arch.latent_dim, "eps")
    cache = _forward(arch, params, batch, noise)
    recon_term = float(np.mean(reconstruction_error(batch, cache.recon)))
    kl_term = float(np.mean(kl_divergence(cache.mu, cache.logvar)))
    return recon_term + kl_weight * kl_term, recon_term, kl_term


def elbo_loss(
    arch: VaeArchitecture,
    params: Mapping[str, np.ndarray],
    x: np.ndarray,
    rng: np.random.Generator,
    kl_weight: float = 1.0,
) -> tuple[float, float, float]:
    """elbo_terms with a fresh reparameterization draw from rng."""
    batch, _ = _as_batch(x, arch.input_dim, "x")
    eps = rng.standard_normal((batch.shape[0], arch.latent_dim))
    return elbo_terms(arch, params, batch, eps, kl_weight)


def sampled_reconstruction_errors(
    arch: VaeArchitecture,
    params: Mapping[str, np.ndarray],
    x: np.ndarray,
    eps: np.ndarray,
) -> np.ndarray:
    """Per-sample reconstruction errors of the stochastic training pass."""
    batch, _ = _as_batch(x, arch.input_dim, "x")
    noise, _ = _as_batch(eps, arch.latent_dim, "eps")
    cache = _forward(arch, params, batch, noise)
    return np.atleast_1d(reconstruction_error(batch, cache.recon))


def elbo_gradients(
    arch: VaeArchitecture,
    params: Mapping[str, np.ndarray],
    x: np.ndarray,
    eps: np.ndarray,
    kl_weight: float = 1.0,
) -> tuple[Params, tuple[float, float, float]]:
    """Analytic gradients of the ELBO loss for every weight and bias.

    The noise draw is supplied by the caller so the loss is a
    deterministic function of the parameters; gradients flow through the
    reparameterized sampling step.
    """
    batch, _ = _as_batch(x, arch.input_dim, "x")
    noise, _ = _as_batch(eps, arch.latent_dim, "eps")
    n, input_dim = batch.shape
    cache = _forward(arch, params, batch, noise)
    grads: Params = {}
    n_hidden = len(arch.hidden_units)

    # reconstruction path: d(mean-over-batch mean-over-features sq err)
    d_recon = (2.0 / (n * input_dim)) * (cache.recon - batch)
    grads["out_w"] = cache.dec_g[-1].T @ d_recon
    grads["out_b"] = d_recon.sum(axis=0)
    d_layer = d_recon @ params["out_w"].T
    for i in range(n_hidden - 1, -1, -1):
        d_pre = d_layer * (1.0 - np.square(cache.dec_g[i]))
        prev = cache.z if i == 0 else cache.dec_g[i - 1]
        grads[f"dec{i}_w"] = prev.T @ d_pre
        grads[f"dec{i}_b"] = d_pre.sum(axis=0)
        d_layer = d_pre @ params[f"dec{i}_w"].T
    d_z = d_layer

    # KL path joins at the posterior heads
    d_mu = d_z + (kl_weight / n) * cache.mu
    d_logvar = d_z * cache.eps * 0.5 * cache.sigma + (kl_weight / n) * 0.5 * (
        np.exp(cache.logvar) - 1.0
    )

    trunk = cache.enc_h[-1]
    grads["mu_w"] = trunk.T @ d_mu
    grads["mu_b"] = d_mu.sum(axis=0)
    grads["lv_w"] = trunk.T @ d_logvar
    grads["lv_b"] = d_logvar.sum(axis=0)
    d_layer = d_mu @ params["mu_w"].T + d_logvar @ params["lv_w"].T
    for i in range(n_hidden - 1, -1, -1):
        d_pre = d_layer * (1.0 - np.square(cache.enc_h[i]))
        prev = batch if i == 0 else cache.enc_h[i - 1]
        grads[f"enc{i}_w"] = prev.T @ d_pre
        grads[f"enc{i}_b"] = d_pre.sum(axis=0)
        d_layer = d_pre @ params[f"enc{i}_w"].T

    recon_term = float(np.mean(reconstruction_error(batch, cache.recon)))
    kl_term = float(np.mean(kl_divergence(cache.mu, cache.logvar)))
    loss = recon_term + kl_weight * kl_term
    return grads, (loss, recon_term, kl_term)


# -- Adam -------------------------------------------------------------------


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        for name in ("learning_rate", "beta1", "beta2", "epsilon"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class AdamState:
    m: Params
    v: Params


def adam_init(params: Mapping[str, np.ndarray]) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
    )


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    config: AdamConfig,
    t: int,
) -> tuple[Params, AdamState]:
    """One bias-corrected Adam update; t counts from 1."""
    if t < 1:
        raise ValueError("step index t must be >= 1")
    new_params: Params = {}
    new_m: Params = {}
    new_v: Params = {}
    for key, p in params.items():
        g = grads[key]
        m = config.beta1 * state.m[key] + (1.0 - config.beta1) * g
        v = config.beta2 * state.v[key] + (1.0 - config.beta2) * np.square(g)
        m_hat = m / (1.0 - config.beta1**t)
        v_hat = v / (1.0 - config.beta2**t)
        new_params[key] = p - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
        new_m[key] = m
        new_v[key] = v
    return new_params, AdamState(m=new_m, v=new_v)

"""Binary-binary restricted Boltzmann machine.

Weights are stored hidden-major: ``W`` has shape ``(n_h, n_v)`` so that the
hidden pre-activation of a row of visibles ``v`` is ``v @ W.T + b_h``.
Every function that returns a gradient returns the *ascent* direction of
the log-likelihood, and updates add it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, ShapeError
from .numerics import (
    as_matrix,
    bernoulli_sample,
    binary_configs,
    check_shape,
    clip_gradient,
    sigmoid,
)


@dataclass(frozen=True)
class RbmParams:
    W: np.ndarray
    b_v: np.ndarray
    b_h: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
            raise ShapeError(f"W must be a non-empty matrix, got shape {W.shape}")
        n_h, n_v = W.shape
        object.__setattr__(self, "W", check_shape("W", W, (n_h, n_v)))
        object.__setattr__(self, "b_v", check_shape("b_v", self.b_v, (n_v,)))
        object.__setattr__(self, "b_h", check_shape("b_h", self.b_h, (n_h,)))

    @property
    def n_v(self):
        return self.W.shape[1]

    @property
    def n_h(self):
        return self.W.shape[0]


@dataclass(frozen=True)
class RbmGrad:
    dW: np.ndarray
    db_v: np.ndarray
    db_h: np.ndarray


def init_rbm(n_v, n_h, rng, std=0.01):
    """Small Gaussian weights, zero biases."""
    return RbmParams(rng.normal(0.0, std, size=(n_h, n_v)), np.zeros(n_v), np.zeros(n_h))


def energy(p, v, h):
    v = check_shape("v", v, (p.n_v,))
    h = check_shape("h", h, (p.n_h,))
    return float(-(p.b_v @ v) - (p.b_h @ h) - h @ (p.W @ v))


def free_energy(p, v):
    """F(v) = -b_v.v - sum_i log(1 + exp(b_h,i + W_i.v)); accepts rows."""
    single = np.ndim(v) == 1
    V = as_matrix(v, p.n_v, "v")
    F = -(V @ p.b_v) - np.logaddexp(0.0, V @ p.W.T + p.b_h).sum(axis=1)
    return float(F[0]) if single else F


def prob_h_given_v(p, v):
    single = np.ndim(v) == 1
    out = sigmoid(as_matrix(v, p.n_v, "v") @ p.W.T + p.b_h)
    return out[0] if single else out


def prob_v_given_h(p, h):
    single = np.ndim(h) == 1
    out = sigmoid(as_matrix(h, p.n_h, "h") @ p.W + p.b_v)
    return out[0] if single else out


def _gibbs(W, b_v, b_h, V, rng):
    # b_v / b_h may be per-row (2-D) for time-dependent biases.
    H = bernoulli_sample(sigmoid(V @ W.T + b_h), rng)
    V_next = bernoulli_sample(sigmoid(H @ W + b_v), rng)
    return V_next, H


def gibbs_step(p, v, rng):
    """One block Gibbs step: sample h given v, then v given that h."""
    single = np.ndim(v) == 1
    v_next, h = _gibbs(p.W, p.b_v, p.b_h, as_matrix(v, p.n_v, "v"), rng)
    if single:
        return v_next[0], h[0]
    return v_next, h


def cd_statistics(W, b_v, b_h, V, k, rng):
    """Per-row CD-k statistics for rows ``V`` of (possibly real-valued) data.

    Returns ``(dW, dB_v, dB_h, V_k)`` where ``dW`` is *summed* over rows and
    the bias terms are kept per row, so callers with per-row biases can route
    each row's bias gradient separately. Negative hidden statistics use
    mean-field probabilities at the last chain state.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ph0 = sigmoid(V @ W.T + b_h)
    Vk = V
    for _ in range(k):
        Vk, _ = _gibbs(W, b_v, b_h, Vk, rng)
    phk = sigmoid(Vk @ W.T + b_h)
    dW = ph0.T @ V - phk.T @ Vk
    return dW, V - Vk, ph0 - phk, Vk


def _cd_k(p, batch, k, rng):
    V = as_matrix(batch, p.n_v, "batch")
    if V.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    n = V.shape[0]
    dW, dBv, dBh, Vk = cd_statistics(p.W, p.b_v, p.b_h, V, k, rng)
    grad = RbmGrad(dW / n, dBv.sum(axis=0) / n, dBh.sum(axis=0) / n)
    return grad, reconstruction_error(V, Vk)


def cd_k_gradient(p, batch, k, rng):
    """Batch-averaged CD-k estimate of the log-likelihood ascent direction."""
    return _cd_k(p, batch, k, rng)[0]


def reconstruction_error(V, Vk):
    """Mean over rows of the squared distance between data and chain state."""
    return float(((V - Vk) ** 2).sum(axis=1).mean())


def apply_update(p, g, learning_rate):
    if g.dW.shape != p.W.shape or g.db_v.shape != p.b_v.shape or g.db_h.shape != p.b_h.shape:
        raise ShapeError("gradient shapes do not match parameters")
    return RbmParams(
        p.W + learning_rate * g.dW,
        p.b_v + learning_rate * g.db_v,
        p.b_h + learning_rate * g.db_h,
    )


def minibatches(n, batch_size, rng):
    """Shuffle ``range(n)`` once and cut it into consecutive minibatches."""
    order = rng.permutation(n)
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]


def train_rbm(p, data, cfg, rng, log=None):
    """Plain CD-k SGD for ``cfg.epochs`` passes over ``data``.

    Returns the trained parameters and the per-epoch mean reconstruction
    error. ``log(epoch, value)`` is called after each epoch when given.
    """
    V = as_matrix(data, p.n_v, "data")
    if V.shape[0] == 0:
        raise ValueError("data must be non-empty")
    history = []
    for epoch in range(cfg.epochs):
        errs = []
        for idx in minibatches(V.shape[0], cfg.batch_size, rng):
            g, err = _cd_k(p, V[idx], cfg.cd_k, rng)
            p = apply_update(p, clip_gradient(g, cfg.clip_threshold), cfg.learning_rate)
            errs.append(err * len(idx))
        history.append(sum(errs) / V.shape[0])
        if log is not None:
            log(epoch + 1, history[-1])
    return p, history


def rbm_sample(p, gibbs_steps, rng, n_samples=None):
    """Run block Gibbs from a uniform random visible state; return visibles."""
    if gibbs_steps < 1:
        raise ValueError("gibbs_steps must be >= 1")
    rows = 1 if n_samples is None else n_samples
    V = bernoulli_sample(np.full((rows, p.n_v), 0.5), rng)
    for _ in range(gibbs_steps):
        V, _ = _gibbs(p.W, p.b_v, p.b_h, V, rng)
    return V[0] if n_samples is None else V


def log_partition(p, max_enum_bits=20):
    """log Z, enumerating the smaller layer and marginalising the other in closed form."""
    if min(p.n_v, p.n_h) > max_enum_bits:
        raise BudgetError(
            f"log Z needs 2**{min(p.n_v, p.n_h)} terms; limit is 2**{max_enum_bits}"
        )
    if p.n_v <= p.n_h:
        V = binary_configs(p.n_v)
        terms = V @ p.b_v + np.logaddexp(0.0, V @ p.W.T + p.b_h).sum(axis=1)
    else:
        H = binary_configs(p.n_h)
        terms = H @ p.b_h + np.logaddexp(0.0, H @ p.W + p.b_v).sum(axis=1)
    m = terms.max()
    return float(m + np.log(np.exp(terms - m).sum()))


def log_likelihood(p, data, max_enum_bits=20):
    """Exact log p(v) for each row of ``data``."""
    return -free_energy(p, as_matrix(data, p.n_v, "data")) - log_partition(p, max_enum_bits)

"""Brute-force ground truth for small models.

Everything here sums over every binary configuration directly from the
energy or the layer conditionals. None of it calls into the model modules
(``rbm``, ``dbn``, ``rtrbm``, ``rnn_dbn``), so it can serve as an
independent check on them. Only parameter containers are shared.

Configurations are indexed by ``code(x) = sum_j x_j * 2**j``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .errors import BudgetError

# Rows of (visible chunk) x (all hidden configs) materialised at once.
_CHUNK_CELLS = 1 << 21


@dataclass(frozen=True)
class EnumBudget:
    max_total_units: int = 24

    def check(self, total, what="model"):
        if total > self.max_total_units:
            raise BudgetError(
                f"{what} has {total} binary units; exact enumeration is capped at "
                f"{self.max_total_units}"
            )


DEFAULT_BUDGET = EnumBudget()


class ModelStats(NamedTuple):
    """Exact model expectations; ``hv[i, j] = E[h_i v_j]`` (hidden-major)."""

    hv: np.ndarray
    v: np.ndarray
    h: np.ndarray


def all_configs(n):
    """All 2**n binary vectors as rows, row ``i`` having code ``i``."""
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(float)


def encode(X):
    X = np.atleast_2d(np.asarray(X))
    return (X.astype(np.int64) << np.arange(X.shape[1])[None, :]).sum(axis=1)


def log_partition_from_energies(E):
    """log sum exp(-E), shift-stabilised."""
    return float(logsumexp(-np.asarray(E, dtype=float)))


def _neg_energy_block(W, b_v, b_h, V, H):
    # -E(v, h) = b_v.v + b_h.h + h'Wv for every (row of V) x (row of H)
    return (V @ b_v)[:, None] + (H @ b_h)[None, :] + V @ (H @ W).T


def _v_chunks(n_v, n_h):
    rows = max(1, _CHUNK_CELLS >> n_h)
    total = 1 << n_v
    for start in range(0, total, rows):
        idx = np.arange(start, min(total, start + rows))
        yield ((idx[:, None] >> np.arange(n_v)[None, :]) & 1).astype(float)


def _log_unnormalised_pv(p, budget):
    """log sum_h exp(-E(v, h)) for every v, by summing over h explicitly."""
    n_h, n_v = p.W.shape
    budget.check(n_v + n_h, "RBM")
    H = all_configs(n_h)
    out = [logsumexp(_neg_energy_block(p.W, p.b_v, p.b_h, V, H), axis=1)
           for V in _v_chunks(n_v, n_h)]
    return np.concatenate(out)


def exact_partition_rbm(p, budget=DEFAULT_BUDGET):
    """log Z by summing exp(-E(v, h)) over every joint configuration."""
    n_h, n_v = p.W.shape
    budget.check(n_v + n_h, "RBM")
    H = all_configs(n_h)
    parts = [logsumexp(_neg_energy_block(p.W, p.b_v, p.b_h, V, H))
             for V in _v_chunks(n_v, n_h)]
    return float(logsumexp(parts))


def exact_log_pv(p, budget=DEFAULT_BUDGET):
    """log p(v) for every visible configuration (indexed by code)."""
    log_u = _log_unnormalised_pv(p, budget)
    return log_u - exact_partition_rbm(p, budget)


def exact_ll_rbm(p, data, budget=DEFAULT_BUDGET):
    """Mean log p(v) over the rows of ``data``."""
    return float(np.mean(exact_log_pv(p, budget)[encode(data)]))


def exact_joint(p, budget=DEFAULT_BUDGET):
    """p(v, h) as a (2**n_v, 2**n_h) table. Small models only."""
    n_h, n_v = p.W.shape
    budget.check(n_v + n_h, "RBM")
    neg_e = _neg_energy_block(p.W, p.b_v, p.b_h, all_configs(n_v), all_configs(n_h))
    return np.exp(neg_e - logsumexp(neg_e))


def exact_h_posterior(p, v):
    """p(h | v) over every hidden configuration, from the joint energy."""
    n_h = p.W.shape[0]
    neg_e = _neg_energy_block(p.W, p.b_v, p.b_h, np.atleast_2d(np.asarray(v, float)),
                              all_configs(n_h))[0]
    return np.exp(neg_e - logsumexp(neg_e))


def exact_v_posterior(p, h):
    """p(v | h) over every visible configuration, from the joint energy."""
    n_v = p.W.shape[1]
    neg_e = _neg_energy_block(p.W, p.b_v, p.b_h, all_configs(n_v),
                              np.atleast_2d(np.asarray(h, float)))[:, 0]
    return np.exp(neg_e - logsumexp(neg_e))


def exact_model_expectations(p, budget=DEFAULT_BUDGET):
    """E[h v'], E[v], E[h] under the model's joint distribution."""
    n_h, n_v = p.W.shape
    budget.check(n_v + n_h, "RBM")
    log_z = exact_partition_rbm(p, budget)
    H = all_configs(n_h)
    hv = np.zeros((n_h, n_v))
    ev = np.zeros(n_v)
    eh = np.zeros(n_h)
    for V in _v_chunks(n_v, n_h):
        P = np.exp(_neg_energy_block(p.W, p.b_v, p.b_h, V, H) - log_z)
        hv += H.T @ P.T @ V
        ev += P.sum(axis=1) @ V
        eh += P.sum(axis=0) @ H
    return ModelStats(hv, ev, eh)


def _log_cond_table(W, b_vis, X, Y):
    """log P(x | y) for a sigmoid belief layer, every x (rows) by every y (cols).

    ``W`` is hidden-major (n_y, n_x): the mean of x given y is sigmoid(W'y + b).
    """
    A = Y @ W + b_vis  # (n_Y, n_x) activations
    return X @ A.T - np.logaddexp(0.0, A).sum(axis=1)[None, :]


def exact_dbn_log_pv(d, budget=DEFAULT_BUDGET):
    """log p(v) for every v under the DBN's directed-plus-top-RBM joint.

    p(h^{l-1}, h^l) is the top RBM; each lower level is generated by the
    sigmoid conditional P(h^{k-1} | h^k) of its RBM. Hidden biases of the
    lower RBMs play no part in this distribution.
    """
    budget.check(sum(d.widths), "DBN")
    top = d.layers[-1]
    log_p = _log_unnormalised_pv(top, budget)
    log_p = log_p - logsumexp(log_p)
    for layer in reversed(d.layers[:-1]):
        n_h, n_v = layer.W.shape
        table = _log_cond_table(layer.W, layer.b_v, all_configs(n_v), all_configs(n_h))
        log_p = logsumexp(table + log_p[None, :], axis=1)
    return log_p


def exact_ll_dbn(d, data, budget=DEFAULT_BUDGET):
    """Mean exact log p(v) of ``data`` under a DBN."""
    return float(np.mean(exact_dbn_log_pv(d, budget)[encode(data)]))


def numerical_gradient(objective, x0, epsilon=1e-5):
    """Central differences of a scalar ``objective`` at the flat vector ``x0``."""
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError(f"epsilon must lie in [1e-7, 1e-3], got {epsilon}")
    x = np.array(x0, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        orig = x[i]
        x[i] = orig + epsilon
        f_plus = objective(x)
        x[i] = orig - epsilon
        f_minus = objective(x)
        x[i] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise FloatingPointError(f"objective is not finite around coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * epsilon)
    return grad


def relative_error(analytic, numeric):
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)


def finite_difference_gradcheck(objective, x0, analytic, epsilon=1e-5):
    """Max relative error between ``analytic`` and central differences."""
    numeric = numerical_gradient(objective, x0, epsilon)
    return float(np.max(relative_error(analytic, numeric)))


def tv_from_samples(samples, exact):
    """Total variation between the empirical law of ``samples`` and ``exact``."""
    exact = np.asarray(exact, dtype=float)
    counts = np.bincount(encode(samples), minlength=exact.size).astype(float)
    return 0.5 * float(np.abs(counts / counts.sum() - exact).sum())


def empirical_tv_distance(sampler, exact, n_samples):
    """TV distance for ``sampler(n) -> (n, n_v)`` array against a table."""
    exact = np.asarray(exact, dtype=float)
    n_v = int(np.log2(exact.size))
    if (1 << n_v) != exact.size:
        raise ValueError("exact table length must be a power of two")
    if n_v > 12:
        raise BudgetError(f"visible width {n_v} too large for an empirical TV check")
    samples = np.asarray(sampler(n_samples))
    return tv_from_samples(samples.reshape(-1, n_v), exact)

"""Recurrent temporal RBM.

A chain of conditional RBMs that share ``W`` but whose biases at step t are
shifted by the previous mean-field state:

    b_v(t) = b_v + W_uv u(t-1),   b_h(t) = b_h + W_uh u(t-1)
    u(t)   = sigmoid(W v(t) + W_uh u(t-1) + b_h)

The state recurrence is an RNN with (W_vu, W_uu, b_u) = (W, W_uh, b_h), so
gradients reaching the states are pushed back with :func:`rnn.bptt_gradients`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .numerics import as_matrix, check_shape, clip_gradient, map_arrays, sigmoid
from .rbm import RbmParams, _gibbs, cd_statistics, free_energy, log_partition, reconstruction_error
from .rnn import RnnParams, bptt_gradients, rnn_forward


@dataclass(frozen=True)
class RtrbmParams:
    W: np.ndarray
    b_v: np.ndarray
    b_h: np.ndarray
    W_uv: np.ndarray
    W_uh: np.ndarray
    u0: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.ndim != 2 or min(W.shape) < 1:
            raise ShapeError(f"W must be a non-empty matrix, got shape {W.shape}")
        n_h, n_v = W.shape
        object.__setattr__(self, "W", check_shape("W", W, (n_h, n_v)))
        object.__setattr__(self, "b_v", check_shape("b_v", self.b_v, (n_v,)))
        object.__setattr__(self, "b_h", check_shape("b_h", self.b_h, (n_h,)))
        object.__setattr__(self, "W_uv", check_shape("W_uv", self.W_uv, (n_v, n_h)))
        object.__setattr__(self, "W_uh", check_shape("W_uh", self.W_uh, (n_h, n_h)))
        object.__setattr__(self, "u0", check_shape("u0", self.u0, (n_h,)))

    @property
    def n_v(self):
        return self.W.shape[1]

    @property
    def n_h(self):
        return self.W.shape[0]

    def rnn(self):
        return RnnParams(self.W, self.W_uh, self.b_h, self.u0)


def init_rtrbm(n_v, n_h, rng, std=0.01):
    return RtrbmParams(
        rng.normal(0.0, std, size=(n_h, n_v)),
        np.zeros(n_v),
        np.zeros(n_h),
        rng.normal(0.0, std, size=(n_v, n_h)),
        rng.normal(0.0, std, size=(n_h, n_h)),
        np.zeros(n_h),
    )


def rtrbm_biases(p, u_prev):
    """Time-dependent (b_v, b_h) given the previous state(s) ``u_prev``.

    ``u_prev`` may be one state or a stack of states as rows.
    """
    u_prev = np.asarray(u_prev, dtype=float)
    if u_prev.shape[-1] != p.n_h or u_prev.ndim > 2:
        raise ShapeError(f"u_prev must have width {p.n_h}, got shape {u_prev.shape}")
    if u_prev.ndim == 1:
        return p.b_v + p.W_uv @ u_prev, p.b_h + p.W_uh @ u_prev
    return p.b_v + u_prev @ p.W_uv.T, p.b_h + u_prev @ p.W_uh.T


def rtrbm_forward(p, vseq):
    """Mean-field states u(1..T) as a ``(T, n_h)`` array."""
    return rnn_forward(p.rnn(), vseq)


def _previous_states(p, V):
    U = rtrbm_forward(p, V)
    return U, np.vstack([p.u0[None, :], U[:-1]])


def _sequence_gradient(p, V, frame_stats):
    """Chain-rule the per-frame RBM statistics into every RTRBM parameter.

    ``frame_stats(W, B_v, B_h, V)`` returns ``(dW, dB_v, dB_h)`` with ``dW``
    summed over frames and bias terms per frame.
    """
    U, U_prev = _previous_states(p, V)
    B_v, B_h = rtrbm_biases(p, U_prev)
    dW, dB_v, dB_h = frame_stats(p.W, B_v, B_h, V)

    # d/du(t-1) of frame t's term, through the two bias shifts
    g_prev = dB_v @ p.W_uv + dB_h @ p.W_uh
    dL_du = np.vstack([g_prev[1:], np.zeros((1, p.n_h))])
    r = bptt_gradients(p.rnn(), V, dL_du, states=U)
    return RtrbmParams(
        W=dW + r.W_vu,
        b_v=dB_v.sum(axis=0),
        b_h=dB_h.sum(axis=0) + r.b_u,
        W_uv=dB_v.T @ U_prev,
        W_uh=dB_h.T @ U_prev + r.W_uu,
        u0=g_prev[0] + r.u0,
    )


def rtrbm_cd_gradient(p, vseq, k, rng):
    """CD-k estimate of the ascent direction of sum_t log p(v(t) | history).

    Returns the gradient (as RtrbmParams) and the mean per-frame
    reconstruction error of the chains.
    """
    V = as_matrix(vseq, p.n_v, "sequence")
    if V.shape[0] == 0:
        raise ShapeError("sequence must be non-empty")
    recon = []

    def stats(W, B_v, B_h, V):
        dW, dB_v, dB_h, Vk = cd_statistics(W, B_v, B_h, V, k, rng)
        recon.append(reconstruction_error(V, Vk))
        return dW, dB_v, dB_h

    g = _sequence_gradient(p, V, stats)
    return g, recon[0]


def rtrbm_exact_gradient(p, vseq, expectations):
    """Exact gradient of sum_t log p(v(t) | history).

    ``expectations(RbmParams) -> (E[h v'], E[v], E[h])`` supplies the model
    statistics of each frame's conditional RBM, e.g.
    :func:`oracles.exact_model_expectations`.
    """
    V = as_matrix(vseq, p.n_v, "sequence")

    def stats(W, B_v, B_h, V):
        dW = np.zeros_like(W)
        dB_v = np.empty_like(B_v)
        dB_h = np.empty_like(B_h)
        for t in range(V.shape[0]):
            m_hv, m_v, m_h = expectations(RbmParams(W, B_v[t], B_h[t]))
            ph = sigmoid(W @ V[t] + B_h[t])
            dW += np.outer(ph, V[t]) - m_hv
            dB_v[t] = V[t] - m_v
            dB_h[t] = ph - m_h
        return dW, dB_v, dB_h

    return _sequence_gradient(p, V, stats)


def _update(p, g, cfg):
    g = clip_gradient(g, cfg.clip_threshold)
    return map_arrays(lambda a, b: a + cfg.learning_rate * b, p, g)


def rtrbm_train_step(p, vseq, cfg, rng):
    """One CD-k gradient-ascent step on a single sequence."""
    g, _ = rtrbm_cd_gradient(p, vseq, cfg.cd_k, rng)
    return _update(p, g, cfg)


def rtrbm_train(p, sequences, cfg, rng, log=None):
    """``cfg.epochs`` passes of per-sequence updates in shuffled order."""
    if len(sequences) == 0:
        raise ValueError("need at least one sequence")
    history = []
    for epoch in range(cfg.epochs):
        errs, frames = 0.0, 0
        for i in rng.permutation(len(sequences)):
            g, err = rtrbm_cd_gradient(p, sequences[i], cfg.cd_k, rng)
            p = _update(p, g, cfg)
            errs += err * len(sequences[i])
            frames += len(sequences[i])
        history.append(errs / frames)
        if log is not None:
            log(epoch + 1, history[-1])
    return p, history


def rtrbm_frame_ll(p, vseq, max_enum_bits=20):
    """Exact log p(v(t) | history) for every frame of ``vseq``."""
    V = as_matrix(vseq, p.n_v, "sequence")
    _, U_prev = _previous_states(p, V)
    B_v, B_h = rtrbm_biases(p, U_prev)
    out = np.empty(V.shape[0])
    for t in range(V.shape[0]):
        frame = RbmParams(p.W, B_v[t], B_h[t])
        out[t] = -free_energy(frame, V[t]) - log_partition(frame, max_enum_bits)
    return out


def rtrbm_generate(p, length, gibbs_steps, rng, n_chains=None, primer=None):
    """Sample ``length`` frames; each frame's chain starts at the previous frame.

    The first chain starts from all-zeros, or from the last primer frame
    with the state advanced over the primer. Returns a ``(length, n_v)``
    array, or ``(n_chains, length, n_v)`` when ``n_chains`` is given.
    """
    if length < 1 or gibbs_steps < 1:
        raise ValueError("length and gibbs_steps must be >= 1")
    rows = 1 if n_chains is None else n_chains
    U = np.tile(p.u0, (rows, 1))
    V = np.zeros((rows, p.n_v))
    if primer is not None:
        P = as_matrix(primer, p.n_v, "primer")
        if len(P):
            U = np.tile(rtrbm_forward(p, P)[-1], (rows, 1))
            V = np.tile(P[-1], (rows, 1))
    out = np.empty((rows, length, p.n_v))
    for t in range(length):
        B_v, B_h = rtrbm_biases(p, U)
        for _ in range(gibbs_steps):
            V, _ = _gibbs(p.W, B_v, B_h, V, rng)
        out[:, t] = V
        U = sigmoid(V @ p.W.T + U @ p.W_uh.T + p.b_h)
    return out[0] if n_chains is None else out

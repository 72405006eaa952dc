"""RNN-DBN: a two-hidden-layer DBN whose biases are driven by a separate RNN.

At step t the RNN state u(t-1) shifts the three bias vectors

    b_v(t)  = b_v  + W_uv  u(t-1)
    b_h1(t) = b_h1 + W_uh1 u(t-1)
    b_h2(t) = b_h2 + W_uh2 u(t-1)

of a DBN whose weights (W_vh1, W_h1h2) are shared across time, and the RNN
advances on the observed frame: u(t) = sigmoid(W_vu v(t) + W_uu u(t-1) + b_u).

Training runs CD-k on each DBN layer in turn (layer 1 on frames, layer 2
on layer-1 mean activations, both with the per-frame biases), then pushes
the per-frame bias gradients back through the RNN with BPTT.
"""

from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from .dbn import DbnParams
from .errors import BudgetError, ShapeError
from .numerics import (
    as_matrix,
    bernoulli_sample,
    binary_configs,
    check_shape,
    clip_gradient,
    map_arrays,
    sigmoid,
)
from .rbm import RbmParams, cd_statistics, log_partition, minibatches, reconstruction_error
from .rnn import RnnParams, bptt_gradients, rnn_forward

EXACT_BUDGET = 24


@dataclass(frozen=True)
class RnnDbnParams:
    W_vh1: np.ndarray
    W_h1h2: np.ndarray
    b_v: np.ndarray
    b_h1: np.ndarray
    b_h2: np.ndarray
    W_uv: np.ndarray
    W_uh1: np.ndarray
    W_uh2: np.ndarray
    u0: np.ndarray
    W_vu: np.ndarray
    W_uu: np.ndarray
    b_u: np.ndarray

    def __post_init__(self):
        W1 = np.asarray(self.W_vh1, dtype=float)
        W2 = np.asarray(self.W_h1h2, dtype=float)
        Wvu = np.asarray(self.W_vu, dtype=float)
        if W1.ndim != 2 or W2.ndim != 2 or Wvu.ndim != 2:
            raise ShapeError("W_vh1, W_h1h2 and W_vu must be matrices")
        n_h1, n_v = W1.shape
        n_h2 = W2.shape[0]
        n_u = Wvu.shape[0]
        if min(n_v, n_h1, n_h2, n_u) < 1:
            raise ShapeError("all layer widths must be >= 1")
        shapes = {
            "W_vh1": (n_h1, n_v),
            "W_h1h2": (n_h2, n_h1),
            "b_v": (n_v,),
            "b_h1": (n_h1,),
            "b_h2": (n_h2,),
            "W_uv": (n_v, n_u),
            "W_uh1": (n_h1, n_u),
            "W_uh2": (n_h2, n_u),
            "u0": (n_u,),
            "W_vu": (n_u, n_v),
            "W_uu": (n_u, n_u),
            "b_u": (n_u,),
        }
        for name, shape in shapes.items():
            object.__setattr__(self, name, check_shape(name, getattr(self, name), shape))

    @property
    def n_v(self):
        return self.W_vh1.shape[1]

    @property
    def n_h1(self):
        return self.W_vh1.shape[0]

    @property
    def n_h2(self):
        return self.W_h1h2.shape[0]

    @property
    def n_u(self):
        return self.W_vu.shape[0]

    def rnn(self):
        return RnnParams(self.W_vu, self.W_uu, self.b_u, self.u0)


PARAM_NAMES = tuple(f.name for f in fields(RnnDbnParams))


def init_rnn_dbn(n_v, n_h1, n_h2, n_u, rng, std=0.01):
    """Gaussian(0, std) weights, zero biases and zero initial state."""
    def w(*shape):
        return rng.normal(0.0, std, size=shape)

    return RnnDbnParams(
        W_vh1=w(n_h1, n_v),
        W_h1h2=w(n_h2, n_h1),
        b_v=np.zeros(n_v),
        b_h1=np.zeros(n_h1),
        b_h2=np.zeros(n_h2),
        W_uv=w(n_v, n_u),
        W_uh1=w(n_h1, n_u),
        W_uh2=w(n_h2, n_u),
        u0=np.zeros(n_u),
        W_vu=w(n_u, n_v),
        W_uu=w(n_u, n_u),
        b_u=np.zeros(n_u),
    )


def time_dependent_biases(p, u_prev):
    """(b_v(t), b_h1(t), b_h2(t)) for one state or a stack of states."""
    u_prev = np.asarray(u_prev, dtype=float)
    if u_prev.ndim not in (1, 2) or u_prev.shape[-1] != p.n_u:
        raise ShapeError(f"u_prev must have width {p.n_u}, got shape {u_prev.shape}")
    if u_prev.ndim == 1:
        return p.b_v + p.W_uv @ u_prev, p.b_h1 + p.W_uh1 @ u_prev, p.b_h2 + p.W_uh2 @ u_prev
    return (
        p.b_v + u_prev @ p.W_uv.T,
        p.b_h1 + u_prev @ p.W_uh1.T,
        p.b_h2 + u_prev @ p.W_uh2.T,
    )


def forward_hidden_states(p, vseq):
    return rnn_forward(p.rnn(), vseq)


def conditional_dbn_at(p, u_prev):
    """The step's DBN; its weight arrays are the very arrays held by ``p``."""
    b_v, b_h1, b_h2 = time_dependent_biases(p, u_prev)
    return DbnParams((RbmParams(p.W_vh1, b_v, b_h1), RbmParams(p.W_h1h2, b_h1, b_h2)))


def _frames(p, seq):
    V = as_matrix(seq, p.n_v, "sequence")
    if V.shape[0] == 0:
        raise ShapeError("sequences must be non-empty")
    return V


def _batch_gradient(p, seqs, layer_stats):
    """Sum over ``seqs`` of the per-sequence gradients, as RnnDbnParams.

    All frames of all sequences are stacked so each DBN layer sees one CD
    batch; ``layer_stats(p, V, B_v, B_h1, B_h2)`` returns
    ``(dW_vh1, dW_h1h2, dB_v, dB_h1, dB_h2)`` with weight terms summed over
    frames and bias terms per frame.
    """
    Vs = [_frames(p, s) for s in seqs]
    Us = [forward_hidden_states(p, V) for V in Vs]
    U_prev = np.vstack([np.vstack([p.u0[None, :], U[:-1]]) for U in Us])
    V = np.vstack(Vs)
    B_v, B_h1, B_h2 = time_dependent_biases(p, U_prev)
    dW1, dW2, dB_v, dB_h1, dB_h2 = layer_stats(p, V, B_v, B_h1, B_h2)

    # d/du(t-1) of frame t's term, through the three bias shifts
    g_prev = dB_v @ p.W_uv + dB_h1 @ p.W_uh1 + dB_h2 @ p.W_uh2
    rnn = p.rnn()
    dW_vu = np.zeros_like(p.W_vu)
    dW_uu = np.zeros_like(p.W_uu)
    db_u = np.zeros_like(p.b_u)
    du0 = np.zeros_like(p.u0)
    start = 0
    for Vi, Ui in zip(Vs, Us):
        g = g_prev[start:start + len(Vi)]
        start += len(Vi)
        r = bptt_gradients(rnn, Vi, np.vstack([g[1:], np.zeros((1, p.n_u))]), states=Ui)
        dW_vu += r.W_vu
        dW_uu += r.W_uu
        db_u += r.b_u
        du0 += g[0] + r.u0

    return RnnDbnParams(
        W_vh1=dW1,
        W_h1h2=dW2,
        b_v=dB_v.sum(axis=0),
        b_h1=dB_h1.sum(axis=0),
        b_h2=dB_h2.sum(axis=0),
        W_uv=dB_v.T @ U_prev,
        W_uh1=dB_h1.T @ U_prev,
        W_uh2=dB_h2.T @ U_prev,
        u0=du0,
        W_vu=dW_vu,
        W_uu=dW_uu,
        b_u=db_u,
    )


def _cd_layer_stats(k, rng, recon):
    def stats(p, V, B_v, B_h1, B_h2):
        dW1, dB_v, dB_h1_lower, Vk = cd_statistics(p.W_vh1, B_v, B_h1, V, k, rng)
        recon.append(reconstruction_error(V, Vk))
        H1 = sigmoid(V @ p.W_vh1.T + B_h1)
        dW2, dB_h1_upper, dB_h2, _ = cd_statistics(p.W_h1h2, B_h1, B_h2, H1, k, rng)
        # b_h1 is the hidden bias of layer 1 and the visible bias of layer 2
        return dW1, dW2, dB_v, dB_h1_lower + dB_h1_upper, dB_h2

    return stats


class _FrameTables(NamedTuple):
    log_pv: float
    q: np.ndarray
    p_top: np.ndarray
    H1: np.ndarray
    mean_v: np.ndarray
    mean_h2: np.ndarray


def _frame_tables(W1, W2, b_v, b_h1, b_h2, v, H1):
    # p(v) = sum_h1 P(v | h1) P_top(h1), enumerated over h1 with h2 summed in closed form
    A = H1 @ W1 + b_v
    log_pv_h1 = A @ v - np.logaddexp(0.0, A).sum(axis=1)
    S = H1 @ W2.T + b_h2
    neg_f = H1 @ b_h1 + np.logaddexp(0.0, S).sum(axis=1)
    m = neg_f.max()
    log_p_top = neg_f - (m + np.log(np.exp(neg_f - m).sum()))
    joint = log_pv_h1 + log_p_top
    m = joint.max()
    log_pv = m + np.log(np.exp(joint - m).sum())
    return _FrameTables(
        float(log_pv), np.exp(joint - log_pv), np.exp(log_p_top), H1, sigmoid(A), sigmoid(S)
    )


def _exact_layer_stats(p, V, B_v, B_h1, B_h2):
    H1 = binary_configs(p.n_h1)
    dW1 = np.zeros_like(p.W_vh1)
    dW2 = np.zeros_like(p.W_h1h2)
    dB_v = np.empty_like(B_v)
    dB_h1 = np.empty_like(B_h1)
    dB_h2 = np.empty_like(B_h2)
    for t in range(V.shape[0]):
        f = _frame_tables(p.W_vh1, p.W_h1h2, B_v[t], B_h1[t], B_h2[t], V[t], H1)
        resid = V[t] - f.mean_v  # d log P(v | h1) / d(activation), per h1
        dW1 += (H1 * f.q[:, None]).T @ resid
        dB_v[t] = f.q @ resid
        dB_h1[t] = f.q @ H1 - f.p_top @ H1
        dB_h2[t] = f.q @ f.mean_h2 - f.p_top @ f.mean_h2
        dW2 += (f.mean_h2 * (f.q - f.p_top)[:, None]).T @ H1
    return dW1, dW2, dB_v, dB_h1, dB_h2


def exact_gradient(p, seq):
    """Exact gradient of sum_t log p(v(t) | history) by enumerating h1.

    Same BPTT route as training, with the layerwise CD statistics replaced by
    the exact DBN posterior and top-RBM expectations. Small models only.
    """
    if p.n_v + p.n_h1 + p.n_h2 > EXACT_BUDGET:
        raise BudgetError("model too large for the exact gradient")
    return _batch_gradient(p, [seq], _exact_layer_stats)


def exact_objective(p, seq):
    return float(frame_conditional_ll(p, seq).per_frame.sum())


def _update(p, g, cfg, freeze):
    g = clip_gradient(g, cfg.clip_threshold)
    kwargs = {}
    for name in PARAM_NAMES:
        old = getattr(p, name)
        kwargs[name] = old if name in freeze else old + cfg.learning_rate * getattr(g, name)
    return RnnDbnParams(**kwargs)


def train_epoch(p, dataset, cfg, rng, freeze=()):
    """One shuffled pass over ``dataset`` (a list of frame sequences).

    Each minibatch of ``cfg.batch_size`` sequences yields one update of all
    twelve parameters (minus any named in ``freeze``), with the gradient
    averaged over the minibatch's sequences and summed over their frames.
    Returns the new parameters and the mean per-frame layer-1
    reconstruction error.
    """
    if len(dataset) == 0:
        raise ValueError("dataset must contain at least one sequence")
    unknown = set(freeze) - set(PARAM_NAMES)
    if unknown:
        raise ValueError(f"unknown parameter names in freeze: {sorted(unknown)}")
    seqs = [_frames(p, s) for s in dataset]
    err, frames = 0.0, 0
    for idx in minibatches(len(seqs), cfg.batch_size, rng):
        batch = [seqs[i] for i in idx]
        recon = []
        g = _batch_gradient(p, batch, _cd_layer_stats(cfg.cd_k, rng, recon))
        n = len(batch)
        g = map_arrays(lambda a: a / n, g)
        p = _update(p, g, cfg, freeze)
        n_frames = sum(len(s) for s in batch)
        err += recon[0] * n_frames
        frames += n_frames
    return p, err / frames


def train(p, dataset, cfg, rng, log=None, freeze=()):
    history = []
    for epoch in range(cfg.epochs):
        p, obj = train_epoch(p, dataset, cfg, rng, freeze)
        history.append(obj)
        if log is not None:
            log(epoch + 1, obj)
    return p, history


def generate(p, length, primer=None, cfg=None, rng=None, n_chains=None):
    """Sample ``length`` new frames, optionally continuing a primer sequence.

    Each frame comes from ``cfg.gen_gibbs_steps`` Gibbs sweeps of the step's
    top RBM (h1 <-> h2), entered by an upward pass from the previous frame
    and left by a downward pass to the visibles. The RNN is then advanced on
    the sampled frame (or on its probabilities with ``cfg.gen_mean_field``).
    Returns ``(length, n_v)``, or ``(n_chains, length, n_v)``.
    """
    if cfg is None or rng is None:
        raise ValueError("generate needs a TrainConfig and an rng")
    if length < 1:
        raise ValueError("length must be >= 1")
    rows = 1 if n_chains is None else n_chains
    U = np.tile(p.u0, (rows, 1))
    V = np.zeros((rows, p.n_v))
    if primer is not None:
        P = as_matrix(primer, p.n_v, "primer")
        if len(P):
            U = np.tile(forward_hidden_states(p, P)[-1], (rows, 1))
            V = np.tile(P[-1], (rows, 1))
    out = np.empty((rows, length, p.n_v))
    for t in range(length):
        B_v, B_h1, B_h2 = time_dependent_biases(p, U)
        H1 = bernoulli_sample(sigmoid(V @ p.W_vh1.T + B_h1), rng)
        for _ in range(cfg.gen_gibbs_steps):
            H2 = bernoulli_sample(sigmoid(H1 @ p.W_h1h2.T + B_h2), rng)
            H1 = bernoulli_sample(sigmoid(H2 @ p.W_h1h2 + B_h1), rng)
        pv = sigmoid(H1 @ p.W_vh1 + B_v)
        V = bernoulli_sample(pv, rng)
        out[:, t] = V
        feed = pv if cfg.gen_mean_field else V
        U = sigmoid(feed @ p.W_vu.T + U @ p.W_uu.T + p.b_u)
    return out[0] if n_chains is None else out


class FrameLL(NamedTuple):
    per_frame: np.ndarray
    mean: float
    exact: bool


def frame_conditional_ll(p, seq, approximate=False, n_samples=1000, rng=None,
                         budget=EXACT_BUDGET):
    """log p(v(t) | history) for every frame of ``seq``.

    Exact when ``n_v + n_h1 + n_h2 <= budget`` (24 by default). Beyond that, with
    ``approximate=True``, each frame's sum over h1 is importance-sampled
    from the factorial proposal sigmoid(W_vh1 v + b_h1(t)); the log of the
    average weight underestimates log p(v) in expectation. The top RBM's
    log Z is still computed exactly, so min(n_h1, n_h2) must stay <= 20.
    """
    V = _frames(p, seq)
    U = forward_hidden_states(p, V)
    U_prev = np.vstack([p.u0[None, :], U[:-1]])
    B_v, B_h1, B_h2 = time_dependent_biases(p, U_prev)
    out = np.empty(V.shape[0])
    if p.n_v + p.n_h1 + p.n_h2 <= budget:
        H1 = binary_configs(p.n_h1)
        for t in range(V.shape[0]):
            out[t] = _frame_tables(p.W_vh1, p.W_h1h2, B_v[t], B_h1[t], B_h2[t], V[t], H1).log_pv
        return FrameLL(out, float(out.mean()), True)
    if not approximate:
        raise BudgetError(
            f"exact evaluation needs n_v + n_h1 + n_h2 <= {budget}, got "
            f"{p.n_v + p.n_h1 + p.n_h2}; pass approximate=True for an estimate"
        )
    if rng is None:
        raise ValueError("approximate evaluation needs an rng")
    for t in range(V.shape[0]):
        top = RbmParams(p.W_h1h2, B_h1[t], B_h2[t])
        log_z = log_partition(top)
        q = sigmoid(p.W_vh1 @ V[t] + B_h1[t])
        H = bernoulli_sample(np.tile(q, (n_samples, 1)), rng)
        log_q = H @ np.log(q) + (1.0 - H) @ np.log1p(-q)
        A = H @ p.W_vh1 + B_v[t]
        log_pv_h = A @ V[t] - np.logaddexp(0.0, A).sum(axis=1)
        log_top = H @ B_h1[t] + np.logaddexp(0.0, H @ p.W_h1h2.T + B_h2[t]).sum(axis=1) - log_z
        w = log_pv_h + log_top - log_q
        m = w.max()
        out[t] = m + np.log(np.exp(w - m).mean())
    return FrameLL(out, float(out.mean()), False)

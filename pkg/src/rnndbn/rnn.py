"""Single-layer sigmoid RNN and backpropagation through time.

The state recurrence is ``u[t] = sigmoid(W_vu v[t] + W_uu u[t-1] + b_u)``
with a trainable initial state ``u0``. The previous-step term uses the
deterministic state ``u[t-1]``, never a binary hidden sample.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .numerics import as_matrix, check_shape, sigmoid


@dataclass(frozen=True)
class RnnParams:
    W_vu: np.ndarray
    W_uu: np.ndarray
    b_u: np.ndarray
    u0: np.ndarray

    def __post_init__(self):
        W_vu = np.asarray(self.W_vu, dtype=float)
        if W_vu.ndim != 2 or min(W_vu.shape) < 1:
            raise ShapeError(f"W_vu must be a non-empty matrix, got shape {W_vu.shape}")
        n_u, n_v = W_vu.shape
        object.__setattr__(self, "W_vu", check_shape("W_vu", W_vu, (n_u, n_v)))
        object.__setattr__(self, "W_uu", check_shape("W_uu", self.W_uu, (n_u, n_u)))
        object.__setattr__(self, "b_u", check_shape("b_u", self.b_u, (n_u,)))
        object.__setattr__(self, "u0", check_shape("u0", self.u0, (n_u,)))

    @property
    def n_v(self):
        return self.W_vu.shape[1]

    @property
    def n_u(self):
        return self.W_vu.shape[0]


def init_rnn(n_v, n_u, rng, std=0.01):
    return RnnParams(
        rng.normal(0.0, std, size=(n_u, n_v)),
        rng.normal(0.0, std, size=(n_u, n_u)),
        np.zeros(n_u),
        np.zeros(n_u),
    )


def _sequence(vseq, n_v):
    V = as_matrix(vseq, n_v, "sequence")
    if V.shape[0] == 0:
        raise ShapeError("sequence must be non-empty")
    return V


def rnn_forward(p, vseq):
    """State trajectory ``u[1..T]`` as a ``(T, n_u)`` array."""
    V = _sequence(vseq, p.n_v)
    U = np.empty((V.shape[0], p.n_u))
    u = p.u0
    for t in range(V.shape[0]):
        u = sigmoid(p.W_vu @ V[t] + p.W_uu @ u + p.b_u)
        U[t] = u
    return U


def bptt_gradients(p, vseq, dL_du, states=None):
    """Gradient of a loss w.r.t. the RNN parameters, returned as RnnParams.

    ``dL_du[t]`` is the direct (external) derivative of the total loss with
    respect to ``u[t]``; the dependence of later states on ``u[t]`` is added
    here by running the recurrence backwards. ``states`` may pass a
    trajectory already computed by :func:`rnn_forward`.
    """
    V = _sequence(vseq, p.n_v)
    G = np.asarray(dL_du, dtype=float)
    if G.shape != (V.shape[0], p.n_u):
        raise ShapeError(f"dL_du must have shape {(V.shape[0], p.n_u)}, got {G.shape}")
    U = rnn_forward(p, V) if states is None else np.asarray(states, dtype=float)
    U_prev = np.vstack([p.u0[None, :], U[:-1]])

    dZ = np.empty_like(U)
    carry = np.zeros(p.n_u)
    for t in range(V.shape[0] - 1, -1, -1):
        du = G[t] + carry
        dZ[t] = du * U[t] * (1.0 - U[t])
        carry = p.W_uu.T @ dZ[t]
    return RnnParams(dZ.T @ V, dZ.T @ U_prev, dZ.sum(axis=0), carry)

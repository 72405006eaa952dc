"""Seeded tiny instances comparing analytic gradients to finite differences.

Each ``*_gradcheck`` returns the max relative error over every parameter
coordinate; :data:`THRESHOLDS` holds the bar each one must clear.
"""

import numpy as np

from . import oracles
from . import rnn_dbn as rd
from .numerics import make_rng, pack, sigmoid, unpack
from .rbm import RbmParams
from .rnn import RnnParams, bptt_gradients, rnn_forward
from .rtrbm import RtrbmParams, rtrbm_exact_gradient, rtrbm_frame_ll

THRESHOLDS = {"rbm": 1e-5, "rnn": 1e-6, "rtrbm": 1e-4, "rnn-dbn": 1e-4}


def _binary(rng, shape):
    return (rng.random(shape) < 0.5).astype(float)


def tiny_rbm(seed, n_v=4, n_h=3, n_data=8):
    rng = make_rng(seed)
    p = RbmParams(rng.normal(0, 0.5, (n_h, n_v)), rng.normal(0, 0.5, n_v), rng.normal(0, 0.5, n_h))
    return p, _binary(rng, (n_data, n_v))


def exact_rbm_gradient(p, data):
    """Mean data statistics minus exact model expectations, as RbmParams."""
    V = np.atleast_2d(data)
    ph = sigmoid(V @ p.W.T + p.b_h)
    m = oracles.exact_model_expectations(p)
    n = V.shape[0]
    return RbmParams(ph.T @ V / n - m.hv, V.mean(axis=0) - m.v, ph.mean(axis=0) - m.h)


def rbm_gradcheck(seed=0, eps=1e-5):
    p, data = tiny_rbm(seed)
    g = exact_rbm_gradient(p, data)
    return oracles.finite_difference_gradcheck(
        lambda x: oracles.exact_ll_rbm(unpack(p, x), data), pack(p), pack(g), eps
    )


def tiny_rnn(seed, n_v=3, n_u=4, T=6):
    rng = make_rng(seed)
    p = RnnParams(
        rng.uniform(-1, 1, (n_u, n_v)),
        rng.uniform(-1, 1, (n_u, n_u)),
        rng.uniform(-1, 1, n_u),
        rng.uniform(0, 1, n_u),
    )
    return p, _binary(rng, (T, n_v))


def rnn_gradcheck(seed=0, eps=1e-5):
    """BPTT against finite differences for L = sum_t |u(t)|^2 / 2."""
    p, seq = tiny_rnn(seed)
    U = rnn_forward(p, seq)
    g = bptt_gradients(p, seq, U, states=U)

    def loss(x):
        return 0.5 * float((rnn_forward(unpack(p, x), seq) ** 2).sum())

    return oracles.finite_difference_gradcheck(loss, pack(p), pack(g), eps)


def tiny_rtrbm(seed, n_v=4, n_h=3, T=5):
    rng = make_rng(seed)
    p = RtrbmParams(
        rng.normal(0, 0.7, (n_h, n_v)),
        rng.normal(0, 0.5, n_v),
        rng.normal(0, 0.5, n_h),
        rng.normal(0, 0.7, (n_v, n_h)),
        rng.normal(0, 0.7, (n_h, n_h)),
        rng.uniform(0, 1, n_h),
    )
    return p, _binary(rng, (T, n_v))


def rtrbm_gradcheck(seed=0, eps=1e-5):
    p, seq = tiny_rtrbm(seed)
    g = rtrbm_exact_gradient(p, seq, oracles.exact_model_expectations)
    return oracles.finite_difference_gradcheck(
        lambda x: float(rtrbm_frame_ll(unpack(p, x), seq).sum()), pack(p), pack(g), eps
    )


def tiny_rnn_dbn(seed, n_v=4, n_h1=3, n_h2=3, n_u=3, T=5):
    rng = make_rng(seed)
    shapes = {
        "W_vh1": (n_h1, n_v), "W_h1h2": (n_h2, n_h1), "b_v": (n_v,), "b_h1": (n_h1,),
        "b_h2": (n_h2,), "W_uv": (n_v, n_u), "W_uh1": (n_h1, n_u), "W_uh2": (n_h2, n_u),
        "u0": (n_u,), "W_vu": (n_u, n_v), "W_uu": (n_u, n_u), "b_u": (n_u,),
    }
    params = {name: rng.normal(0, 0.7, shape) for name, shape in shapes.items()}
    params["u0"] = rng.uniform(0, 1, n_u)
    return rd.RnnDbnParams(**params), _binary(rng, (T, n_v))


def rnn_dbn_objective_oracle(p, seq):
    """sum_t log p(v(t) | history), each frame scored by the enumeration oracle."""
    U = rd.forward_hidden_states(p, seq)
    U_prev = np.vstack([p.u0[None, :], U[:-1]])
    return sum(
        oracles.exact_ll_dbn(rd.conditional_dbn_at(p, U_prev[t]), seq[t:t + 1])
        for t in range(len(seq))
    )


def rnn_dbn_gradcheck(seed=0, eps=1e-5, per_block=False):
    """Max relative error over all twelve parameter blocks (or per block)."""
    p, seq = tiny_rnn_dbn(seed)
    g = rd.exact_gradient(p, seq)
    numeric = oracles.numerical_gradient(
        lambda x: rnn_dbn_objective_oracle(unpack(p, x), seq), pack(p), eps
    )
    err = oracles.relative_error(pack(g), numeric)
    if not per_block:
        return float(err.max())
    out, i = {}, 0
    for name in rd.PARAM_NAMES:
        n = np.size(getattr(p, name))
        out[name] = float(err[i:i + n].max())
        i += n
    return out


GRADCHECKS = {
    "rbm": rbm_gradcheck,
    "rnn": rnn_gradcheck,
    "rtrbm": rtrbm_gradcheck,
    "rnn-dbn": rnn_dbn_gradcheck,
}

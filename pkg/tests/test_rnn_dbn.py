import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rnndbn import oracles
from rnndbn import rnn_dbn as rd
from rnndbn.checks import rnn_dbn_gradcheck, rnn_dbn_objective_oracle, tiny_rnn_dbn
from rnndbn.config import TrainConfig
from rnndbn.dbn import DbnParams, greedy_train
from rnndbn.errors import BudgetError, ShapeError
from rnndbn.numerics import make_rng, pack
from rnndbn.rbm import RbmParams

from conftest import all_binary, random_binary

COUPLINGS = ("W_uv", "W_uh1", "W_uh2")
RNN_PART = ("W_vu", "W_uu", "b_u", "u0")


def with_zeroed(p, names):
    fields = {n: getattr(p, n) for n in rd.PARAM_NAMES}
    for n in names:
        fields[n] = np.zeros_like(fields[n])
    return rd.RnnDbnParams(**fields)


def zeros(n_v, n_h1, n_h2, n_u):
    return with_zeroed(rd.init_rnn_dbn(n_v, n_h1, n_h2, n_u, make_rng(0)), rd.PARAM_NAMES)


def test_twelve_parameters():
    assert len(rd.PARAM_NAMES) == 12
    p = rd.init_rnn_dbn(5, 4, 3, 2, make_rng(0))
    assert (p.n_v, p.n_h1, p.n_h2, p.n_u) == (5, 4, 3, 2)


def test_shape_validation():
    p = rd.init_rnn_dbn(5, 4, 3, 2, make_rng(0))
    fields = {n: getattr(p, n) for n in rd.PARAM_NAMES}
    fields["W_h1h2"] = np.zeros((3, 5))
    with pytest.raises(ShapeError):
        rd.RnnDbnParams(**fields)
    fields = {n: getattr(p, n) for n in rd.PARAM_NAMES}
    fields["b_u"] = np.array([np.inf, 0.0])
    with pytest.raises(ValueError):
        rd.RnnDbnParams(**fields)


def test_biases_static_cases():
    p, _ = tiny_rnn_dbn(0)
    u = np.array([0.2, 0.7, 0.4])
    for got, want in zip(rd.time_dependent_biases(with_zeroed(p, COUPLINGS), u), (p.b_v, p.b_h1, p.b_h2)):
        assert np.array_equal(got, want)
    for got, want in zip(rd.time_dependent_biases(p, np.zeros(3)), (p.b_v, p.b_h1, p.b_h2)):
        assert np.array_equal(got, want)


def test_top_bias_hand_arithmetic():
    p = zeros(1, 1, 2, 2)
    fields = {n: getattr(p, n) for n in rd.PARAM_NAMES}
    fields["b_h2"] = np.array([0.0, 1.0])
    fields["W_uh2"] = np.array([[1.0, 0.0], [0.0, 2.0]])
    p = rd.RnnDbnParams(**fields)
    assert np.array_equal(rd.time_dependent_biases(p, np.array([0.5, 0.5]))[2], [0.5, 2.0])


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_bias_superposition(seed):
    p, _ = tiny_rnn_dbn(seed)
    rng = make_rng(seed)
    u1, u2 = rng.random(3), rng.random(3)
    base = rd.time_dependent_biases(p, np.zeros(3))
    both = rd.time_dependent_biases(p, u1 + u2)
    one = rd.time_dependent_biases(p, u1)
    two = rd.time_dependent_biases(p, u2)
    for k in range(3):
        assert np.abs((both[k] - base[k]) - ((one[k] - base[k]) + (two[k] - base[k]))).max() <= 1e-12


def test_forward_states():
    assert np.array_equal(rd.forward_hidden_states(zeros(3, 2, 2, 4), np.ones((3, 3))),
                          np.full((3, 4), 0.5))
    p, _ = tiny_rnn_dbn(1)
    p = with_zeroed(p, ("W_uu",))
    U = rd.forward_hidden_states(p, np.tile([1.0, 0, 0, 1], (4, 1)))
    assert all(np.array_equal(U[0], row) for row in U)
    fields = {n: getattr(zeros(1, 1, 1, 1), n) for n in rd.PARAM_NAMES}
    fields["W_vu"] = np.array([[1.0]])
    fields["W_uu"] = np.array([[1.0]])
    scalar = rd.RnnDbnParams(**fields)
    assert rd.forward_hidden_states(scalar, [[1.0]])[0, 0] == pytest.approx(0.7310585786300049)


def test_state_trajectory_deterministic():
    p, seq = tiny_rnn_dbn(2)
    assert np.array_equal(rd.forward_hidden_states(p, seq), rd.forward_hidden_states(p, seq))


def test_conditional_dbn_static_and_chained():
    p, _ = tiny_rnn_dbn(3)
    d = rd.conditional_dbn_at(with_zeroed(p, COUPLINGS), np.zeros(3))
    assert isinstance(d, DbnParams) and d.widths == [4, 3, 3]
    assert np.array_equal(d.layers[0].b_v, p.b_v)
    assert np.array_equal(d.layers[0].b_h, p.b_h1) and np.array_equal(d.layers[1].b_v, p.b_h1)
    assert np.array_equal(d.layers[1].b_h, p.b_h2)


def test_conditional_dbn_shares_weights():
    p, _ = tiny_rnn_dbn(3)
    d = rd.conditional_dbn_at(p, np.full(3, 0.5))
    assert np.shares_memory(d.layers[0].W, p.W_vh1)
    assert np.shares_memory(d.layers[1].W, p.W_h1h2)


def test_frame_ll_matches_oracle_and_factorises():
    p, seq = tiny_rnn_dbn(4)
    ll = rd.frame_conditional_ll(p, seq)
    assert ll.exact and ll.per_frame.shape == (5,)
    U = rd.forward_hidden_states(p, seq)
    U_prev = np.vstack([p.u0[None, :], U[:-1]])
    for t in range(5):
        oracle = oracles.exact_ll_dbn(rd.conditional_dbn_at(p, U_prev[t]), seq[t:t + 1])
        assert abs(ll.per_frame[t] - oracle) <= 1e-10 * abs(oracle)
    joint = rnn_dbn_objective_oracle(p, seq)
    assert abs(ll.per_frame.sum() - joint) <= 1e-10 * abs(joint)
    assert ll.mean == pytest.approx(ll.per_frame.mean())


def test_zero_model_frame_ll():
    ll = rd.frame_conditional_ll(zeros(3, 2, 2, 2), np.eye(3))
    assert np.allclose(ll.per_frame, -3 * math.log(2), atol=1e-14)


def test_uncoupled_model_is_static_dbn():
    p, seq = tiny_rnn_dbn(5)
    p = with_zeroed(p, COUPLINGS)
    static = DbnParams((RbmParams(p.W_vh1, p.b_v, p.b_h1), RbmParams(p.W_h1h2, p.b_h1, p.b_h2)))
    log_pv = oracles.exact_dbn_log_pv(static)
    ll = rd.frame_conditional_ll(p, seq)
    assert np.abs(ll.per_frame - log_pv[oracles.encode(seq)]).max() <= 1e-12


def test_budget_error_without_approximate_flag():
    p = rd.init_rnn_dbn(20, 3, 3, 2, make_rng(0))
    with pytest.raises(BudgetError):
        rd.frame_conditional_ll(p, np.zeros((2, 20)))


def test_uniform_88_pitch_model_scores_random_baseline():
    ll = rd.frame_conditional_ll(zeros(88, 1, 1, 1), np.zeros((3, 88)), approximate=True,
                                 n_samples=10, rng=make_rng(0))
    assert not ll.exact
    assert np.allclose(ll.per_frame, -88 * math.log(2), atol=1e-10)
    assert round(ll.mean, 2) == -61.00


def test_importance_estimate_close_to_exact():
    p, seq = tiny_rnn_dbn(6)
    exact = rd.frame_conditional_ll(p, seq).per_frame
    approx = rd.frame_conditional_ll(p, seq, approximate=True, n_samples=50_000,
                                     rng=make_rng(1), budget=0)
    assert not approx.exact
    assert np.abs(approx.per_frame - exact).max() < 0.02


def test_zero_rate_epoch_keeps_parameters():
    p, seq = tiny_rnn_dbn(7)
    q, obj = rd.train_epoch(p, [seq, seq[:3]], TrainConfig(learning_rate=0.0), make_rng(0))
    assert np.array_equal(pack(p), pack(q))
    assert obj >= 0


def test_epoch_reduces_to_greedy_layer_one_update():
    p = with_zeroed(rd.init_rnn_dbn(5, 4, 3, 2, make_rng(0), std=0.3), COUPLINGS + RNN_PART)
    frames = random_binary(make_rng(1), (6, 5))
    cfg = TrainConfig(learning_rate=0.2, cd_k=2, epochs=1, batch_size=8)
    q, _ = rd.train_epoch(p, [f[None, :] for f in frames], cfg, make_rng(9),
                          freeze=COUPLINGS + RNN_PART)
    static = DbnParams((RbmParams(p.W_vh1, p.b_v, p.b_h1), RbmParams(p.W_h1h2, p.b_h1, p.b_h2)))
    d = greedy_train(static, frames, cfg, make_rng(9))
    assert np.array_equal(q.W_vh1, d.layers[0].W)
    assert np.array_equal(q.b_v, d.layers[0].b_v)
    for name in COUPLINGS + RNN_PART:
        assert not np.any(getattr(q, name))


def test_freeze_rejects_unknown_names():
    p, seq = tiny_rnn_dbn(0)
    with pytest.raises(ValueError):
        rd.train_epoch(p, [seq], TrainConfig(), make_rng(0), freeze=("W",))


def test_epoch_errors():
    p, _ = tiny_rnn_dbn(0)
    with pytest.raises(ValueError):
        rd.train_epoch(p, [], TrainConfig(), make_rng(0))
    with pytest.raises(ShapeError):
        rd.train_epoch(p, [np.zeros((0, 4))], TrainConfig(), make_rng(0))
    with pytest.raises(ShapeError):
        rd.train_epoch(p, [np.zeros((2, 5))], TrainConfig(), make_rng(0))


def test_gradient_check_all_blocks():
    errs = rnn_dbn_gradcheck(seed=0, eps=1e-5, per_block=True)
    assert set(errs) == set(rd.PARAM_NAMES)
    assert max(errs.values()) < 1e-4


def test_exact_gradient_is_finite():
    # b_h1 collects a term from each of the two RBMs that share it
    p, seq = tiny_rnn_dbn(8)
    g = rd.exact_gradient(p, seq)
    assert g.b_h1.shape == (3,) and np.all(np.isfinite(pack(g)))


def test_generation_reproducible_and_shaped():
    p, seq = tiny_rnn_dbn(9)
    cfg = TrainConfig(gen_gibbs_steps=5)
    a = rd.generate(p, 7, cfg=cfg, rng=make_rng(2))
    assert a.shape == (7, 4) and set(np.unique(a)) <= {0.0, 1.0}
    assert np.array_equal(a, rd.generate(p, 7, cfg=cfg, rng=make_rng(2)))
    primed = rd.generate(p, 3, primer=seq, cfg=cfg, rng=make_rng(2), n_chains=5)
    assert primed.shape == (5, 3, 4)


def test_generation_primer_width_mismatch():
    p, _ = tiny_rnn_dbn(9)
    with pytest.raises(ShapeError):
        rd.generate(p, 3, primer=np.zeros((2, 5)), cfg=TrainConfig(), rng=make_rng(0))


def test_uncoupled_generation_matches_static_marginal():
    p, _ = tiny_rnn_dbn(10, n_v=3, n_h1=2, n_h2=2)
    p = with_zeroed(p, COUPLINGS)
    static = DbnParams((RbmParams(p.W_vh1, p.b_v, p.b_h1), RbmParams(p.W_h1h2, p.b_h1, p.b_h2)))
    exact = np.exp(oracles.exact_dbn_log_pv(static))
    frames = rd.generate(p, 100, cfg=TrainConfig(gen_gibbs_steps=25), rng=make_rng(3),
                         n_chains=2000).reshape(-1, 3)
    assert len(frames) == 200_000
    assert oracles.tv_from_samples(frames, exact) < 0.05


def test_training_improves_exact_likelihood_on_patterns():
    a, b = [1, 1, 0, 0], [0, 0, 1, 1]
    data = [np.array([a, b] * 4, float), np.array([b, a] * 3, float)]
    p0 = rd.init_rnn_dbn(4, 4, 4, 4, make_rng(0))
    p1, _ = rd.train(p0, data, TrainConfig(learning_rate=0.1, epochs=100), make_rng(1))
    before = np.mean([rd.frame_conditional_ll(p0, s).mean for s in data])
    after = np.mean([rd.frame_conditional_ll(p1, s).mean for s in data])
    assert after > before

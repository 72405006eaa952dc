"""Deep belief network as a stack of RBMs trained greedily, bottom up."""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .numerics import as_matrix, bernoulli_sample
from .rbm import RbmParams, init_rbm, prob_h_given_v, prob_v_given_h, rbm_sample, train_rbm


@dataclass(frozen=True)
class DbnParams:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("a DBN needs at least one layer")
        for i, layer in enumerate(layers):
            if not isinstance(layer, RbmParams):
                raise TypeError(f"layer {i} is not RbmParams")
            if i and layer.n_v != layers[i - 1].n_h:
                raise ShapeError(
                    f"layer {i} has {layer.n_v} visible units but layer {i - 1} "
                    f"has {layers[i - 1].n_h} hidden units"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def widths(self):
        return [self.layers[0].n_v] + [layer.n_h for layer in self.layers]


def init_dbn(widths, rng, std=0.01):
    """E.g. ``init_dbn([88, 150, 150], rng)`` for a two-hidden-layer stack."""
    if len(widths) < 2:
        raise ShapeError("need at least a visible and one hidden width")
    return DbnParams(tuple(init_rbm(a, b, rng, std) for a, b in zip(widths[:-1], widths[1:])))


def propagate_up(d, v, mode="mean", rng=None):
    """Representations of ``v`` at every level, starting with ``v`` itself.

    ``mode="mean"`` passes up the activation probabilities; ``"sample"``
    passes up Bernoulli samples of them (needs ``rng``).
    """
    if mode not in ("mean", "sample"):
        raise ValueError(f"mode must be 'mean' or 'sample', got {mode!r}")
    if mode == "sample" and rng is None:
        raise ValueError("sample mode needs an rng")
    single = np.ndim(v) == 1
    x = as_matrix(v, d.layers[0].n_v, "v")
    reps = [x]
    for layer in d.layers:
        x = prob_h_given_v(layer, x)
        if mode == "sample":
            x = bernoulli_sample(x, rng)
        reps.append(x)
    return [r[0] for r in reps] if single else reps


def greedy_train(d, data, cfg, rng, log=None):
    """Train each layer as an RBM on the mean activations of the one below.

    Layer ``l`` gets ``cfg.epochs`` full CD-k passes before layer ``l + 1``
    starts; lower layers are left untouched afterwards.
    """
    X = as_matrix(data, d.layers[0].n_v, "data")
    if X.shape[0] == 0:
        raise ValueError("data must be non-empty")
    trained = []
    for i, layer in enumerate(d.layers):
        layer_log = None if log is None else (lambda e, v, i=i: log(i, e, v))
        layer, _ = train_rbm(layer, X, cfg, rng, log=layer_log)
        trained.append(layer)
        if i + 1 < len(d.layers):
            X = prob_h_given_v(layer, X)
    return DbnParams(tuple(trained))


def dbn_sample(d, gibbs_steps, rng, n_samples=None):
    """Equilibrate the top RBM by block Gibbs, then sample down to visibles."""
    x = rbm_sample(d.layers[-1], gibbs_steps, rng, n_samples=n_samples)
    for layer in reversed(d.layers[:-1]):
        x = bernoulli_sample(prob_v_given_h(layer, x), rng)
    return x

"""Seeded randomness and the elementwise math every model shares.

All randomness goes through :func:`make_rng`, which returns a numpy
``Generator`` driven by PCG64 (128-bit state). PCG64 output and
``Generator.random`` are specified bit-for-bit by numpy and do not depend
on the platform, so a seed pins down every sample drawn by this package.
"""

import dataclasses

import numpy as np

from .errors import ShapeError

# Keeps sigmoid outputs strictly inside (0, 1) so log() downstream stays finite.
PROB_FLOOR = 1e-15


def make_rng(seed):
    """Return a fresh PCG64-backed generator for a 64-bit unsigned seed."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def sigmoid(x):
    """Overflow-safe logistic function, clamped to [1e-15, 1 - 1e-15]."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return np.clip(out, PROB_FLOOR, 1.0 - PROB_FLOOR)


def bernoulli_sample(p, rng):
    """Draw independent {0, 1} samples with success probabilities ``p``."""
    p = np.asarray(p, dtype=float)
    if np.any(~((p >= 0.0) & (p <= 1.0))):
        raise ValueError("probabilities must lie in [0, 1]")
    return (rng.random(p.shape) < p).astype(float)


def binary_configs(n):
    """Every binary vector of width ``n``; row ``i`` has bit ``j`` = (i >> j) & 1."""
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(float)


def as_matrix(x, width, name="input"):
    """View a vector or a stack of vectors as a 2-D float array of rows."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != width:
        raise ShapeError(f"{name} must have width {width}, got shape {x.shape}")
    return x


def check_shape(name, arr, shape):
    arr = np.asarray(arr, dtype=float)
    if arr.shape != tuple(shape):
        raise ShapeError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def clip_gradient(g, threshold):
    """Elementwise clip of every array field of a gradient dataclass."""
    if threshold is None:
        return g
    return map_arrays(lambda a: np.clip(a, -threshold, threshold), g)


def map_arrays(fn, obj, *others):
    """Apply ``fn`` fieldwise across dataclasses that share a layout."""
    kwargs = {}
    for f in dataclasses.fields(obj):
        kwargs[f.name] = fn(getattr(obj, f.name), *(getattr(o, f.name) for o in others))
    return type(obj)(**kwargs)


def pack(obj):
    """Flatten the array fields of a dataclass into one vector (field order)."""
    return np.concatenate([np.ravel(getattr(obj, f.name)) for f in dataclasses.fields(obj)])


def unpack(template, flat):
    """Inverse of :func:`pack`, using ``template`` for shapes and type."""
    flat = np.asarray(flat, dtype=float)
    kwargs, i = {}, 0
    for f in dataclasses.fields(template):
        shape = np.shape(getattr(template, f.name))
        n = int(np.prod(shape))
        kwargs[f.name] = flat[i:i + n].reshape(shape).copy()
        i += n
    if i != flat.size:
        raise ShapeError(f"flat vector has {flat.size} entries, template needs {i}")
    return type(template)(**kwargs)

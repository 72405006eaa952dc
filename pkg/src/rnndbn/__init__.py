"""Recurrent temporal generative models over binary piano-roll frames.

RBM, DBN, RNN, RTRBM and the RNN-DBN, trained with contrastive divergence
and backpropagation through time, plus brute-force enumeration oracles for
checking all of it on small instances.
"""

from .config import TrainConfig
from .errors import BudgetError, DataError, ShapeError
from .numerics import make_rng, sigmoid, bernoulli_sample
from .rbm import RbmParams, RbmGrad
from .dbn import DbnParams
from .rnn import RnnParams
from .rtrbm import RtrbmParams
from .rnn_dbn import RnnDbnParams

__all__ = [
    "TrainConfig",
    "BudgetError",
    "DataError",
    "ShapeError",
    "make_rng",
    "sigmoid",
    "bernoulli_sample",
    "RbmParams",
    "RbmGrad",
    "DbnParams",
    "RnnParams",
    "RtrbmParams",
    "RnnDbnParams",
]

__version__ = "0.1.0"

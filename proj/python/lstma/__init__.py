"""Attribute-conditioned LSTM image captioners (C++ core)."""

from ._lstma import *  # noqa: F401,F403
from ._lstma import (
    BOS,
    EOS,
    UNK,
    CaptionerParams,
    DecodeConfig,
    TrainConfig,
    Variant,
    Vocabulary,
)

__version__ = "0.1.0"

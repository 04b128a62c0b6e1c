"""Stroke-sequence-to-text transduction: transformer encoder-decoder over
raw online handwriting tokens, with synthetic data generation, training,
metrics and attention export."""

__version__ = "0.1.0"

from .model import ModelConfig, count_params  # noqa: F401
from .strokes import Stroke, StrokeSequence, TokenMatrix  # noqa: F401

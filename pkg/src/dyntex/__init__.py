"""Dynamic texture synthesis with kernel similarity embedding."""

from dyntex.errors import (
    BadMagicError,
    DataError,
    DegenerateSequenceError,
    DyntexError,
    GeometryError,
    ModelFormatError,
    NumericalError,
    TruncatedFileError,
    VersionMismatchError,
)
from dyntex.frameio import Frame, FrameSequence, Geometry, load_sequence, save_sequence
from dyntex.kernels import KernelSpec, gram_matrix, kernel_value, kernel_vector
from dyntex.kse import KseModel, load_model, predict_next, save_model, synthesize, train

__version__ = "0.1.0"

__all__ = [
    "BadMagicError",
    "DataError",
    "DegenerateSequenceError",
    "DyntexError",
    "Frame",
    "FrameSequence",
    "Geometry",
    "GeometryError",
    "KernelSpec",
    "KseModel",
    "ModelFormatError",
    "NumericalError",
    "TruncatedFileError",
    "VersionMismatchError",
    "gram_matrix",
    "kernel_value",
    "kernel_vector",
    "load_model",
    "load_sequence",
    "predict_next",
    "save_model",
    "save_sequence",
    "synthesize",
    "train",
]

"""Kernel similarity embedding: train, one-step prediction, rollout, model files.

The transition function maps a centered frame ``x`` to

    f(x) = [K(x, x_1) ... K(x, x_{N-1})] (lam*I + Omega)^{-1} Y

where ``Omega`` is the Gram matrix of the explanatory frames and ``Y`` holds
the response frames. Training precomputes ``(lam*I + Omega)^{-1} Y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from dyntex import binio
from dyntex.errors import DataError, DegenerateSequenceError, GeometryError, ModelFormatError
from dyntex.frameio import Frame, FrameSequence, Geometry, center, make_training_pair
from dyntex.kernels import KernelRows, KernelSpec, gram_matrix
from dyntex.solver import spd_factor

MAGIC = b"KSE1"
MIN_LAMBDA = 1e-15


@dataclass(frozen=True, eq=False)
class KseModel:
    kernel: KernelSpec
    lam: float
    explanatory: np.ndarray  # (N-1, D) centered frames 1..N-1
    coefficients: np.ndarray  # (N-1, D) = (lam*I + Omega)^{-1} Y
    temporal_mean: np.ndarray  # (D,)
    geometry: Geometry
    jitter_applied: float
    final_response: np.ndarray  # (D,) centered frame N
    _rows: KernelRows = field(init=False, repr=False)

    def __post_init__(self):
        # C-contiguous storage keeps BLAS summation order identical for a
        # freshly trained model and the same model loaded from disk.
        for name in ("explanatory", "coefficients", "temporal_mean", "final_response"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        object.__setattr__(self, "_rows", KernelRows(self.explanatory, self.kernel))

    @property
    def n_pairs(self) -> int:
        return self.explanatory.shape[0]

    @property
    def dim(self) -> int:
        return self.explanatory.shape[1]

    def response(self) -> np.ndarray:
        """Training responses rebuilt from the stored frames."""
        return np.vstack([self.explanatory[1:], self.final_response[None, :]])

    def training_frame(self, index: int) -> Frame:
        """Uncentered training frame ``index`` (1-based, 1..N)."""
        n = self.n_pairs + 1
        if not 1 <= index <= n:
            raise IndexError(f"training frame index {index} outside 1..{n}")
        row = self.explanatory[index - 1] if index <= self.n_pairs else self.final_response
        return Frame(row + self.temporal_mean, self.geometry)

    def residual(self) -> float:
        """Relative Frobenius residual of ``(lam*I + Omega) A = Y``."""
        omega = gram_matrix(self.explanatory, self.kernel)
        y = self.response()
        r = omega @ self.coefficients + self.lam * self.coefficients - y
        return float(np.linalg.norm(r) / np.linalg.norm(y))

    def step(self, centered: np.ndarray) -> np.ndarray:
        return self._rows(centered) @ self.coefficients


def _check_lambda(lam: float):
    if not np.isfinite(lam) or lam < MIN_LAMBDA:
        raise ValueError(f"lambda must be finite and >= {MIN_LAMBDA:g}, got {lam!r}")


def train(seq: FrameSequence, kernel: KernelSpec, lam: float) -> KseModel:
    """Fit the model on every consecutive frame pair of ``seq``.

    ``kernel`` may carry ``auto`` parameters; they are resolved on the
    centered training frames before the Gram matrix is built.
    """
    _check_lambda(lam)
    if len(seq) < 2:
        raise DataError("fewer than 2 frames")
    if np.all(seq.data == seq.data[0]):
        raise DegenerateSequenceError()
    cs = center(seq)
    pair = make_training_pair(cs)
    spec = kernel.resolve(cs.centered)
    omega = gram_matrix(pair.explanatory, spec)
    fac = spd_factor(omega, lam)
    return KseModel(
        kernel=spec,
        lam=float(lam),
        explanatory=pair.explanatory,
        coefficients=fac.solve(pair.response),
        temporal_mean=cs.temporal_mean,
        geometry=seq.geometry,
        jitter_applied=fac.jitter_applied,
        final_response=pair.response[-1].copy(),
    )


def as_frame_data(model_geometry: Geometry, frame: Union[Frame, np.ndarray]) -> np.ndarray:
    if isinstance(frame, Frame):
        if frame.geometry != model_geometry:
            raise GeometryError(f"frame geometry {frame.geometry} does not match model {model_geometry}")
        return frame.data
    data = np.asarray(frame, dtype=np.float64).reshape(-1)
    if data.size != model_geometry.dim:
        raise GeometryError(f"frame has {data.size} values, model expects {model_geometry.dim}")
    return data


def predict_next(model: KseModel, frame: Union[Frame, np.ndarray]) -> Frame:
    """One application of the transition function; output is not clamped."""
    x = as_frame_data(model.geometry, frame)
    out = model.step(x - model.temporal_mean) + model.temporal_mean
    return Frame(out, model.geometry)


def synthesize(model: KseModel, seed: Union[Frame, np.ndarray], count: int) -> FrameSequence:
    """Roll the transition function out from ``seed`` for ``count`` frames.

    Frame 1 is the seed itself. Full float precision is kept between steps.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    x = as_frame_data(model.geometry, seed)
    out = np.empty((count, model.dim))
    out[0] = x
    mean = model.temporal_mean
    for i in range(1, count):
        out[i] = model.step(out[i - 1] - mean) + mean
    return FrameSequence(out, model.geometry)


def save_model(model: KseModel, path) -> int:
    w = binio.Writer(MAGIC)
    g = model.geometry
    w.u32(g.width, g.height, g.channels, model.n_pairs, model.dim)
    w.f64(model.lam)
    w.f64(model.jitter_applied)
    w.text(model.kernel.to_text())
    w.array(model.temporal_mean)
    w.array(model.explanatory)
    w.array(model.coefficients)
    w.array(model.final_response)
    return w.write(path)


def load_model(path) -> KseModel:
    r = binio.Reader(path, MAGIC)
    width, height, channels, n_pairs, dim = r.u32(5)
    geometry = Geometry(width, height, channels)
    if geometry.dim != dim:
        raise ModelFormatError(f"dim {dim} does not match geometry {geometry}")
    lam = r.f64()
    jitter = r.f64()
    try:
        kernel = KernelSpec.parse(r.text())
    except ValueError as exc:
        raise ModelFormatError(f"bad kernel spec in model file: {exc}") from exc
    if not kernel.resolved:
        raise ModelFormatError("model file kernel spec has unresolved parameters")
    mean = r.array(dim)
    explanatory = r.array(n_pairs, dim)
    coefficients = r.array(n_pairs, dim)
    final_response = r.array(dim)
    r.finish()
    return KseModel(kernel, lam, explanatory, coefficients, mean, geometry, jitter, final_response)

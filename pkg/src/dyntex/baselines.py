"""Comparison models: random-feature ELM regressor and SVD-based LDS."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit

from dyntex import binio
from dyntex.errors import DataError, DegenerateSequenceError, ModelFormatError
from dyntex.frameio import Frame, FrameSequence, Geometry, center, make_training_pair
from dyntex.kse import as_frame_data
from dyntex.solver import pinv_solve, svd

ELM_MAGIC = b"ELM1"
LDS_MAGIC = b"LDS1"
DEFAULT_STATE_DIM = 30

ACTIVATIONS = {
    "sigmoid": expit,
    "tanh": np.tanh,
}


def _check_sequence(seq: FrameSequence):
    if len(seq) < 2:
        raise DataError("fewer than 2 frames")
    if np.all(seq.data == seq.data[0]):
        raise DegenerateSequenceError()


def _contiguous(model, *names):
    # same memory layout after training and after loading -> same BLAS rounding
    for name in names:
        object.__setattr__(model, name, np.ascontiguousarray(getattr(model, name), dtype=np.float64))


# --- extreme learning machine -------------------------------------------------


@dataclass(frozen=True, eq=False)
class ElmModel:
    input_weights: np.ndarray  # (T, D)
    biases: np.ndarray  # (T,)
    activation: str
    beta: np.ndarray  # (T, D)
    temporal_mean: np.ndarray
    geometry: Geometry
    rng_seed: int
    lam: float

    def __post_init__(self):
        _contiguous(self, "input_weights", "biases", "beta", "temporal_mean")

    @property
    def t_nodes(self) -> int:
        return self.input_weights.shape[0]

    def hidden(self, centered: np.ndarray) -> np.ndarray:
        return ACTIVATIONS[self.activation](centered @ self.input_weights.T + self.biases)

    def step(self, centered: np.ndarray) -> np.ndarray:
        return self.hidden(centered) @ self.beta


def elm_train(seq: FrameSequence, t_nodes: int, lam: float, rng_seed: int,
              activation: str = "sigmoid") -> ElmModel:
    """Fit ``beta`` by ridge least squares on random hidden features of the centered frames.

    Hidden weights and biases are drawn uniform on [-1, 1] from
    ``numpy.random.default_rng(rng_seed)``, weights first.
    """
    if t_nodes < 1:
        raise ValueError("t_nodes must be >= 1")
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    if rng_seed < 0:
        raise ValueError("rng_seed must be non-negative")
    _check_sequence(seq)
    pair = make_training_pair(center(seq))
    rng = np.random.default_rng(rng_seed)
    weights = rng.uniform(-1.0, 1.0, size=(t_nodes, seq.dim))
    biases = rng.uniform(-1.0, 1.0, size=t_nodes)
    model = ElmModel(weights, biases, activation, np.zeros((t_nodes, seq.dim)),
                     pair.temporal_mean, seq.geometry, int(rng_seed), float(lam))
    beta = pinv_solve(model.hidden(pair.explanatory), pair.response, lam)
    object.__setattr__(model, "beta", np.ascontiguousarray(beta))
    return model


def elm_residual(model: ElmModel, seq: FrameSequence) -> float:
    """Relative training residual ``||H beta - Y||_F / ||Y||_F`` on ``seq``."""
    pair = make_training_pair(center(seq))
    r = model.hidden(pair.explanatory) @ model.beta - pair.response
    return float(np.linalg.norm(r) / np.linalg.norm(pair.response))


def elm_predict(model: ElmModel, frame: Union[Frame, np.ndarray]) -> Frame:
    x = as_frame_data(model.geometry, frame)
    return Frame(model.step(x - model.temporal_mean) + model.temporal_mean, model.geometry)


def elm_synthesize(model: ElmModel, seed: Union[Frame, np.ndarray], count: int) -> FrameSequence:
    if count < 1:
        raise ValueError("count must be >= 1")
    x = as_frame_data(model.geometry, seed)
    out = np.empty((count, x.size))
    out[0] = x
    mean = model.temporal_mean
    for i in range(1, count):
        out[i] = model.step(out[i - 1] - mean) + mean
    return FrameSequence(out, model.geometry)


def save_elm(model: ElmModel, path) -> int:
    w = binio.Writer(ELM_MAGIC)
    g = model.geometry
    w.u32(g.width, g.height, g.channels, model.t_nodes, g.dim)
    w.text(model.activation)
    w.f64(model.lam)
    w.u64(model.rng_seed)
    w.array(model.input_weights)
    w.array(model.biases)
    w.array(model.beta)
    w.array(model.temporal_mean)
    return w.write(path)


def load_elm(path) -> ElmModel:
    r = binio.Reader(path, ELM_MAGIC)
    width, height, channels, t_nodes, dim = r.u32(5)
    geometry = Geometry(width, height, channels)
    if geometry.dim != dim:
        raise ModelFormatError(f"dim {dim} does not match geometry {geometry}")
    activation = r.text()
    if activation not in ACTIVATIONS:
        raise ModelFormatError(f"unknown activation {activation!r} in model file")
    lam = r.f64()
    seed = r.u64()
    weights = r.array(t_nodes, dim)
    biases = r.array(t_nodes)
    beta = r.array(t_nodes, dim)
    mean = r.array(dim)
    r.finish()
    return ElmModel(weights, biases, activation, beta, mean, geometry, seed, lam)


# --- linear dynamical system --------------------------------------------------


@dataclass(frozen=True, eq=False)
class LdsModel:
    c_map: np.ndarray  # (D, n), orthonormal columns
    a_dyn: np.ndarray  # (n, n)
    x0: np.ndarray  # (n,)
    temporal_mean: np.ndarray
    geometry: Geometry

    def __post_init__(self):
        _contiguous(self, "c_map", "a_dyn", "x0", "temporal_mean")

    @property
    def state_dim(self) -> int:
        return self.c_map.shape[1]

    def states(self, seq: FrameSequence) -> np.ndarray:
        """Project frames onto the observation basis; one state per column."""
        return self.c_map.T @ (seq.data - self.temporal_mean).T

    def reconstruct(self, states: np.ndarray) -> FrameSequence:
        return FrameSequence((self.c_map @ states).T + self.temporal_mean, self.geometry)


def lds_train(seq: FrameSequence, state_dim: int = DEFAULT_STATE_DIM) -> LdsModel:
    """Fit ``C`` from the leading left singular vectors and ``A`` by least squares.

    Frames are centered and stacked as columns of a D-by-N matrix. States are
    ``C^T (frame - mean)``; ``A`` minimizes ``||[x_2..x_N] - A [x_1..x_{N-1}]||_F``.
    The solve is exact (no ridge) when the state matrix has full row rank and
    uses ridge 1e-12 otherwise.
    """
    n_frames = len(seq)
    limit = min(n_frames - 1, seq.dim)
    if not 1 <= state_dim <= limit:
        raise ValueError(f"state_dim n out of range: {state_dim} not in 1..{limit}")
    _check_sequence(seq)
    cs = center(seq)
    u, _, _ = svd(cs.centered.T)
    c_map = np.ascontiguousarray(u[:, :state_dim])
    states = c_map.T @ cs.centered.T
    x1, x2 = states[:, :-1], states[:, 1:]
    s = np.linalg.svd(x1, compute_uv=False)
    full_rank = s.size == state_dim and s[-1] > s[0] * max(x1.shape) * np.finfo(float).eps
    a_t = pinv_solve(x1.T, x2.T, 0.0 if full_rank else 1e-12)
    return LdsModel(c_map, np.ascontiguousarray(a_t.T), states[:, 0].copy(), cs.temporal_mean, seq.geometry)


def lds_synthesize(model: LdsModel, count: int) -> FrameSequence:
    """Deterministic rollout ``x_{l+1} = A x_l`` observed through ``C``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    states = np.empty((model.state_dim, count))
    states[:, 0] = model.x0
    for i in range(1, count):
        states[:, i] = model.a_dyn @ states[:, i - 1]
    return model.reconstruct(states)


def save_lds(model: LdsModel, path) -> int:
    w = binio.Writer(LDS_MAGIC)
    g = model.geometry
    w.u32(g.width, g.height, g.channels, g.dim, model.state_dim)
    w.array(model.temporal_mean)
    w.array(model.c_map)
    w.array(model.a_dyn)
    w.array(model.x0)
    return w.write(path)


def load_lds(path) -> LdsModel:
    r = binio.Reader(path, LDS_MAGIC)
    width, height, channels, dim, n = r.u32(5)
    geometry = Geometry(width, height, channels)
    if geometry.dim != dim:
        raise ModelFormatError(f"dim {dim} does not match geometry {geometry}")
    mean = r.array(dim)
    c_map = r.array(dim, n)
    a_dyn = r.array(n, n)
    x0 = r.array(n)
    r.finish()
    return LdsModel(c_map, a_dyn, x0, mean, geometry)

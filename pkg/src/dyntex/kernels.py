"""Kernel families, scalar kernel values and Gram (kernel similarity) matrices.

The Gaussian bandwidth is a divisor: ``K(u, v) = exp(-||u - v||^2 / gamma)``.
Text form of a spec, shared by the CLI and model files::

    gaussian:gamma=1e8
    gaussian:gamma=auto
    linear
    polynomial:a=0.001,c=1,d=2
    rational_quadratic:c=1
    multiquadric:c=1
    sigmoid:a=0.001,c=0
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from dyntex.errors import DegenerateSequenceError

FAMILIES = ("gaussian", "linear", "polynomial", "rational_quadratic", "multiquadric", "sigmoid")

# parameter names accepted per family; None in a value means "resolve from data"
_PARAMS = {
    "gaussian": ("gamma",),
    "linear": (),
    "polynomial": ("a", "c", "d"),
    "rational_quadratic": ("c",),
    "multiquadric": ("c",),
    "sigmoid": ("a", "c"),
}
_DISTANCE_FAMILIES = ("gaussian", "rational_quadratic", "multiquadric")


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family plus its parameters.

    ``gamma=None`` (Gaussian) and ``a=None`` (polynomial, sigmoid) are
    placeholders filled in by :meth:`resolve`: the median pairwise squared
    distance and ``1/D`` respectively.
    """

    family: str = "gaussian"
    gamma: Optional[float] = None
    a: Optional[float] = None
    c: float = 1.0
    d: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; choose from {', '.join(FAMILIES)}")
        for name in ("gamma", "a", "c"):
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                raise ValueError(f"kernel parameter {name} must be finite")
        if self.family == "gaussian" and self.gamma is not None and self.gamma <= 0:
            raise ValueError("gaussian bandwidth gamma must be > 0")
        if self.family in ("rational_quadratic", "multiquadric") and self.c <= 0:
            raise ValueError(f"{self.family} offset c must be > 0")
        if self.family == "polynomial" and (int(self.d) != self.d or self.d < 1):
            raise ValueError("polynomial degree d must be an integer >= 1")

    @property
    def resolved(self) -> bool:
        if self.family == "gaussian":
            return self.gamma is not None
        if self.family in ("polynomial", "sigmoid"):
            return self.a is not None
        return True

    def resolve(self, rows: np.ndarray) -> "KernelSpec":
        """Fill data-dependent defaults from the training rows."""
        if self.resolved:
            return self
        rows = np.atleast_2d(rows)
        if self.family == "gaussian":
            return replace(self, gamma=median_bandwidth(rows))
        return replace(self, a=1.0 / rows.shape[1])

    def to_text(self) -> str:
        names = _PARAMS[self.family]
        if not names:
            return self.family
        parts = []
        for name in names:
            value = getattr(self, name)
            if value is None:
                parts.append(f"{name}=auto")
            elif name == "d":
                parts.append(f"d={int(value)}")
            else:
                parts.append(f"{name}={float(value)!r}")
        return f"{self.family}:" + ",".join(parts)

    __str__ = to_text

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        family, _, rest = text.strip().partition(":")
        family = family.strip().lower()
        if family not in FAMILIES:
            raise ValueError(f"unknown kernel family {family!r}; choose from {', '.join(FAMILIES)}")
        kwargs = {}
        for item in filter(None, (p.strip() for p in rest.split(","))):
            key, sep, value = item.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in _PARAMS[family]:
                raise ValueError(f"bad parameter {item!r} for kernel {family}")
            if value.lower() == "auto":
                if key not in ("gamma", "a"):
                    raise ValueError(f"parameter {key} does not accept 'auto'")
                kwargs[key] = None
            elif key == "d":
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(family=family, **kwargs)


def _check_resolved(spec: KernelSpec):
    if not spec.resolved:
        raise ValueError(f"kernel {spec} has unresolved parameters; call resolve() first")


def _apply(spec: KernelSpec, sq_dist: Optional[np.ndarray], dot: Optional[np.ndarray]) -> np.ndarray:
    f = spec.family
    if f == "gaussian":
        return np.exp(-sq_dist / spec.gamma)
    if f == "rational_quadratic":
        return 1.0 - sq_dist / (sq_dist + spec.c)
    if f == "multiquadric":
        return np.sqrt(sq_dist + spec.c * spec.c)
    if f == "linear":
        return dot
    if f == "polynomial":
        return (spec.a * dot + spec.c) ** int(spec.d)
    return np.tanh(spec.a * dot + spec.c)


def _as_finite(x, name) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def kernel_value(u, v, spec: KernelSpec) -> float:
    _check_resolved(spec)
    u = _as_finite(u, "u").reshape(-1)
    v = _as_finite(v, "v").reshape(-1)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.size} vs {v.size}")
    if spec.family in _DISTANCE_FAMILIES:
        diff = u - v
        return float(_apply(spec, np.float64(diff @ diff), None))
    return float(_apply(spec, None, np.float64(u @ v)))


def pairwise_sq_dists(rows: np.ndarray) -> np.ndarray:
    """Symmetric matrix of squared distances with an exactly zero diagonal."""
    sq_norms = np.einsum("ij,ij->i", rows, rows)
    gram = rows @ rows.T
    dist = sq_norms[:, None] + sq_norms[None, :] - 2.0 * gram
    np.maximum(dist, 0.0, out=dist)
    np.fill_diagonal(dist, 0.0)
    return _mirror_upper(dist)


def _mirror_upper(m: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(m.shape[0], 1)
    m[(iu[1], iu[0])] = m[iu]
    return m


def gram_matrix(rows, spec: KernelSpec) -> np.ndarray:
    """Dense n-by-n kernel similarity matrix of the rows.

    The upper triangle is computed and mirrored, so the result is exactly
    symmetric; for the Gaussian family the diagonal is exactly 1.
    """
    _check_resolved(spec)
    rows = np.atleast_2d(_as_finite(rows, "rows"))
    if rows.shape[0] < 1:
        raise ValueError("gram_matrix needs at least one row")
    if spec.family in _DISTANCE_FAMILIES:
        values = _apply(spec, pairwise_sq_dists(rows), None)
    else:
        values = _apply(spec, None, _mirror_upper(rows @ rows.T))
    return _mirror_upper(np.ascontiguousarray(values))


class KernelRows:
    """Training rows with cached squared norms, for repeated kernel_vector calls."""

    def __init__(self, rows: np.ndarray, spec: KernelSpec):
        _check_resolved(spec)
        self.rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        self.spec = spec
        self.sq_norms = np.einsum("ij,ij->i", self.rows, self.rows)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        dot = self.rows @ x
        if self.spec.family in _DISTANCE_FAMILIES:
            dist = self.sq_norms + (x @ x) - 2.0 * dot
            np.maximum(dist, 0.0, out=dist)
            return _apply(self.spec, dist, None)
        return _apply(self.spec, None, dot)


def kernel_vector(x, rows, spec: KernelSpec) -> np.ndarray:
    """Entries ``K(x, row_i)`` for every row."""
    x = _as_finite(x, "x").reshape(-1)
    rows = np.atleast_2d(_as_finite(rows, "rows"))
    if rows.shape[1] != x.size:
        raise ValueError(f"dimension mismatch: x has {x.size} values, rows have {rows.shape[1]}")
    return KernelRows(rows, spec)(x)


def median_bandwidth(rows) -> float:
    """Median of the pairwise squared distances over all pairs i < j."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    n = rows.shape[0]
    if n < 2:
        raise ValueError("median bandwidth needs at least 2 rows")
    dist = pairwise_sq_dists(rows)
    med = float(np.median(dist[np.triu_indices(n, 1)]))
    if med <= 0.0:
        raise DegenerateSequenceError()
    return med

"""Frame sequences: loading, centering, training pairs and image output.

Frames are stored as flat row-major float64 vectors (height, width, channels)
with intensities on the 0..255 scale. Color frames interleave channels.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from dyntex.errors import DataError, GeometryError

IMAGE_SUFFIXES = (".png", ".pgm", ".ppm", ".pnm", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")
REC601 = np.array([0.299, 0.587, 0.114])


class Geometry(NamedTuple):
    width: int
    height: int
    channels: int

    @property
    def dim(self) -> int:
        return self.width * self.height * self.channels

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.height, self.width, self.channels)

    def __str__(self):
        return f"{self.width}x{self.height}x{self.channels}"


@dataclass(frozen=True, eq=False)
class Frame:
    data: np.ndarray
    geometry: Geometry

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64).reshape(-1)
        if data.size != self.geometry.dim:
            raise GeometryError(
                f"frame data has {data.size} values, geometry {self.geometry} needs {self.geometry.dim}"
            )
        object.__setattr__(self, "data", data)

    def image(self) -> np.ndarray:
        """Return the frame as a (height, width, channels) array."""
        return self.data.reshape(self.geometry.shape)


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Ordered frames sharing one geometry, stored as an (N, D) matrix."""

    data: np.ndarray
    geometry: Geometry

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data.reshape(1, -1)
        if data.ndim != 2 or data.shape[1] != self.geometry.dim:
            raise GeometryError(
                f"sequence data of shape {data.shape} does not match geometry {self.geometry}"
            )
        object.__setattr__(self, "data", data)

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, index) -> Frame:
        return Frame(self.data[index], self.geometry)

    def __iter__(self):
        for row in self.data:
            yield Frame(row, self.geometry)

    @property
    def dim(self) -> int:
        return self.geometry.dim

    @classmethod
    def from_frames(cls, frames: Sequence[Frame]) -> "FrameSequence":
        if not frames:
            raise DataError("empty frame list")
        geometry = frames[0].geometry
        for f in frames[1:]:
            if f.geometry != geometry:
                raise GeometryError(f"mixed geometries {geometry} and {f.geometry}")
        return cls(np.stack([f.data for f in frames]), geometry)

    def head(self, n: int) -> "FrameSequence":
        return FrameSequence(self.data[:n], self.geometry)


@dataclass(frozen=True, eq=False)
class CenteredSequence:
    centered: np.ndarray  # (N, D), values may be negative
    temporal_mean: np.ndarray  # (D,)
    geometry: Geometry

    def __len__(self):
        return self.centered.shape[0]


@dataclass(frozen=True, eq=False)
class TrainingPair:
    explanatory: np.ndarray  # centered frames 1..N-1
    response: np.ndarray  # centered frames 2..N
    temporal_mean: np.ndarray
    geometry: Geometry

    @property
    def dim_d(self) -> int:
        return self.explanatory.shape[1]


def center(seq: FrameSequence) -> CenteredSequence:
    if len(seq) < 2:
        raise DataError("fewer than 2 frames")
    mean = seq.data.mean(axis=0)
    return CenteredSequence(seq.data - mean, mean, seq.geometry)


def make_training_pair(cs: CenteredSequence) -> TrainingPair:
    if len(cs) < 2:
        raise DataError("fewer than 2 frames")
    return TrainingPair(
        explanatory=cs.centered[:-1].copy(),
        response=cs.centered[1:].copy(),
        temporal_mean=cs.temporal_mean,
        geometry=cs.geometry,
    )


def parse_size(text: str) -> Tuple[int, int]:
    """Parse ``"WxH"`` into ``(width, height)``."""
    try:
        w, h = text.lower().split("x")
        size = (int(w), int(h))
    except ValueError:
        raise ValueError(f"bad size {text!r}, expected WxH") from None
    if size[0] < 1 or size[1] < 1:
        raise ValueError(f"bad size {text!r}, dimensions must be positive")
    return size


def _to_array(img: Image.Image, grayscale: bool) -> np.ndarray:
    if img.mode in ("1", "L", "I", "I;16", "I;16B", "I;16L", "F"):
        arr = np.asarray(img, dtype=np.float64)
        if img.mode.startswith("I;16") or img.mode == "I":
            # 16-bit samples are rescaled onto the 8-bit intensity range
            arr = arr * (255.0 / 65535.0)
        elif img.mode == "1":
            arr = arr * 255.0
        arr = arr[:, :, None]
    else:
        arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    if grayscale and arr.shape[2] == 3:
        arr = (arr @ REC601)[:, :, None]
    return arr


def _match_channels(arr: np.ndarray, channels: int) -> np.ndarray:
    if arr.shape[2] == channels:
        return arr
    if channels == 1:
        return (arr @ REC601)[:, :, None]
    return np.repeat(arr, 3, axis=2)


def _resize(arr: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    w, h = size
    if arr.shape[1] == w and arr.shape[0] == h:
        return arr
    planes = []
    for c in range(arr.shape[2]):
        im = Image.fromarray(arr[:, :, c].astype(np.float32))
        planes.append(np.asarray(im.resize((w, h), Image.BILINEAR), dtype=np.float64))
    return np.clip(np.stack(planes, axis=2), 0.0, 255.0)


def read_image(path, grayscale: bool = False, resize: Optional[Tuple[int, int]] = None,
               channels: Optional[int] = None) -> np.ndarray:
    """Decode one image file into an (H, W, C) float64 array."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            arr = _to_array(img, grayscale)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DataError(f"cannot decode image {path.name}: {exc}") from exc
    if channels is not None:
        arr = _match_channels(arr, channels)
    if resize is not None:
        arr = _resize(arr, resize)
    return arr


def load_frame(path, geometry: Geometry) -> Frame:
    """Load a single image coerced to ``geometry`` (channel conversion and resize)."""
    arr = read_image(path, resize=(geometry.width, geometry.height), channels=geometry.channels)
    return Frame(arr.reshape(-1), geometry)


def list_frame_files(directory) -> list:
    directory = Path(directory)
    try:
        names = sorted(os.listdir(directory))
    except OSError as exc:
        raise DataError(f"cannot read directory {directory}: {exc}") from exc
    return [directory / n for n in names if n.lower().endswith(IMAGE_SUFFIXES)]


def load_sequence(directory, grayscale: bool = False, resize: Optional[Tuple[int, int]] = None,
                  max_frames: Optional[int] = None) -> FrameSequence:
    """Load the image files of ``directory`` in lexicographic filename order.

    Parameters
    ----------
    directory : path
        Directory holding PNG/PGM/JPEG frames.
    grayscale : bool
        Convert color frames with Rec. 601 luma.
    resize : (width, height), optional
        Bilinear resize target.
    max_frames : int, optional
        Keep only the first ``max_frames`` files.
    """
    files = list_frame_files(directory)
    if max_frames is not None:
        files = files[:max_frames]
    if len(files) < 2:
        raise DataError(f"fewer than 2 frames in {directory}")
    arrays = []
    channels = None
    for f in files:
        arr = read_image(f, grayscale=grayscale, resize=resize, channels=channels)
        if channels is None:
            channels = arr.shape[2]
        elif arr.shape != arrays[0].shape:
            raise GeometryError(
                f"{f.name} has size {arr.shape[1]}x{arr.shape[0]}, expected "
                f"{arrays[0].shape[1]}x{arrays[0].shape[0]}; pass a resize"
            )
        arrays.append(arr)
    h, w, c = arrays[0].shape
    return FrameSequence(np.stack([a.reshape(-1) for a in arrays]), Geometry(w, h, c))


def to_uint8(data: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(data, 0.0, 255.0)).astype(np.uint8)


def save_sequence(seq: FrameSequence, directory, fmt: str = "png") -> int:
    """Write frames as ``frame_000001.<fmt>`` onwards; returns the number written.

    Values are clamped to [0, 255] and rounded to the nearest integer.
    """
    fmt = fmt.lower()
    if fmt not in ("png", "pgm"):
        raise ValueError(f"unsupported format {fmt!r}")
    if fmt == "pgm" and seq.geometry.channels != 1:
        raise DataError("pgm output needs single-channel frames; use png for color")
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(seq, start=1):
            pixels = to_uint8(frame.image())
            img = Image.fromarray(pixels[:, :, 0] if seq.geometry.channels == 1 else pixels)
            img.save(directory / f"frame_{i:06d}.{fmt}", format="PNG" if fmt == "png" else "PPM")
    except OSError as exc:
        raise DataError(f"cannot write frames to {directory}: {exc}") from exc
    return len(seq)

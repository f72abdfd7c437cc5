"""PSNR and SSIM between an observed and a generated frame sequence.

Both sequence scores average per-frame values over frames
``start_index..min(len(observed), len(generated))`` (1-based, default 2).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from dyntex.errors import DataError, GeometryError
from dyntex.frameio import Frame, FrameSequence


@dataclass(frozen=True)
class PsnrConfig:
    peak: float = 255.0
    cap_db: float = 100.0
    start_index: int = 2

    def __post_init__(self):
        if self.peak <= 0 or self.cap_db <= 0:
            raise ValueError("peak and cap_db must be positive")
        if self.start_index < 1:
            raise ValueError("start_index is 1-based and must be >= 1")


@dataclass(frozen=True)
class SsimConfig:
    c1: float = (0.01 * 255) ** 2
    c2: float = (0.03 * 255) ** 2
    window: int = 11
    window_sigma: float = 1.5
    start_index: int = 2

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.start_index < 1:
            raise ValueError("start_index is 1-based and must be >= 1")


@dataclass
class MetricReport:
    per_frame_psnr: np.ndarray
    per_frame_ssim: np.ndarray
    start_index: int = 2
    mean_psnr: float = field(init=False)
    mean_ssim: float = field(init=False)

    def __post_init__(self):
        self.mean_psnr = float(np.mean(self.per_frame_psnr))
        self.mean_ssim = float(np.mean(self.per_frame_ssim))

    @property
    def frames_compared(self) -> int:
        return len(self.per_frame_psnr)

    @property
    def frame_indices(self) -> range:
        return range(self.start_index, self.start_index + self.frames_compared)

    def to_dict(self) -> dict:
        return {
            "frames_compared": self.frames_compared,
            "start_index": self.start_index,
            "mean_psnr": self.mean_psnr,
            "mean_ssim": self.mean_ssim,
            "per_frame_psnr": [float(v) for v in self.per_frame_psnr],
            "per_frame_ssim": [float(v) for v in self.per_frame_ssim],
        }


def _compared(observed: FrameSequence, generated: FrameSequence, start_index: int):
    if observed.geometry != generated.geometry:
        raise GeometryError(f"geometry mismatch: observed {observed.geometry}, generated {generated.geometry}")
    stop = min(len(observed), len(generated))
    if stop < start_index:
        raise DataError(
            f"empty comparison range: frames {start_index}..{stop} "
            f"(observed {len(observed)}, generated {len(generated)})"
        )
    return observed.data[start_index - 1:stop], generated.data[start_index - 1:stop]


def psnr_values(a: np.ndarray, b: np.ndarray, cfg: PsnrConfig = PsnrConfig()) -> np.ndarray:
    """Row-wise PSNR between two (n, D) arrays, capped at ``cfg.cap_db``.

    Zero-MSE rows score the cap instead of infinity.
    """
    mse = np.mean((np.atleast_2d(a) - np.atleast_2d(b)) ** 2, axis=1)
    out = np.full(mse.shape, float(cfg.cap_db))
    nz = mse > 0
    out[nz] = np.minimum(10.0 * np.log10(cfg.peak ** 2 / mse[nz]), cfg.cap_db)
    return out


def psnr_sequence(observed: FrameSequence, generated: FrameSequence, cfg: PsnrConfig = PsnrConfig()):
    """Return ``(per_frame, mean)`` PSNR in dB."""
    obs, gen = _compared(observed, generated, cfg.start_index)
    per_frame = psnr_values(obs, gen, cfg)
    return per_frame, float(per_frame.mean())


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps; the 2-D window is their outer product."""
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    k = taps.size
    rows = sliding_window_view(img, k, axis=1) @ taps
    return sliding_window_view(rows, k, axis=0) @ taps


def ssim_plane(x: np.ndarray, y: np.ndarray, cfg: SsimConfig = SsimConfig()) -> float:
    """Mean windowed SSIM of two single-channel images, valid window positions only.

    A window larger than the image shrinks to the largest odd size that fits.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 2:
        raise GeometryError(f"ssim needs two equal 2-D planes, got {x.shape} and {y.shape}")
    size = min(cfg.window, min(x.shape))
    if size % 2 == 0:
        size -= 1
    taps = gaussian_window(size, cfg.window_sigma)
    mu_x = _filter_valid(x, taps)
    mu_y = _filter_valid(y, taps)
    xx = _filter_valid(x * x, taps) - mu_x * mu_x
    yy = _filter_valid(y * y, taps) - mu_y * mu_y
    xy = _filter_valid(x * y, taps) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + cfg.c1) * (2.0 * xy + cfg.c2)
    den = (mu_x * mu_x + mu_y * mu_y + cfg.c1) * (xx + yy + cfg.c2)
    return float(np.mean(num / den))


def ssim_frame(x: Frame, y: Frame, cfg: SsimConfig = SsimConfig()) -> float:
    """SSIM of two frames; color frames average the per-channel values."""
    if x.geometry != y.geometry:
        raise GeometryError(f"geometry mismatch: {x.geometry} vs {y.geometry}")
    xi, yi = x.image(), y.image()
    return float(np.mean([ssim_plane(xi[:, :, c], yi[:, :, c], cfg) for c in range(x.geometry.channels)]))


def ssim_sequence(observed: FrameSequence, generated: FrameSequence, cfg: SsimConfig = SsimConfig()):
    """Return ``(per_frame, mean)`` SSIM."""
    obs, gen = _compared(observed, generated, cfg.start_index)
    g = observed.geometry
    per_frame = np.array([ssim_frame(Frame(a, g), Frame(b, g), cfg) for a, b in zip(obs, gen)])
    return per_frame, float(per_frame.mean())


def evaluate(observed: FrameSequence, generated: FrameSequence,
             psnr_cfg: Optional[PsnrConfig] = None, ssim_cfg: Optional[SsimConfig] = None) -> MetricReport:
    psnr_cfg = psnr_cfg or PsnrConfig()
    ssim_cfg = ssim_cfg or SsimConfig(start_index=psnr_cfg.start_index)
    if ssim_cfg.start_index != psnr_cfg.start_index:
        raise ValueError("psnr and ssim configs must share start_index")
    psnr, _ = psnr_sequence(observed, generated, psnr_cfg)
    ssim, _ = ssim_sequence(observed, generated, ssim_cfg)
    return MetricReport(psnr, ssim, psnr_cfg.start_index)


def write_csv(report: MetricReport, path) -> int:
    """Write ``frame,psnr_db,ssim`` rows plus a final ``mean`` row; returns row count."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "psnr_db", "ssim"])
        for idx, p, s in zip(report.frame_indices, report.per_frame_psnr, report.per_frame_ssim):
            w.writerow([idx, f"{p:.6f}", f"{s:.6f}"])
        w.writerow(["mean", f"{report.mean_psnr:.6f}", f"{report.mean_ssim:.6f}"])
    return report.frames_compared + 1

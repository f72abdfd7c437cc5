"""Experiment procedures: grid search, long rollouts, transfer, timing, Gram heatmaps.

Also provides the synthetic textures used as exact ground truth. Synthetic
frames depend on the time index only through ``t mod period``, so a
noiseless sequence repeats bit-exactly and its continuation is known for
any horizon.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from PIL import Image

from dyntex import kse
from dyntex.errors import DataError, DyntexError
from dyntex.frameio import Frame, FrameSequence, Geometry, center, make_training_pair
from dyntex.kernels import KernelSpec, gram_matrix, median_bandwidth
from dyntex.metrics import MetricReport, PsnrConfig, SsimConfig, evaluate, ssim_frame

PATTERNS = ("translating_sine", "rotating_phase", "saturated_sine")
SATURATION_GAIN = 20.0


# --- synthetic textures -------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    pattern: str = "translating_sine"
    width: int = 64
    height: int = 48
    period: int = 20
    frames: int = 60
    noise_amp: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}; choose from {', '.join(PATTERNS)}")
        if self.period < 2:
            raise ValueError("period must be >= 2")
        if self.frames < self.period:
            raise ValueError("frames must be >= period")
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be positive")
        if self.noise_amp < 0:
            raise ValueError("noise_amp must be >= 0")

    @property
    def geometry(self) -> Geometry:
        return Geometry(self.width, self.height, 1)


def _pattern_frame(spec: SyntheticSpec, t: int) -> np.ndarray:
    y, x = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
    shift = 2.0 * np.pi * (t % spec.period) / spec.period
    if spec.pattern == "rotating_phase":
        cy, cx = (spec.height - 1) / 2.0, (spec.width - 1) / 2.0
        theta = np.arctan2(y - cy, x - cx)
        r = np.hypot(y - cy, x - cx)
        img = 127.5 + 100.0 * np.sin(3.0 * theta + 2.0 * np.pi * r / 16.0 - shift)
    else:
        phase = 2.0 * np.pi * (2.0 * x / spec.width + y / spec.height) - shift
        if spec.pattern == "translating_sine":
            img = 127.5 + 100.0 * np.sin(phase)
        else:
            img = 127.5 + 127.5 * np.tanh(SATURATION_GAIN * np.sin(phase))
    return img.reshape(-1)


def synthetic_truth(spec: SyntheticSpec, start: int, count: int) -> FrameSequence:
    """Noiseless frames ``start .. start+count-1`` (0-based time index)."""
    rows = [_pattern_frame(spec, t) for t in range(start, start + count)]
    return FrameSequence(np.array(rows), spec.geometry)


def make_synthetic(spec: SyntheticSpec) -> FrameSequence:
    seq = synthetic_truth(spec, 0, spec.frames)
    if spec.noise_amp == 0:
        return seq
    rng = np.random.default_rng(spec.rng_seed)
    noisy = seq.data + rng.normal(0.0, spec.noise_amp, size=seq.data.shape)
    return FrameSequence(np.clip(noisy, 0.0, 255.0), spec.geometry)


# --- grid search --------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Ridge factors and Gaussian bandwidths to sweep; a ``None`` bandwidth means auto."""

    lambdas: Sequence[float]
    gammas: Sequence[Optional[float]]

    def __post_init__(self):
        if not self.lambdas or not self.gammas:
            raise ValueError("grid needs at least one lambda and one gamma")
        if any(not l > 0 for l in self.lambdas):
            raise ValueError("grid lambdas must be positive")
        if any(g is not None and not g > 0 for g in self.gammas):
            raise ValueError("grid gammas must be positive")


@dataclass(frozen=True)
class GridEntry:
    lam: float
    gamma: float
    mean_psnr: float
    mean_ssim: float
    train_seconds: float

    def scores(self):
        return (self.lam, self.gamma, self.mean_psnr, self.mean_ssim)


@dataclass
class GridResult:
    entries: List[GridEntry]
    best_by_ssim: tuple = field(init=False)
    best_by_psnr: tuple = field(init=False)

    def __post_init__(self):
        self.best_by_ssim = _argmax(self.entries, "mean_ssim")
        self.best_by_psnr = _argmax(self.entries, "mean_psnr")

    def to_dict(self) -> dict:
        return {
            "entries": [asdict(e) for e in self.entries],
            "best_by_ssim": list(self.best_by_ssim),
            "best_by_psnr": list(self.best_by_psnr),
        }


def _argmax(entries: Sequence[GridEntry], key: str) -> tuple:
    # ties go to the smallest lambda, then the smallest gamma
    best = min(entries, key=lambda e: (-getattr(e, key), e.lam, e.gamma))
    return (best.lam, best.gamma)


def run_grid(seq: FrameSequence, grid: GridSpec, train_frames: int, eval_frames: int,
             psnr_cfg: Optional[PsnrConfig] = None, ssim_cfg: Optional[SsimConfig] = None,
             progress=None) -> GridResult:
    """Score every (lambda, gamma) pair with a Gaussian kernel, lambda-major.

    Each cell trains on the first ``train_frames`` frames, rolls out
    ``train_frames + eval_frames`` frames from training frame 1 and scores
    them against the observed frames from index 2.
    """
    total = train_frames + eval_frames
    if train_frames < 2 or eval_frames < 0 or total > len(seq):
        raise DataError(f"insufficient frames: need {total} (train {train_frames} + eval {eval_frames}), have {len(seq)}")
    train_seq = seq.head(train_frames)
    observed = seq.head(total)
    auto_gamma = None
    if any(g is None for g in grid.gammas):
        auto_gamma = median_bandwidth(center(train_seq).centered)
    gammas = [auto_gamma if g is None else float(g) for g in grid.gammas]
    entries = []
    for lam in grid.lambdas:
        for gamma in gammas:
            t0 = time.perf_counter()
            model = kse.train(train_seq, KernelSpec("gaussian", gamma=gamma), lam)
            elapsed = time.perf_counter() - t0
            gen = kse.synthesize(model, train_seq[0], total)
            report = evaluate(observed, gen, psnr_cfg, ssim_cfg)
            entries.append(GridEntry(float(lam), gamma, report.mean_psnr, report.mean_ssim, elapsed))
            if progress:
                progress(entries[-1])
    return GridResult(entries)


def write_grid_csv(result: GridResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "gamma", "mean_psnr", "mean_ssim", "train_seconds"])
        for e in result.entries:
            w.writerow([repr(e.lam), repr(e.gamma), f"{e.mean_psnr:.6f}", f"{e.mean_ssim:.6f}",
                        f"{e.train_seconds:.6f}"])


# --- sustainability -----------------------------------------------------------


@dataclass
class SustainabilityResult:
    report: MetricReport
    checkpoints: List[tuple]  # (frame index, SSIM or None when unobserved)
    frames: FrameSequence

    def checkpoint_ssims(self) -> List[float]:
        return [s for _, s in self.checkpoints if s is not None]

    def to_dict(self) -> dict:
        return {"metrics": self.report.to_dict(),
                "checkpoints": [{"frame": i, "ssim": s} for i, s in self.checkpoints]}


def run_sustainability(seq: FrameSequence, kernel: KernelSpec, lam: float, train_frames: int,
                       horizon: int, checkpoint_every: int = 100,
                       ssim_cfg: Optional[SsimConfig] = None) -> SustainabilityResult:
    """Train on the head of ``seq``, roll out ``horizon`` frames from frame 1.

    Metrics use every observed frame of ``seq`` up to the horizon; checkpoints
    past the observed length carry no score.
    """
    if train_frames < 2 or train_frames > len(seq):
        raise DataError(f"insufficient frames: train_frames {train_frames}, sequence has {len(seq)}")
    if horizon < train_frames:
        raise ValueError("horizon must be >= train_frames")
    ssim_cfg = ssim_cfg or SsimConfig()
    model = kse.train(seq.head(train_frames), kernel, lam)
    gen = kse.synthesize(model, seq[0], horizon)
    report = evaluate(seq, gen, ssim_cfg=ssim_cfg)
    checkpoints = []
    for idx in range(checkpoint_every, horizon + 1, checkpoint_every):
        score = ssim_frame(seq[idx - 1], gen[idx - 1], ssim_cfg) if idx <= len(seq) else None
        checkpoints.append((idx, score))
    return SustainabilityResult(report, checkpoints, gen)


# --- transfer -----------------------------------------------------------------


@dataclass
class TransferCell:
    model_index: int
    seed_index: int
    report: Optional[MetricReport] = None
    frames: Optional[FrameSequence] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def run_transfer(models: Sequence[kse.KseModel], seeds: Sequence[Union[Frame, FrameSequence]],
                 count: int) -> List[List[TransferCell]]:
    """Synthesize ``count`` frames for every (model, seed) pair.

    A seed given as a sequence contributes its first frame as the seed and
    the remainder as the observed continuation to score against. A cell that
    fails is marked with its error and the run continues.
    """
    grid = []
    for i, model in enumerate(models):
        row = []
        for j, seed in enumerate(seeds):
            cell = TransferCell(i, j)
            try:
                first = seed[0] if isinstance(seed, FrameSequence) else seed
                cell.frames = kse.synthesize(model, first, count)
                if isinstance(seed, FrameSequence) and min(len(seed), count) >= 2:
                    cell.report = evaluate(seed, cell.frames)
            except (DyntexError, ValueError) as exc:
                cell.error = str(exc)
                cell.frames = None
            row.append(cell)
        grid.append(row)
    return grid


# --- timing -------------------------------------------------------------------


@dataclass
class BenchResult:
    train_seconds: float
    synth_seconds: float
    gen_frames: int
    fps: float
    fps_defined: bool


def run_bench(seq: FrameSequence, kernel: KernelSpec, lam: float, gen_frames: int) -> BenchResult:
    """Wall-clock training time and rollout throughput for ``gen_frames`` new frames."""
    if gen_frames < 0:
        raise ValueError("gen_frames must be >= 0")
    t0 = time.perf_counter()
    model = kse.train(seq, kernel, lam)
    train_seconds = time.perf_counter() - t0
    if gen_frames == 0:
        return BenchResult(train_seconds, 0.0, 0, 0.0, False)
    t0 = time.perf_counter()
    kse.synthesize(model, seq[0], gen_frames + 1)
    synth_seconds = time.perf_counter() - t0
    return BenchResult(train_seconds, synth_seconds, gen_frames, gen_frames / synth_seconds, True)


# --- Gram heatmap -------------------------------------------------------------


def training_gram(seq: FrameSequence, kernel: KernelSpec):
    """Gram matrix over the explanatory frames, with the resolved kernel."""
    cs = center(seq)
    spec = kernel.resolve(cs.centered)
    return gram_matrix(make_training_pair(cs).explanatory, spec), spec


def dominant_period(row: np.ndarray) -> int:
    """Lag in ``1..len(row)//2`` maximizing the mean-normalized autocorrelation.

    Near-ties (within 1e-9 relative) resolve to the smallest lag.
    """
    r = np.asarray(row, dtype=np.float64) - np.mean(row)
    n = r.size
    if n < 4:
        raise ValueError("need at least 4 samples to estimate a period")
    lags = np.arange(1, n // 2 + 1)
    ac = np.array([np.dot(r[:-k], r[k:]) / (n - k) for k in lags])
    best = ac.max()
    tol = 1e-9 * max(abs(best), np.finfo(float).tiny)
    return int(lags[np.nonzero(ac >= best - tol)[0][0]])


def export_gram_heatmap(seq: FrameSequence, kernel: KernelSpec, csv_path, pgm_path=None) -> np.ndarray:
    """Write the training Gram matrix as CSV (raw values) and a min-max normalized PGM."""
    omega, _ = training_gram(seq, kernel)
    try:
        np.savetxt(csv_path, omega, delimiter=",", fmt="%.17g")
        if pgm_path is not None:
            lo, hi = omega.min(), omega.max()
            scaled = (omega - lo) / (hi - lo) * 255.0 if hi > lo else np.zeros_like(omega)
            Image.fromarray(np.rint(scaled).astype(np.uint8)).save(pgm_path, format="PPM")
    except OSError as exc:
        raise DataError(f"cannot write heatmap: {exc}") from exc
    return omega


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")

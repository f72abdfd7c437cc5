"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[criterion N] PASS|FAIL ...`` line straight to the
terminal (bypassing capture) before asserting, so ``pytest tests/test_acceptance.py``
doubles as a report.
"""

import time

import numpy as np
import pytest

from dyntex import baselines, kse
from dyntex.errors import BadMagicError, TruncatedFileError
from dyntex.frameio import FrameSequence, Geometry, center
from dyntex.harness import (
    GridSpec,
    SyntheticSpec,
    dominant_period,
    make_synthetic,
    run_grid,
    run_sustainability,
    synthetic_truth,
    training_gram,
)
from dyntex.kernels import KernelSpec, gram_matrix, median_bandwidth
from dyntex.metrics import PsnrConfig, evaluate, psnr_sequence, psnr_values, ssim_plane, ssim_sequence

from conftest import fixed_patterns, make_seq, naive_ssim

GAUSS_AUTO = KernelSpec("gaussian")


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


def test_criterion_01_linear_duality(verdict):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        n, d = int(rng.integers(2, 9)), int(rng.integers(1, 11))
        lam = float(10 ** rng.uniform(-6, 0))
        model = kse.train(make_seq(rng.normal(size=(n, d))), KernelSpec("linear"), lam)
        x, y = model.explanatory, model.response()
        query = rng.normal(size=d)
        primal = (query - model.temporal_mean) @ np.linalg.solve(x.T @ x + lam * np.eye(d), x.T @ y)
        dual = kse.predict_next(model, query).data - model.temporal_mean
        worst = max(worst, np.linalg.norm(dual - primal) / np.linalg.norm(primal))
    elapsed = time.perf_counter() - t0
    verdict(1, worst <= 1e-6 and elapsed < 1.0,
            f"linear duality: worst relative error {worst:.2e} (<= 1e-6), {elapsed:.3f} s (< 1 s)")


def test_criterion_02_interpolation(verdict):
    seq = make_synthetic(SyntheticSpec("translating_sine", width=64, height=48, period=20, frames=60))
    t0 = time.perf_counter()
    model = kse.train(seq, GAUSS_AUTO, 1e-8)
    predicted = np.array([kse.predict_next(model, seq[i]).data for i in range(len(seq) - 1)])
    per_frame = psnr_values(predicted, seq.data[1:], PsnrConfig(cap_db=1000.0))
    elapsed = time.perf_counter() - t0
    verdict(2, per_frame.min() >= 50 and elapsed < 5.0,
            f"interpolation: min per-frame PSNR {per_frame.min():.1f} dB (>= 50), {elapsed:.2f} s (< 5 s)")


def test_criterion_03_sustainability(verdict):
    spec = SyntheticSpec("translating_sine", width=64, height=48, period=20, frames=60)
    truth = synthetic_truth(spec, 0, 1000)
    result = run_sustainability(truth, GAUSS_AUTO, 1e-8, train_frames=60, horizon=1000)
    ssims = result.checkpoint_ssims()
    ok = result.report.mean_ssim >= 0.95 and len(ssims) == 10 and min(ssims) >= max(ssims) - 0.05
    verdict(3, ok, f"1000-frame rollout: mean SSIM {result.report.mean_ssim:.6f} (>= 0.95), "
                   f"checkpoints min {min(ssims):.6f} / max {max(ssims):.6f} (spread <= 0.05)")


def test_criterion_04_gram_properties(verdict):
    rng = np.random.default_rng(7)
    symmetric = diag_one = psd = True
    worst = 0.0
    for _ in range(20):
        n, d = int(rng.integers(5, 60)), int(rng.integers(10, 400))
        seq = make_seq(rng.uniform(0, 255, (n, d)))
        centered = center(seq).centered
        for spec in (KernelSpec("gaussian", gamma=median_bandwidth(centered)), KernelSpec("linear")):
            g = gram_matrix(centered, spec)
            symmetric &= bool(np.array_equal(g, g.T))
            if spec.family == "gaussian":
                diag_one &= bool(np.all(np.diag(g) == 1.0))
            ratio = np.linalg.eigvalsh(g).min() / np.trace(g)
            worst = min(worst, ratio)
            psd &= bool(ratio >= -1e-8)
    verdict(4, symmetric and diag_one and psd,
            f"Gram: symmetric={symmetric}, gaussian diagonal exactly 1={diag_one}, "
            f"min eigenvalue/trace {worst:.2e} (>= -1e-8)")


def test_criterion_05_metric_golden_values(verdict):
    obs = make_seq(np.full((4, 64), 100.0), width=8, height=8)
    gen = make_seq(np.full((4, 64), 116.0), width=8, height=8)
    _, psnr16 = psnr_sequence(obs, gen)
    rng = np.random.default_rng(5)
    frames = rng.uniform(0, 255, (3, 20, 20))
    same = FrameSequence(frames.reshape(3, -1), Geometry(20, 20, 1))
    _, ssim_same = ssim_sequence(same, same)
    a, b = fixed_patterns()
    oracle_gap = abs(ssim_plane(a, b) - naive_ssim(a, b))
    ok = abs(psnr16 - 24.0494) <= 1e-3 and abs(ssim_same - 1.0) <= 1e-12 and oracle_gap <= 1e-9
    verdict(5, ok, f"metrics: PSNR(diff 16) {psnr16:.4f} dB (24.0494 +/- 1e-3), "
                   f"SSIM(identical) 1 - {1 - ssim_same:.1e}, SSIM vs naive oracle gap {oracle_gap:.1e} (<= 1e-9)")


def test_criterion_06_kse_beats_lds_on_nonlinear_texture(verdict):
    spec = SyntheticSpec("saturated_sine", width=64, height=48, period=80, frames=160)
    train_seq = make_synthetic(spec)
    horizon = spec.frames + 100
    truth = synthetic_truth(spec, spec.frames, 100)
    cfg = PsnrConfig(start_index=1)

    model = kse.train(train_seq, GAUSS_AUTO, 1e-10)
    kse_out = kse.synthesize(model, train_seq[0], horizon)
    kse_eval = FrameSequence(kse_out.data[spec.frames:], spec.geometry)
    _, kse_psnr = psnr_sequence(truth, kse_eval, cfg)

    lds = baselines.lds_train(train_seq, 30)
    lds_out = baselines.lds_synthesize(lds, horizon)
    lds_eval = FrameSequence(lds_out.data[spec.frames:], spec.geometry)
    _, lds_psnr = psnr_sequence(truth, lds_eval, cfg)
    verdict(6, kse_psnr > lds_psnr,
            f"saturated_sine, 100 eval frames: KSE mean PSNR {kse_psnr:.2f} dB > LDS(n=30) {lds_psnr:.2f} dB")


def test_criterion_07_performance(verdict):
    seq = make_synthetic(SyntheticSpec("translating_sine", width=150, height=100, period=20, frames=200))
    t0 = time.perf_counter()
    model = kse.train(seq, GAUSS_AUTO, 1e-10)
    train_seconds = time.perf_counter() - t0
    t0 = time.perf_counter()
    kse.synthesize(model, seq[0], 1201)
    fps = 1200 / (time.perf_counter() - t0)
    verdict(7, train_seconds <= 2.0 and fps >= 25.0,
            f"150x100x200: train {train_seconds:.3f} s (<= 2 s; reference 0.090 s), "
            f"synthesis {fps:.1f} fps over 1200 frames (>= 25; reference 46.040)")


def test_criterion_08_grid_shape_and_determinism(verdict):
    seq = make_synthetic(SyntheticSpec("translating_sine", width=32, height=24, period=20, frames=80))
    base = median_bandwidth(center(seq.head(60)).centered)
    grid = GridSpec([2.0 ** k for k in range(-30, 11, 2)], [base * 2.0 ** k for k in range(-9, 10)])
    first = run_grid(seq, grid, train_frames=60, eval_frames=20)
    second = run_grid(seq, grid, train_frames=60, eval_frames=20)
    best = max(e.mean_ssim for e in first.entries)
    heavy = [e.mean_ssim for e in first.entries if e.lam >= 100]
    deterministic = [e.scores() for e in first.entries] == [e.scores() for e in second.entries]
    ok = len(first.entries) == 399 and heavy and max(heavy) < best and deterministic
    verdict(8, ok, f"21x19 grid: optimum SSIM {best:.4f} at {first.best_by_ssim}, "
                   f"best lambda>=100 entry {max(heavy):.4f} (strictly below), bit-deterministic={deterministic}")


def test_criterion_09_serialization(tmp_path, verdict):
    rng = np.random.default_rng(9)
    seq = make_seq(rng.uniform(0, 255, (12, 30)), width=6, height=5)
    writers = {
        "KSE1": (kse.train(seq, GAUSS_AUTO, 1e-8), kse.save_model, kse.load_model,
                 ("explanatory", "coefficients", "temporal_mean", "final_response")),
        "ELM1": (baselines.elm_train(seq, 40, 1e-6, 3), baselines.save_elm, baselines.load_elm,
                 ("input_weights", "biases", "beta", "temporal_mean")),
        "LDS1": (baselines.lds_train(seq, 8), baselines.save_lds, baselines.load_lds,
                 ("c_map", "a_dyn", "x0", "temporal_mean")),
    }
    results = []
    for magic, (model, save, load, fields) in writers.items():
        path = tmp_path / magic
        save(model, path)
        raw = path.read_bytes()
        back = load(path)
        exact = raw[:4] == magic.encode() and all(
            getattr(back, f).tobytes() == getattr(model, f).tobytes() for f in fields)
        save(back, tmp_path / f"{magic}.again")
        exact &= (tmp_path / f"{magic}.again").read_bytes() == raw
        (tmp_path / "bad").write_bytes(b"ZZZZ" + raw[4:])
        (tmp_path / "short").write_bytes(raw[: len(raw) // 2])
        try:
            load(tmp_path / "bad")
            bad_magic = False
        except BadMagicError:
            bad_magic = True
        try:
            load(tmp_path / "short")
            truncated = False
        except TruncatedFileError:
            truncated = True
        results.append((magic, exact, bad_magic, truncated))
    ok = all(all(r[1:]) for r in results) and BadMagicError is not TruncatedFileError
    verdict(9, ok, "serialization: " + ", ".join(
        f"{m} round-trip={e} bad-magic={b} truncated={t}" for m, e, b, t in results))


def test_criterion_10_heatmap_periodicity(verdict):
    seq = make_synthetic(SyntheticSpec("translating_sine", width=64, height=48, period=20, frames=61))
    omega, _ = training_gram(seq, GAUSS_AUTO)
    period = dominant_period(omega[0])
    verdict(10, period == 20, f"Gram first-row autocorrelation peaks at lag {period} (expected 20)")

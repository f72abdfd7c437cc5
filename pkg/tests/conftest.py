import numpy as np
import pytest

from dyntex.frameio import FrameSequence, Geometry


def make_seq(data, width=None, height=1, channels=1):
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    width = width or data.shape[1] // (height * channels)
    return FrameSequence(data, Geometry(width, height, channels))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ramp():
    """D=1 sequence 0, 1, ..., 9."""
    return make_seq(np.arange(10.0))


def naive_ssim(x, y, window=11, sigma=1.5, c1=(0.01 * 255) ** 2, c2=(0.03 * 255) ** 2):
    """Direct double-loop SSIM over every valid window position (reference oracle)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    half = (window - 1) / 2.0
    w = np.array([[np.exp(-((i - half) ** 2 + (j - half) ** 2) / (2 * sigma * sigma))
                   for j in range(window)] for i in range(window)])
    w /= w.sum()
    h, wd = x.shape
    scores = []
    for r in range(h - window + 1):
        for c in range(wd - window + 1):
            px = x[r:r + window, c:c + window]
            py = y[r:r + window, c:c + window]
            mx, my = (w * px).sum(), (w * py).sum()
            vx = (w * (px - mx) ** 2).sum()
            vy = (w * (py - my) ** 2).sum()
            cov = (w * (px - mx) * (py - my)).sum()
            scores.append((2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return float(np.mean(scores))


def fixed_patterns():
    """Two fixed 16x16 patterns: a diagonal gradient and a checker-modulated copy."""
    i, j = np.mgrid[0:16, 0:16]
    a = (i * 16 + j * 7) % 256
    b = np.clip(a * 0.8 + 30 * ((i // 4 + j // 4) % 2) - 10, 0, 255)
    return a.astype(float), b.astype(float)

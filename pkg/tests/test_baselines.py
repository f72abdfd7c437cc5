import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyntex.baselines import (
    LdsModel,
    elm_predict,
    elm_residual,
    elm_synthesize,
    elm_train,
    lds_synthesize,
    lds_train,
    load_elm,
    load_lds,
    save_elm,
    save_lds,
)
from dyntex.errors import BadMagicError, DegenerateSequenceError, TruncatedFileError
from dyntex.metrics import psnr_values

from conftest import make_seq


def rotating_sequence(n_frames, period=12, dim=30, seed=3):
    """Frames mean + cos(w l) p + sin(w l) q: a two-dimensional rotation in pixel space."""
    rng = np.random.default_rng(seed)
    p, q = rng.normal(size=dim), rng.normal(size=dim)
    t = np.arange(n_frames)[:, None] * 2 * np.pi / period
    return 128 + 40 * (np.cos(t) * p + np.sin(t) * q)


# --- ELM ----------------------------------------------------------------------


def test_elm_deterministic(rng):
    seq = make_seq(rng.uniform(0, 255, (8, 10)))
    a = elm_train(seq, 50, 1e-3, rng_seed=7)
    b = elm_train(seq, 50, 1e-3, rng_seed=7)
    for name in ("input_weights", "biases", "beta", "temporal_mean"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    c = elm_train(seq, 50, 1e-3, rng_seed=8)
    assert not np.array_equal(a.input_weights, c.input_weights)


def test_elm_weight_distribution():
    seq = make_seq(np.arange(10.0))
    model = elm_train(seq, 500, 1e-3, rng_seed=1)
    assert model.input_weights.min() >= -1 and model.input_weights.max() <= 1
    assert model.biases.min() >= -1 and model.biases.max() <= 1
    rng = np.random.default_rng(1)
    np.testing.assert_array_equal(model.input_weights, rng.uniform(-1, 1, (500, 1)))
    np.testing.assert_array_equal(model.biases, rng.uniform(-1, 1, 500))


def test_elm_ramp_residual(ramp):
    model = elm_train(ramp, 4000, 1e-6, rng_seed=0)
    assert elm_residual(model, ramp) < 0.05


def test_elm_ramp_prediction(ramp):
    model = elm_train(ramp, 2000, 1e-6, rng_seed=0)
    assert elm_predict(model, np.array([4.0])).data[0] == pytest.approx(5.0, abs=0.1)


@pytest.mark.parametrize("activation", ["sigmoid", "tanh"])
def test_elm_ridge_monotone(rng, activation):
    seq = make_seq(rng.uniform(0, 255, (12, 6)))
    small = elm_residual(elm_train(seq, 40, 1e-6, 3, activation), seq)
    big = elm_residual(elm_train(seq, 40, 1.0, 3, activation), seq)
    assert small <= big


def test_elm_large_lambda_returns_mean(rng):
    seq = make_seq(rng.uniform(0, 255, (6, 5)))
    model = elm_train(seq, 20, 1e12, rng_seed=0)
    np.testing.assert_allclose(elm_predict(model, seq[2]).data, model.temporal_mean, atol=1e-6)


def test_elm_synthesize_count_one(rng):
    seq = make_seq(rng.uniform(0, 255, (6, 5)))
    model = elm_train(seq, 20, 1e-3, rng_seed=0)
    out = elm_synthesize(model, seq[1], 1)
    np.testing.assert_array_equal(out.data, seq.data[1:2])
    assert len(elm_synthesize(model, seq[1], 9)) == 9


def test_elm_rejects():
    with pytest.raises(DegenerateSequenceError):
        elm_train(make_seq(np.ones((3, 2))), 5, 1e-3, 0)
    with pytest.raises(ValueError):
        elm_train(make_seq(np.arange(4.0)), 0, 1e-3, 0)
    with pytest.raises(ValueError):
        elm_train(make_seq(np.arange(4.0)), 5, 0.0, 0)
    with pytest.raises(ValueError):
        elm_train(make_seq(np.arange(4.0)), 5, 1e-3, 0, activation="relu")


def test_elm_roundtrip(tmp_path, rng):
    seq = make_seq(rng.uniform(0, 255, (6, 6)), width=3, height=2)
    model = elm_train(seq, 15, 1e-4, rng_seed=2**40 + 5, activation="tanh")
    path = tmp_path / "m.elm"
    size = save_elm(model, path)
    assert path.read_bytes()[:4] == b"ELM1" and size == path.stat().st_size
    back = load_elm(path)
    for name in ("input_weights", "biases", "beta", "temporal_mean"):
        assert getattr(back, name).tobytes() == getattr(model, name).tobytes()
    assert (back.activation, back.rng_seed, back.lam, back.geometry) == (
        "tanh", 2**40 + 5, 1e-4, model.geometry)
    a = elm_synthesize(model, seq[0], 20)
    b = elm_synthesize(back, seq[0], 20)
    assert a.data.tobytes() == b.data.tobytes()


# --- LDS ----------------------------------------------------------------------


def test_lds_rank_one_exact(rng):
    p = rng.normal(size=25)
    c = rng.normal(size=9)
    seq = make_seq(100 + np.outer(c, p))
    model = lds_train(seq, 1)
    recon = model.reconstruct(model.states(seq)).data
    assert np.linalg.norm(recon - seq.data) / np.linalg.norm(seq.data) < 1e-8


def test_lds_full_rank(rng):
    data = rng.uniform(0, 255, (10, 40))
    seq = make_seq(data)
    model = lds_train(seq, 9)
    recon = model.reconstruct(model.states(seq)).data
    assert np.linalg.norm(recon - data) / np.linalg.norm(data) < 1e-6


@pytest.mark.parametrize("n", [0, -1, 10])
def test_lds_state_dim_out_of_range(rng, n):
    with pytest.raises(ValueError, match="n out of range"):
        lds_train(make_seq(rng.uniform(0, 255, (10, 40))), n)


def test_lds_degenerate():
    with pytest.raises(DegenerateSequenceError):
        lds_train(make_seq(np.full((5, 4), 3.0)), 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 12), st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_lds_orthonormal_and_states(n_frames, dim, seed):
    data = np.random.default_rng(seed).uniform(0, 255, (n_frames, dim))
    seq = make_seq(data)
    n = min(n_frames - 1, dim)
    model = lds_train(seq, n)
    np.testing.assert_allclose(model.c_map.T @ model.c_map, np.eye(n), atol=1e-8)
    np.testing.assert_allclose(model.states(seq)[:, 0], model.x0, atol=1e-9)


def test_lds_single_frame_rollout(rng):
    seq = make_seq(rng.uniform(0, 255, (8, 12)))
    model = lds_train(seq, 7)
    out = lds_synthesize(model, 1)
    np.testing.assert_allclose(out.data[0], model.c_map @ model.x0 + model.temporal_mean)
    np.testing.assert_allclose(out.data[0], seq.data[0], atol=1e-6)


def test_lds_identity_dynamics(rng):
    seq = make_seq(rng.uniform(0, 255, (8, 12)))
    m = lds_train(seq, 3)
    forced = LdsModel(m.c_map, np.eye(3), m.x0, m.temporal_mean, m.geometry)
    out = lds_synthesize(forced, 6)
    assert all(np.array_equal(out.data[0], row) for row in out.data)


def test_lds_rotation_continuation():
    period = 12
    train_seq = make_seq(rotating_sequence(2 * period))
    model = lds_train(train_seq, 2)
    out = lds_synthesize(model, 3 * period)
    truth = rotating_sequence(3 * period)
    assert psnr_values(truth[1:], out.data[1:]).mean() >= 30
    np.testing.assert_allclose(np.abs(np.linalg.eigvals(model.a_dyn)), 1.0, atol=1e-8)


def test_lds_roundtrip(tmp_path, rng):
    seq = make_seq(rng.uniform(0, 255, (12, 20)), width=5, height=4)
    model = lds_train(seq, 5)
    path = tmp_path / "m.lds"
    save_lds(model, path)
    raw = path.read_bytes()
    assert raw[:4] == b"LDS1"
    back = load_lds(path)
    for name in ("c_map", "a_dyn", "x0", "temporal_mean"):
        assert getattr(back, name).tobytes() == getattr(model, name).tobytes()
    assert lds_synthesize(back, 30).data.tobytes() == lds_synthesize(model, 30).data.tobytes()
    (tmp_path / "bad").write_bytes(b"KSE1" + raw[4:])
    with pytest.raises(BadMagicError):
        load_lds(tmp_path / "bad")
    (tmp_path / "short").write_bytes(raw[:-3])
    with pytest.raises(TruncatedFileError):
        load_lds(tmp_path / "short")

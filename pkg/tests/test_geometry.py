import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from lsstereo.geometry import (ShapeModel, compose_disparity, compute_delta_theta,
                               normalized_frame, predict_occlusion, sample_shifted)

coeff = st.floats(-5, 5, allow_nan=False)


def test_eval_examples():
    c = ShapeModel.constant(3.5)
    assert np.all(c.grid(4, 5) == 3.5)
    assert ShapeModel([0, 0, 0, 1, 0, 0])(7.0, 2.0) == 7.0
    assert ShapeModel([1, 0, 0, 0, 0, 0])(3.0, 7.0) == 9.0


@settings(max_examples=50, deadline=None)
@given(st.lists(coeff, min_size=6, max_size=6), st.integers(5, 300), st.integers(5, 300))
def test_frame_change_is_exact(c, h, w):
    frame = normalized_frame(h, w)
    s = ShapeModel(c, frame)
    p = s.in_frame((1.0, 0.0, 1.0, 0.0))
    rng = np.random.default_rng(0)
    x, y = rng.uniform(0, w, 20), rng.uniform(0, h, 20)
    ref = s(x, y)
    assert np.allclose(p(x, y), ref, rtol=1e-9, atol=1e-9 * (1 + np.abs(ref).max()))
    back = p.in_frame(frame)
    assert np.allclose(back.coeffs, s.coeffs, rtol=1e-9, atol=1e-9)


def test_delta_theta_examples():
    phi = np.tile(np.arange(10.0) - 4.5, (3, 1))
    dt = compute_delta_theta(ShapeModel.constant(10), ShapeModel.constant(4), phi)
    assert np.all(dt == 6.0)
    assert np.all(compute_delta_theta(ShapeModel.constant(4), ShapeModel.constant(10), phi) == 0)
    flat = np.tile(np.arange(3.0)[:, None], (1, 10))
    assert np.all(compute_delta_theta(ShapeModel.constant(10), ShapeModel.constant(4), flat) == 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(coeff, min_size=6, max_size=6), st.lists(coeff, min_size=6, max_size=6),
       st.integers(0, 2 ** 31 - 1))
def test_delta_theta_bounds(c1, c2, seed):
    phi = np.random.default_rng(seed).normal(size=(12, 15))
    t1, t2 = ShapeModel(c1, normalized_frame(12, 15)), ShapeModel(c2, normalized_frame(12, 15))
    dt = compute_delta_theta(t1, t2, phi, d_max=8)
    assert np.all(np.isfinite(dt))
    assert np.abs(dt).max() <= 8
    g1, g2 = np.clip(t1.grid(12, 15), 0, 8), np.clip(t2.grid(12, 15), 0, 8)
    assert np.abs(dt).max() <= max(0.0, (g1 - g2).max()) + 1e-12
    if np.all(g1 <= g2):
        assert not predict_occlusion(phi, dt).any()


def test_compose_examples():
    a, b = ShapeModel.constant(9.0), ShapeModel.constant(2.0)
    assert np.all(compose_disparity(a, b, np.ones((4, 6))) == 9.0)
    assert np.all(compose_disparity(a, b, -np.ones((4, 6))) == 2.0)
    w = 10
    phi = np.tile(np.arange(w) - w / 2, (3, 1))
    d = compose_disparity(a, b, phi)
    assert np.all(d[:, :w // 2 + 1] == 2.0) and np.all(d[:, w // 2 + 1:] == 9.0)


def test_compose_clamps():
    d = compose_disparity(ShapeModel.constant(40), ShapeModel.constant(-3), np.array([[1.0, -1.0]]),
                          d_max=24)
    assert d.tolist() == [[24.0, 0.0]]


def test_compose_second_differences_constant():
    fr = normalized_frame(20, 30)
    t1 = ShapeModel([0.3, 0.1, -0.2, 1.0, 0.5, 10.0], fr)
    t2 = ShapeModel([-0.1, 0.0, 0.4, 0.2, -0.3, 3.0], fr)
    phi = np.where(np.arange(30)[None, :] < 14, -1.0, 1.0) * np.ones((20, 1))
    d = compose_disparity(t1, t2, phi)
    sd = np.diff(d, 2, axis=1)
    assert np.allclose(sd[:, :11], sd[:1, :1]) and np.allclose(sd[:, 15:], sd[:1, 15:16])


def test_predict_occlusion_interval():
    phi = np.tile(np.arange(100.0) - 50, (2, 1))
    dt = np.where(phi < 0, 6.0, 0.0)
    occ = predict_occlusion(phi, dt)
    # strict phi(x + 6) > 0 leaves x = 44, whose lookup lands on phi = 0, outside
    assert np.flatnonzero(occ[0]).tolist() == [45, 46, 47, 48, 49]
    assert not predict_occlusion(phi, np.zeros_like(phi)).any()


def test_sample_shifted_interpolates_and_clamps():
    f = np.array([[0.0, 10.0, 20.0, 30.0]])
    assert np.allclose(sample_shifted(f, np.full((1, 4), 0.5)), [[5, 15, 25, 30]])
    assert np.allclose(sample_shifted(f, np.full((1, 4), -9.0)), [[0, 0, 0, 0]])

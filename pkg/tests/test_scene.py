import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irsradar.scene import (
    SPEED_OF_LIGHT,
    GeometryError,
    IrsArray,
    SceneConfig,
    compute_path_params,
    path_angles,
    steering_vector,
)


def test_default_scene_subcarriers():
    scene = SceneConfig.default()
    assert scene.num_irs == 2
    assert scene.subcarrier_spacing == pytest.approx(20e6)
    np.testing.assert_allclose(scene.subcarrier_freqs, 1e9 + 20e6 * np.arange(4))


def test_path_params_hand_computed():
    scene = SceneConfig.default()
    pp = compute_path_params(scene)
    c = SPEED_OF_LIGHT
    assert pp.delays[0] == pytest.approx(2 * 5000 / c)
    # LoS: radial velocity is the y component
    assert pp.dopplers[0] == pytest.approx(2 * 10 / c)
    d_ri = np.hypot(100, 100)
    d_it = np.hypot(100, 4900)
    assert pp.delays[1] == pytest.approx(2 * (d_ri + d_it) / c)
    u = np.array([-100.0, 4900.0]) / d_it
    assert pp.dopplers[1] == pytest.approx(2 * np.dot([10.0, 10.0], u) / c)
    assert pp.narrow_area_ratio < 0.05


def test_path_angles_hand_computed():
    scene = SceneConfig.default()
    ang = path_angles(scene, 1)
    assert ang.theta_ri == pytest.approx(-np.pi / 4)
    assert ang.theta_ir == ang.theta_ri
    assert ang.theta_ti == pytest.approx(np.arcsin(-100 / np.hypot(100, 4900)))
    assert not ang.grazing
    # mirror image across the y axis flips the sign
    ang2 = path_angles(scene, 2)
    assert ang2.theta_ri == pytest.approx(np.pi / 4)
    assert ang2.theta_ti == pytest.approx(-ang.theta_ti)


def test_path_angles_grazing_flag():
    irs = IrsArray(np.array([100.0, 0.0]))
    scene = SceneConfig(np.zeros(2), (irs,), np.array([0.0, 500.0]), np.zeros(2))
    ang = path_angles(scene, 1)
    assert ang.grazing
    assert ang.theta_ri == pytest.approx(-np.pi / 2)


def test_path_angles_index_checked():
    with pytest.raises(IndexError):
        path_angles(SceneConfig.default(), 3)


def test_steering_vector_half_wavelength():
    f = 1e9
    d = SPEED_OF_LIGHT / (2 * f)
    theta = 0.3
    b = steering_vector(theta, f, 6, d)
    np.testing.assert_allclose(b, np.exp(1j * np.pi * np.arange(6) * np.sin(theta)), atol=1e-12)
    np.testing.assert_allclose(steering_vector(0.0, f, 5, d), np.ones(5))


@given(st.floats(-np.pi / 2, np.pi / 2), st.floats(1e8, 1e10), st.integers(1, 16), st.floats(0.01, 1.0))
@settings(max_examples=50, deadline=None)
def test_steering_vector_is_geometric_and_unimodular(theta, freq, n, spacing):
    b = steering_vector(theta, freq, n, spacing)
    np.testing.assert_allclose(np.abs(b), 1.0, atol=1e-12)
    if n > 1:
        np.testing.assert_allclose(b, b[1] ** np.arange(n), atol=1e-9)


def test_scene_rejects_colocated_objects():
    irs = IrsArray(np.array([0.0, 0.0]))
    with pytest.raises(GeometryError, match="co-located"):
        SceneConfig(np.zeros(2), (irs,), np.array([0.0, 100.0]), np.zeros(2))
    with pytest.raises(GeometryError, match="co-located"):
        SceneConfig(np.zeros(2), (), np.zeros(2), np.zeros(2))


def test_scene_rejects_inconsistent_ofdm_numerology():
    with pytest.raises(GeometryError, match="subcarrier spacing"):
        SceneConfig(np.zeros(2), (), np.array([0.0, 100.0]), np.zeros(2), bandwidth=80e6)
    with pytest.raises(GeometryError, match="carrier frequency"):
        SceneConfig(np.zeros(2), (), np.array([0.0, 100.0]), np.zeros(2), carrier_freq=50e6)
    # L = 1 needs B = 2 / T
    SceneConfig(np.zeros(2), (), np.array([0.0, 100.0]), np.zeros(2), num_subcarriers=1, bandwidth=40e6)


def test_irs_array_validation():
    with pytest.raises(GeometryError):
        IrsArray(np.array([1.0, 2.0]), num_elements=0)
    with pytest.raises(GeometryError):
        IrsArray(np.array([1.0, 2.0]), orientation=[1.0, 1.0])
    with pytest.raises(GeometryError):
        IrsArray(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(IrsArray(np.zeros(2)).normal, [0.0, 1.0])


def test_with_irs_keeps_everything_else():
    scene = SceneConfig.default()
    sub = scene.with_irs(scene.irs[:1])
    assert sub.num_irs == 1
    assert sub.num_pulses == scene.num_pulses
    np.testing.assert_array_equal(sub.target_pos, scene.target_pos)


def test_reference_scene_matches_published_setup():
    s = SceneConfig.default()
    assert (s.num_pulses, s.num_subcarriers) == (50, 4)
    assert s.pulse_width == 50e-9 and s.carrier_freq == 1e9 and s.bandwidth == 100e6 and s.pri == 20e-6
    np.testing.assert_array_equal(s.radar_pos, [0.0, 0.0])
    np.testing.assert_array_equal(s.target_pos, [0.0, 5000.0])
    np.testing.assert_array_equal(s.target_vel, [10.0, 10.0])
    np.testing.assert_array_equal(s.irs[0].first_element_pos, [100.0, 100.0])
    np.testing.assert_array_equal(s.irs[1].first_element_pos, [-100.0, 100.0])
    assert all(arr.num_elements == 8 for arr in s.irs)

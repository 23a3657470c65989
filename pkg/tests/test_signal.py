import numpy as np
import pytest

from irsradar.scene import SceneConfig, compute_path_params
from irsradar.signal_model import (
    NoiseModel,
    OfdmWaveform,
    complex_normal,
    doppler_matrix,
    doppler_rows,
    make_noise_model,
    read_y_dump,
    synthesize,
    write_y_dump,
)

from conftest import crandn


def test_doppler_matrix_entrywise():
    scene = SceneConfig.default()
    pp = compute_path_params(scene)
    P = doppler_matrix(pp, scene)
    assert P.shape == (8, 50)
    f = scene.subcarrier_freqs
    for l in range(4):
        for m in range(2):
            for n in (0, 7, 49):
                expect = np.exp(-2j * np.pi * f[l] * pp.delays[0]) * np.exp(
                    2j * np.pi * f[l] * pp.dopplers[m + 1] * n * scene.pri)
                assert P[l * 2 + m, n] == pytest.approx(expect, abs=1e-9)
    np.testing.assert_allclose(np.abs(P), 1.0)


def test_doppler_delay_term_is_a_row_phase():
    scene = SceneConfig.default()
    pp = compute_path_params(scene)
    P0 = doppler_matrix(pp, scene, include_delay=False)
    P1 = doppler_matrix(pp, scene)
    ratio = P1 / P0
    np.testing.assert_allclose(ratio, ratio[:, :1] * np.ones((1, 50)), atol=1e-9)
    np.testing.assert_allclose(P0[:, 0], 1.0)


def test_doppler_rows_single_path():
    P = doppler_rows([0.0], [1.0, 2.0], 0.0, 5, 1.0)
    np.testing.assert_allclose(P, np.ones((2, 5)))


def test_waveform_validation():
    w = OfdmWaveform.uniform(4)
    np.testing.assert_allclose(np.diag(w.A), 0.5)
    with pytest.raises(ValueError, match="unit norm"):
        OfdmWaveform(np.ones(4))
    with pytest.raises(ValueError):
        OfdmWaveform(np.ones((2, 2)) / 2)


def test_noise_model_toeplitz():
    nm = make_noise_model(4, 2.0, 0.5)
    expect = 2.0 * np.array([[0.5 ** abs(i - j) for j in range(4)] for i in range(4)])
    np.testing.assert_allclose(nm.sigma, expect)
    np.testing.assert_allclose(nm.chol @ nm.chol.conj().T, nm.sigma, atol=1e-12)
    np.testing.assert_allclose(nm.inv @ nm.sigma, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(nm.scaled(4.0).sigma, 2 * nm.sigma)
    with pytest.raises(ValueError):
        make_noise_model(4, 1.0, 1.0)
    with pytest.raises(ValueError):
        make_noise_model(4, 0.0, 0.1)


def test_noise_model_rejects_bad_covariances():
    with pytest.raises(ValueError, match="Hermitian"):
        NoiseModel(np.array([[1.0, 1.0], [0.0, 1.0]]))
    bad = NoiseModel(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(np.linalg.LinAlgError):
        bad.chol


def test_complex_normal_moments():
    z = complex_normal(np.random.default_rng(0), 200_000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)
    assert abs(np.mean(z * z)) < 0.01
    assert np.var(z.real) == pytest.approx(0.5, abs=0.01)


def test_synthesized_noise_covariance():
    nm = make_noise_model(3, 1.5, 0.6)
    rng = np.random.default_rng(1)
    Y = synthesize("H0", np.eye(3), np.zeros((3, 3)), np.zeros((3, 100_000)), nm, rng)
    np.testing.assert_allclose(Y @ Y.conj().T / Y.shape[1], nm.sigma, atol=0.03)


def test_synthesize_h0_h1_share_noise(rng):
    L, N = 3, 10
    A = np.diag(crandn(rng, L))
    X = crandn(rng, L, 2 * L)
    P = crandn(rng, 2 * L, N)
    nm = make_noise_model(L, 1.0, 0.3)
    y0 = synthesize("H0", A, X, P, nm, np.random.default_rng(5))
    y1 = synthesize("H1", A, X, P, nm, np.random.default_rng(5))
    np.testing.assert_allclose(y1 - y0, A @ X @ P, atol=1e-12)
    np.testing.assert_allclose(synthesize("H1", A, X, P, None, rng), A @ X @ P)
    with pytest.raises(ValueError):
        synthesize("H2", A, X, P, nm, rng)
    with pytest.raises(ValueError):
        synthesize("H0", A, X, P, make_noise_model(2, 1.0, 0.0), rng)


def test_y_dump_roundtrip_and_layout(tmp_path, rng):
    Y = crandn(rng, 3, 5)
    path = tmp_path / "y.bin"
    write_y_dump(path, Y)
    raw = path.read_bytes()
    assert len(raw) == 16 + 3 * 5 * 8
    assert raw[:8] == b"IRSYMAT1"
    assert int.from_bytes(raw[8:12], "little") == 3
    assert int.from_bytes(raw[12:16], "little") == 5
    first = np.frombuffer(raw[16:24], dtype="<f4")
    np.testing.assert_allclose(first, [Y[0, 0].real, Y[0, 0].imag], rtol=1e-6)
    np.testing.assert_allclose(read_y_dump(path), Y.astype(np.complex64))
    path.write_bytes(b"garbage!" + raw[8:])
    with pytest.raises(ValueError, match="magic"):
        read_y_dump(path)

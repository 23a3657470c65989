"""OFDM waveform, Doppler matrix, noise model and measurement synthesis."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from irsradar.scene import PathParams, SceneConfig


@dataclass(frozen=True)
class OfdmWaveform:
    """Unit-norm vector of OFDM subcarrier coefficients."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("waveform must be a non-empty vector")
        if abs(np.linalg.norm(a) - 1.0) > 1e-9:
            raise ValueError(f"waveform must have unit norm, got {np.linalg.norm(a):.6g}")
        object.__setattr__(self, "a", a)

    @classmethod
    def uniform(cls, L: int) -> "OfdmWaveform":
        return cls(np.full(L, 1 / np.sqrt(L), dtype=complex))

    @property
    def A(self) -> np.ndarray:
        return np.diag(self.a)


def doppler_rows(dopplers, freqs, tau0: float, num_pulses: int, pri: float, include_delay: bool = True) -> np.ndarray:
    """Doppler matrix for arbitrary path Dopplers.

    Row ``l * M + m`` holds exp(-j2pi f_l tau0) exp(j2pi f_l nu_m n T_PRI), n = 0..N-1.
    """
    nus = np.atleast_1d(np.asarray(dopplers, dtype=float))
    f = np.asarray(freqs, dtype=float)
    n = np.arange(num_pulses)
    phase = 2 * np.pi * f[:, None, None] * nus[None, :, None] * n[None, None, :] * pri
    P = np.exp(1j * phase)
    if include_delay:
        P = P * np.exp(-2j * np.pi * f * tau0)[:, None, None]
    return P.reshape(f.size * nus.size, num_pulses)


def doppler_matrix(path_params: PathParams, scene: SceneConfig, include_delay: bool = True) -> np.ndarray:
    """P(nu) over the IRS paths m = 1..M (the obstructed LoS slot is dropped), shape (LM, N)."""
    return doppler_rows(
        path_params.dopplers[1:],
        scene.subcarrier_freqs,
        path_params.delays[0],
        scene.num_pulses,
        scene.pri,
        include_delay,
    )


@dataclass(frozen=True)
class NoiseModel:
    """Temporally white, spatially correlated complex Gaussian noise."""

    sigma: np.ndarray
    sigma2: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=complex)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("noise covariance must be square")
        if not np.allclose(s, s.conj().T, atol=1e-12 * max(1.0, np.abs(s).max())):
            raise ValueError("noise covariance must be Hermitian")
        object.__setattr__(self, "sigma", s)

    @property
    def L(self) -> int:
        return self.sigma.shape[0]

    @cached_property
    def chol(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.sigma)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError("noise covariance is not positive definite") from exc

    @cached_property
    def inv(self) -> np.ndarray:
        return np.linalg.inv(self.sigma)

    def scaled(self, sigma2: float) -> "NoiseModel":
        """Same correlation structure with a different noise power."""
        return NoiseModel(self.sigma * (sigma2 / self.sigma2), sigma2, self.rho)


def make_noise_model(L: int, sigma2: float, rho: float) -> NoiseModel:
    """Exponentially correlated Toeplitz covariance sigma2 * rho^|i-j|."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    if not 0 <= rho < 1:
        raise ValueError("rho must lie in [0, 1)")
    idx = np.arange(L)
    sigma = sigma2 * rho ** np.abs(idx[:, None] - idx[None, :])
    return NoiseModel(sigma.astype(complex), float(sigma2), float(rho))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) samples: real and imaginary parts each with variance 1/2."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def synthesize(hypothesis: str, A: np.ndarray, X: np.ndarray, P: np.ndarray, noise: NoiseModel | None,
               rng: np.random.Generator) -> np.ndarray:
    """Draw Y (L x N) under ``"H0"`` (noise only) or ``"H1"`` (A X P + noise).

    ``noise=None`` gives noiseless data. Noise is drawn before the hypothesis is
    consulted so that H0 and H1 share noise for a common seed.
    """
    if hypothesis not in ("H0", "H1"):
        raise ValueError(f"hypothesis must be 'H0' or 'H1', got {hypothesis!r}")
    L, N = A.shape[0], P.shape[1]
    if noise is None:
        Nn = np.zeros((L, N), dtype=complex)
    else:
        if noise.L != L:
            raise ValueError(f"noise model is {noise.L}x{noise.L}, data has {L} subcarriers")
        Nn = noise.chol @ complex_normal(rng, (L, N))
    if hypothesis == "H0":
        return Nn
    return A @ X @ P + Nn


_Y_MAGIC = b"IRSYMAT1"


def write_y_dump(path, Y: np.ndarray) -> None:
    """Binary dump: 8-byte magic, uint32 L, uint32 N, then row-major complex64 (LE)."""
    Y = np.asarray(Y)
    L, N = Y.shape
    body = np.ascontiguousarray(Y, dtype="<c8").tobytes()
    Path(path).write_bytes(_Y_MAGIC + struct.pack("<II", L, N) + body)


def read_y_dump(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:8] != _Y_MAGIC:
        raise ValueError("not a Y dump (bad magic)")
    L, N = struct.unpack("<II", raw[8:16])
    return np.frombuffer(raw[16:], dtype="<c8").reshape(L, N).astype(complex)

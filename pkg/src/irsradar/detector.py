"""GLRT statistic, noncentrality parameter and asymptotic detection curves."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from irsradar.stats import chi2_isf, marcum_q

DOF_CONVENTIONS = ("rL", "2rL")
VARIANTS = ("clairvoyant", "estimated")
SCALINGS = ("wilks", "bartlett")
_SATURATION_RTOL = 1e-10


@dataclass(frozen=True)
class DetectorConfig:
    """Detector settings.

    ``dof_convention`` picks how the complex chi-square law is mapped onto a real
    one: ``"rL"`` compares N ln T against chi2(rL) with noncentrality delta,
    ``"2rL"`` compares 2 N ln T against chi2(2rL) with noncentrality 2 delta.
    ``scaling="bartlett"`` replaces the factor N by N - (r + L)/2, which removes
    the leading finite-sample bias of the null law.
    """

    pfa: float = 1e-2
    dof_convention: str = "2rL"
    variant: str = "estimated"
    rank_tol: float = 1e-9
    scaling: str = "bartlett"

    def __post_init__(self):
        if not 0 < self.pfa < 1:
            raise ValueError("pfa must lie in (0, 1)")
        if self.dof_convention not in DOF_CONVENTIONS:
            raise ValueError(f"dof_convention must be one of {DOF_CONVENTIONS}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not 0 < self.rank_tol < 1:
            raise ValueError("rank_tol must lie in (0, 1)")
        if self.scaling not in SCALINGS:
            raise ValueError(f"scaling must be one of {SCALINGS}")


@dataclass(frozen=True)
class GlrResult:
    statistic: float
    log_statistic: float
    rank: int
    num_subcarriers: int
    num_pulses: int
    variant: str
    saturated: bool = False


def effective_rank(P: np.ndarray, tolerance: float = 1e-9) -> int:
    s = np.linalg.svd(np.atleast_2d(P), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tolerance * s[0]))


def row_space_projector(P: np.ndarray, tolerance: float = 1e-9) -> np.ndarray:
    """Orthogonal projector onto the row space of P, P^H (P P^H)^- P.

    Built from the right singular vectors so that directions below the rank
    tolerance are dropped without squaring the condition number.
    """
    _, s, vh = np.linalg.svd(P, full_matrices=False)
    r = int(np.sum(s > tolerance * s[0])) if s.size and s[0] > 0 else 0
    V = vh[:r].conj().T
    return V @ V.conj().T


def _logdet_gram(Z: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(Z @ Z.conj().T)
    return logdet if sign != 0 else -math.inf


def glr_statistic(Y: np.ndarray, A: np.ndarray | None, X: np.ndarray | None, P: np.ndarray,
                  variant: str = "estimated", rank_tol: float = 1e-9, projector: np.ndarray | None = None,
                  rank: int | None = None) -> GlrResult:
    """Generalized likelihood ratio T = det(S0) / det(S1) with L x L sample covariances.

    ``"clairvoyant"`` uses the known target term A X P for the H1 residual;
    ``"estimated"`` replaces it by the least-squares fit onto the row space of P,
    giving T = det(Y Y^H) / det(Y Pi_perp Y^H). ``projector``/``rank`` may be
    passed in when the same P is reused across many trials.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    L, N = Y.shape
    if P.shape[1] != N:
        raise ValueError(f"P has {P.shape[1]} columns, Y has {N}")
    if N < L:
        raise np.linalg.LinAlgError(f"sample covariance is singular with N={N} < L={L}; use more pulses")
    r = effective_rank(P, rank_tol) if rank is None else rank
    if variant == "clairvoyant":
        residual = Y - A @ X @ P
    else:
        if projector is None:
            projector = row_space_projector(P, rank_tol)
        residual = Y - Y @ projector
    # residual at roundoff level: noiseless data, the statistic is unbounded
    if np.linalg.norm(residual) <= _SATURATION_RTOL * np.linalg.norm(Y):
        return GlrResult(math.inf, math.inf, r, L, N, variant, saturated=True)
    ld0 = _logdet_gram(Y)
    ld1 = _logdet_gram(residual)
    if ld1 == -math.inf:
        raise np.linalg.LinAlgError("H1 residual covariance is singular; use more pulses")
    log_t = ld0 - ld1
    return GlrResult(math.exp(log_t) if log_t < 700 else math.inf, N * log_t, r, L, N, variant,
                     saturated=log_t >= 700)


def scaled_statistic(log_statistic: float, rank: int, L: int, N: int, convention: str = "2rL",
                     scaling: str = "bartlett") -> float:
    """Map N ln T onto the scale of the chi-square reference law."""
    if convention not in DOF_CONVENTIONS:
        raise ValueError(f"convention must be one of {DOF_CONVENTIONS}")
    if scaling not in SCALINGS:
        raise ValueError(f"scaling must be one of {SCALINGS}")
    factor = 1.0 if scaling == "wilks" else (N - (rank + L) / 2.0) / N
    value = log_statistic * factor
    return 2 * value if convention == "2rL" else value


def detection_statistic(result: GlrResult, convention: str = "2rL", scaling: str = "bartlett") -> float:
    """Scalar compared against the chi-square threshold for the chosen convention."""
    return scaled_statistic(result.log_statistic, result.rank, result.num_subcarriers, result.num_pulses,
                            convention, scaling)


def noncentrality(A: np.ndarray, X: np.ndarray, P: np.ndarray, sigma: np.ndarray) -> float:
    """delta = Tr(Sigma^-1 A X P P^H X^H A^H)."""
    B = A @ X @ P
    val = np.trace(np.linalg.solve(sigma, B) @ B.conj().T).real
    return float(max(val, 0.0))


def chi2_dof(r: int, L: int, convention: str) -> int:
    if convention not in DOF_CONVENTIONS:
        raise ValueError(f"convention must be one of {DOF_CONVENTIONS}")
    return r * L if convention == "rL" else 2 * r * L


def threshold_for_pfa(pfa: float, r: int, L: int, convention: str = "2rL") -> float:
    return chi2_isf(pfa, chi2_dof(r, L, convention))


def theoretical_pd(delta: float, pfa: float, r: int, L: int, convention: str = "2rL") -> float:
    """Asymptotic P_D = Q_{dof/2}(sqrt(nc), sqrt(gamma)) with nc = delta or 2 delta."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    dof = chi2_dof(r, L, convention)
    gamma = chi2_isf(pfa, dof)
    nc = delta if convention == "rL" else 2 * delta
    return marcum_q(dof / 2.0, math.sqrt(nc), math.sqrt(gamma))

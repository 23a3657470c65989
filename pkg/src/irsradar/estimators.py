"""scikit-learn style wrappers around the designer and the detector."""
from __future__ import annotations

import numpy as np
from scipy import stats as sps
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from irsradar.detector import (
    DOF_CONVENTIONS,
    SCALINGS,
    VARIANTS,
    chi2_dof,
    effective_rank,
    glr_statistic,
    row_space_projector,
    scaled_statistic,
    threshold_for_pfa,
)
from irsradar.optimizer import DesignProblem, algorithm1


def check_complex_array(X, ndim: int, name: str = "X") -> np.ndarray:
    """Validate a finite complex array of the given rank (check_array rejects complex input)."""
    arr = np.asarray(X)
    if arr.dtype.kind not in "fciu":
        raise TypeError(f"{name} must be numeric, got dtype {arr.dtype}")
    arr = arr.astype(complex, copy=False)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or inf")
    return arr


def _check_cubes(Y) -> np.ndarray:
    Y = np.asarray(Y)
    if Y.ndim == 2:
        Y = Y[None]
    return check_complex_array(Y, 3, "Y")


class JointDesigner(BaseEstimator):
    """Joint waveform / phase-shift design as an estimator.

    ``fit(problem)`` runs the alternating design on a :class:`DesignProblem`
    and stores ``a_``, ``v_``, ``delta_`` and ``delta_trace_``.
    """

    def __init__(self, eta: float = 1.0, gamma1: int = 10, gamma2: int = 30, rtol: float = 1e-6,
                 random_state=None):
        self.eta = eta
        self.gamma1 = gamma1
        self.gamma2 = gamma2
        self.rtol = rtol
        self.random_state = random_state

    def fit(self, problem: DesignProblem, y=None):
        if not isinstance(problem, DesignProblem):
            raise TypeError("JointDesigner.fit expects a DesignProblem")
        rng = self.random_state if isinstance(self.random_state, np.random.Generator) else \
            np.random.default_rng(self.random_state)
        state = algorithm1(problem, eta=self.eta, gamma1=self.gamma1, gamma2=self.gamma2, seed=rng, rtol=self.rtol)
        self.a_ = state.a
        self.v_ = state.v
        self.delta_ = state.delta
        self.delta_trace_ = np.array([d for _, d in state.trace])
        self.state_ = state
        return self

    def score(self, problem: DesignProblem, y=None) -> float:
        """Noncentrality of the fitted design on ``problem``."""
        if not hasattr(self, "a_"):
            raise NotFittedError("JointDesigner is not fitted")
        return problem.delta(self.a_, self.v_)


class GLRTDetector(ClassifierMixin, BaseEstimator):
    """GLRT moving-target detector; class 1 means a target is declared.

    ``fit`` takes H0 data cubes of shape (n, L, N) together with the Doppler
    matrix ``P``. With ``dof_convention="auto"`` the convention whose
    chi-square law fits the H0 statistics best (KS p-value) is kept.
    """

    def __init__(self, pfa: float = 1e-2, dof_convention: str = "2rL", variant: str = "estimated",
                 scaling: str = "bartlett", rank_tol: float = 1e-9):
        self.pfa = pfa
        self.dof_convention = dof_convention
        self.variant = variant
        self.scaling = scaling
        self.rank_tol = rank_tol

    def _validate_params(self):
        if not 0 < self.pfa < 1:
            raise ValueError("pfa must lie in (0, 1)")
        if self.dof_convention not in DOF_CONVENTIONS + ("auto",):
            raise ValueError(f"dof_convention must be one of {DOF_CONVENTIONS + ('auto',)}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.scaling not in SCALINGS:
            raise ValueError(f"scaling must be one of {SCALINGS}")

    def _log_stats(self, Y: np.ndarray) -> np.ndarray:
        return np.array([
            glr_statistic(y, self.A_, self.X_, self.P_, self.variant, self.rank_tol, self.projector_,
                          self.rank_).log_statistic
            for y in Y
        ])

    def fit(self, Y, y=None, *, P, A=None, X=None):
        self._validate_params()
        Y = _check_cubes(Y)
        self.P_ = check_complex_array(P, 2, "P")
        if Y.shape[2] != self.P_.shape[1]:
            raise ValueError(f"Y has {Y.shape[2]} pulses, P has {self.P_.shape[1]} columns")
        if self.variant == "clairvoyant" and (A is None or X is None):
            raise ValueError("the clairvoyant variant needs A and X")
        self.A_ = None if A is None else check_complex_array(A, 2, "A")
        self.X_ = None if X is None else check_complex_array(X, 2, "X")
        self.rank_ = effective_rank(self.P_, self.rank_tol)
        self.projector_ = row_space_projector(self.P_, self.rank_tol)
        self.n_subcarriers_, self.n_pulses_ = Y.shape[1], Y.shape[2]
        self.classes_ = np.array([0, 1])

        raw = self._log_stats(Y)
        self.ks_pvalues_ = {}
        for conv in DOF_CONVENTIONS:
            vals = [self._scale(x, conv) for x in raw]
            self.ks_pvalues_[conv] = float(sps.kstest(vals, "chi2", args=(chi2_dof(self.rank_, Y.shape[1], conv),)).pvalue)
        if self.dof_convention == "auto":
            self.convention_ = max(DOF_CONVENTIONS, key=lambda c: self.ks_pvalues_[c])
        else:
            self.convention_ = self.dof_convention
        self.threshold_ = threshold_for_pfa(self.pfa, self.rank_, self.n_subcarriers_, self.convention_)
        return self

    def _scale(self, log_stat: float, convention: str) -> float:
        return scaled_statistic(log_stat, self.rank_, self.n_subcarriers_, self.n_pulses_, convention, self.scaling)

    def _check_fitted(self):
        if not hasattr(self, "threshold_"):
            raise NotFittedError("GLRTDetector is not fitted")

    def statistic(self, Y) -> np.ndarray:
        """Scaled statistic on the chi-square reference scale."""
        self._check_fitted()
        Y = _check_cubes(Y)
        if Y.shape[1:] != (self.n_subcarriers_, self.n_pulses_):
            raise ValueError(f"Y cubes have shape {Y.shape[1:]}, fitted on {(self.n_subcarriers_, self.n_pulses_)}")
        return np.array([self._scale(x, self.convention_) for x in self._log_stats(Y)])

    def decision_function(self, Y) -> np.ndarray:
        return self.statistic(Y) - self.threshold_

    def predict(self, Y) -> np.ndarray:
        return (self.decision_function(Y) > 0).astype(int)

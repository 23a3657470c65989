"""Joint OFDM waveform and IRS phase-shift design.

The waveform step is a power iteration on the SNR matrix. The phase step
symmetrizes the quartic SNR into a bi-quadratic form g(v1, v2), loads it
diagonally, lifts the coupling penalty eta * ||v1 - v2||^2 into an extra
row/column, and ascends the resulting unimodular quadratic program with
power-method-like iterations (PMLI).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import eigsh

from irsradar.channel import ChannelStructure, assemble_X, build_Q1_Q2
from irsradar.detector import noncentrality
from irsradar.scene import SceneConfig, compute_path_params
from irsradar.signal_model import NoiseModel, doppler_matrix

log = logging.getLogger(__name__)

DENSE_EIG_LIMIT = 256


def lambda_max(M: np.ndarray, method: str = "auto", tol: float = 1e-10, max_iter: int = 1000) -> float:
    """Largest eigenvalue of a Hermitian matrix.

    ``method="power"`` runs a shifted power iteration (shift = Frobenius norm, so
    the iterated matrix is PSD and its dominant eigenvalue is the algebraically
    largest one); a run that hits ``max_iter`` falls back to the dense solver
    when the size allows. ``"auto"`` uses a dense solver up to
    ``DENSE_EIG_LIMIT`` and Lanczos above it.
    """
    n = M.shape[0]
    if method == "dense" or (method == "auto" and n <= DENSE_EIG_LIMIT):
        return float(np.linalg.eigvalsh(M)[-1])
    if method == "auto":
        return float(eigsh(M, k=1, which="LA", return_eigenvectors=False, tol=tol)[0])
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    shift = float(np.linalg.norm(M))
    if shift == 0.0:
        return 0.0
    B = M + shift * np.eye(n)
    x = np.random.default_rng(0).standard_normal(n) + 0j
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = B @ x
        lam_new = float(np.real(np.vdot(x, y)))
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return -shift
        x = y / ny
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new - shift
        lam = lam_new
    if n <= DENSE_EIG_LIMIT:
        return float(np.linalg.eigvalsh(M)[-1])
    log.warning("power iteration did not converge in %d steps", max_iter)
    return lam - shift


def build_W(a: np.ndarray, D: np.ndarray, P: np.ndarray, sigma: np.ndarray, C: np.ndarray) -> np.ndarray:
    """W = C^H U^H Acal U C with Acal = (P P^H)^T kron Sigma^-1 and U = Diag(vec(A D)).

    For matching gains, h^H W h is the noncentrality delta.
    """
    A = np.diag(a)
    acal = np.kron((P @ P.conj().T).T, np.linalg.inv(sigma))
    u = (A @ D).reshape(-1, order="F")
    UC = u[:, None] * C
    W = UC.conj().T @ acal @ UC
    return (W + W.conj().T) / 2


def build_E(v: np.ndarray, W: np.ndarray, S: np.ndarray) -> np.ndarray:
    """E(v) = (Q1^H W Q1 + Q2^H W Q2) / 2, so g(u, v) = u^H E(v) u and g(v, v) = delta."""
    Q1, Q2 = build_Q1_Q2(v, S)
    E = (Q1.conj().T @ W @ Q1 + Q2.conj().T @ W @ Q2) / 2
    return (E + E.conj().T) / 2


def diagonal_load(E: np.ndarray, method: str = "auto") -> tuple[np.ndarray, float]:
    """(lambda_max(E) I - E, lambda_max(E)); minimizing the loaded form over
    unimodular vectors maximizes the original one."""
    lam = lambda_max(E, method)
    return lam * np.eye(E.shape[0]) - E, lam


@dataclass(frozen=True)
class LiftedMatrix:
    """Loaded lifted matrix E_hat = lam_hat I - Ecal for the penalized UBQP.

    Ecal = [[E_tilde, -eta v], [-eta v^H, 2 eta n]] so that
    [u; 1]^H Ecal [u; 1] = u^H E_tilde u + eta ||u - v||^2 for unimodular u.
    """

    E_hat: np.ndarray
    E_cal: np.ndarray
    lam_hat: float

    def objective(self, v: np.ndarray) -> float:
        s = np.append(v, 1.0)
        return float(np.real(np.vdot(s, self.E_hat @ s)))


def lift(E_tilde: np.ndarray, v_other: np.ndarray, eta: float, method: str = "auto") -> LiftedMatrix:
    if eta < 0:
        raise ValueError("eta must be >= 0")
    n = E_tilde.shape[0]
    E_cal = np.zeros((n + 1, n + 1), dtype=complex)
    E_cal[:n, :n] = E_tilde
    E_cal[:n, n] = -eta * v_other
    E_cal[n, :n] = -eta * np.conj(v_other)
    E_cal[n, n] = 2 * eta * n
    lam_hat = lambda_max(E_cal, method)
    return LiftedMatrix(lam_hat * np.eye(n + 1) - E_cal, E_cal, lam_hat)


def _unit_phase(g: np.ndarray, previous: np.ndarray) -> np.ndarray:
    out = np.array(previous, dtype=complex, copy=True)
    nz = g != 0
    out[nz] = np.exp(1j * np.angle(g[nz]))
    return out


def pmli_step(G: np.ndarray, s: np.ndarray) -> np.ndarray:
    """s' = exp(j arg(G s)); entries with (G s)_i = 0 keep their phase."""
    return _unit_phase(G @ s, s)


def lifted_pmli_step(lifted: LiftedMatrix, v: np.ndarray) -> np.ndarray:
    """PMLI step on [v; 1] with the auxiliary entry pinned to 1."""
    g = lifted.E_hat @ np.append(v, 1.0)
    return _unit_phase(g[:-1], v)


def waveform_matrix(X: np.ndarray, P: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """(X P P^H X^H)^T elementwise-times Sigma^-1; a^H (.) a is delta."""
    XP = X @ P
    M = (XP @ XP.conj().T).T * np.linalg.inv(sigma)
    return (M + M.conj().T) / 2


def waveform_update(X: np.ndarray, P: np.ndarray, sigma: np.ndarray, a: np.ndarray,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """One normalized power step a <- M a / ||M a||."""
    M = waveform_matrix(X, P, sigma)
    y = M @ a
    ny = np.linalg.norm(y)
    if ny == 0.0:
        log.warning("waveform orthogonal to the SNR matrix range; restarting from a random waveform")
        rng = rng if rng is not None else np.random.default_rng()
        a = rng.standard_normal(a.size) + 1j * rng.standard_normal(a.size)
        y = M @ (a / np.linalg.norm(a))
        ny = np.linalg.norm(y)
        if ny == 0.0:
            raise ValueError("SNR matrix is zero; the waveform cannot be updated")
    return y / ny


def design_waveform(X: np.ndarray, P: np.ndarray, sigma: np.ndarray, a0: np.ndarray | None = None,
                    max_iter: int = 1000, tol: float = 1e-12) -> np.ndarray:
    """Power method run to convergence: dominant eigenvector of the SNR matrix."""
    a = np.full(X.shape[0], 1 / np.sqrt(X.shape[0]), dtype=complex) if a0 is None else np.asarray(a0, complex)
    for _ in range(max_iter):
        a_new = waveform_update(X, P, sigma, a)
        # align global phase before measuring the change
        ph = np.vdot(a_new, a)
        ph = ph / abs(ph) if ph != 0 else 1.0
        if np.linalg.norm(a_new * ph - a) <= tol:
            return a_new
        a = a_new
    return a


@dataclass(frozen=True)
class DesignProblem:
    """Everything the design objective depends on besides (a, v)."""

    channel: ChannelStructure
    P: np.ndarray
    sigma: np.ndarray

    @classmethod
    def from_scene(cls, scene: SceneConfig, noise: NoiseModel, alpha: np.ndarray | None = None,
                   include_delay: bool = True) -> "DesignProblem":
        P = doppler_matrix(compute_path_params(scene), scene, include_delay)
        return cls(ChannelStructure.from_scene(scene, alpha), P, noise.sigma)

    @property
    def n(self) -> int:
        return self.channel.M * self.channel.num_elements

    def X(self, v: np.ndarray) -> np.ndarray:
        return self.channel.X(v)

    def delta(self, a: np.ndarray, v: np.ndarray) -> float:
        return noncentrality(np.diag(a), self.channel.X(v), self.P, self.sigma)

    def W(self, a: np.ndarray) -> np.ndarray:
        return build_W(a, self.channel.D, self.P, self.sigma, self.channel.C)

    def delta_forms(self, a: np.ndarray, v: np.ndarray) -> dict[str, float]:
        """The same noncentrality evaluated four independent ways."""
        X = self.channel.X(v)
        M_a = waveform_matrix(X, self.P, self.sigma)
        W = self.W(a)
        Q1, _ = build_Q1_Q2(v, self.channel.S)
        h = Q1 @ v
        return {
            "trace": noncentrality(np.diag(a), X, self.P, self.sigma),
            "waveform": float(np.real(np.vdot(a, M_a @ a))),
            "gains": float(np.real(np.vdot(h, W @ h))),
            "phases": float(np.real(np.vdot(v, build_E(v, W, self.channel.S) @ v))),
        }


@dataclass
class DesignState:
    a: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    v: np.ndarray
    eta: float
    gamma1: int
    gamma2: int
    trace: list = field(default_factory=list)
    inner_trace: list = field(default_factory=list)
    phase_gap: float = 0.0

    @property
    def delta(self) -> float:
        return self.trace[-1][1]

    @property
    def initial_delta(self) -> float:
        return self.trace[0][1]


def random_phases(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.exp(2j * np.pi * rng.random(n))


def _phase_distance(u: np.ndarray, w: np.ndarray) -> float:
    return float(np.max(np.abs(np.angle(u * np.conj(w))))) if u.size else 0.0


def phase_side_update(problem: DesignProblem, W: np.ndarray, v_k: np.ndarray, v_fixed: np.ndarray,
                      eta: float, method: str = "auto") -> tuple[np.ndarray, float, float]:
    """One PMLI step on v_k with the other copy held fixed.

    Returns the new v_k and the lifted objective before and after the step.
    """
    E = build_E(v_fixed, W, problem.channel.S)
    E_tilde, _ = diagonal_load(E, method)
    lifted = lift(E_tilde, v_fixed, eta, method)
    before = lifted.objective(v_k)
    v_new = lifted_pmli_step(lifted, v_k)
    return v_new, before, lifted.objective(v_new)


def algorithm1(problem: DesignProblem, eta: float = 1.0, gamma1: int = 10, gamma2: int = 30,
               seed: int | np.random.Generator | None = 0, a0: np.ndarray | None = None,
               v0: np.ndarray | None = None, rtol: float = 1e-6) -> DesignState:
    """Alternate PMLI phase updates and power-method waveform updates.

    Inner sweeps update v1 from v2, then v2 from the fresh v1. After each inner
    loop the copy with the larger delta becomes the design, both copies restart
    from it, and one power step refreshes the waveform. Stops early when an
    outer iteration improves delta by less than ``rtol`` relatively.
    """
    if gamma1 < 1 or gamma2 < 1:
        raise ValueError("iteration budgets must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    L = problem.channel.L
    a = np.full(L, 1 / np.sqrt(L), dtype=complex) if a0 is None else np.asarray(a0, dtype=complex)
    v = random_phases(rng, problem.n) if v0 is None else np.asarray(v0, dtype=complex)
    state = DesignState(a=a, v1=v.copy(), v2=v.copy(), v=v.copy(), eta=eta, gamma1=gamma1, gamma2=gamma2)
    state.trace.append((0, problem.delta(a, v)))

    v1, v2 = v.copy(), v.copy()
    for s in range(gamma1):
        W = problem.W(a)
        for _ in range(gamma2):
            v1, b1, a1 = phase_side_update(problem, W, v1, v2, eta)
            v2, b2, a2 = phase_side_update(problem, W, v2, v1, eta)
            state.inner_trace.append((b1, a1))
            state.inner_trace.append((b2, a2))
        state.phase_gap = _phase_distance(v1, v2)
        v = v1 if problem.delta(a, v1) >= problem.delta(a, v2) else v2
        X = assemble_X(problem.channel.gains(v), problem.channel.alpha)
        a = waveform_update(X, problem.P, problem.sigma, a, rng)
        v1, v2 = v.copy(), v.copy()
        prev = state.trace[-1][1]
        cur = problem.delta(a, v)
        state.trace.append((s + 1, cur))
        if s > 0 and abs(cur - prev) <= rtol * max(abs(prev), 1e-300):
            break

    state.a, state.v, state.v1, state.v2 = a, v, v1, v2
    return state

"""IRS cascade channel.

Each NLoS gain is a quadratic form ``h_lm = v_m^T S_lm v_m`` in the IRS phase
shifts, with ``S_lm`` a rank-one matrix of steering-vector products. The
subcarrier gains are laid out block-diagonally in ``H`` (L x LM) and weighted
by the target reflectivities to form ``X = D * H``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from irsradar.scene import SceneConfig, path_angles, steering_vector


def _steering_set(scene: SceneConfig, m: int, l: int):
    arr = scene.irs[m - 1]
    f = scene.subcarrier_freqs[l]
    ang = path_angles(scene, m)
    b = lambda th: steering_vector(th, f, arr.num_elements, arr.spacing)  # noqa: E731
    return b(ang.theta_ir), b(ang.theta_ti), b(ang.theta_it), b(ang.theta_ri)


def build_rank1_factor(scene: SceneConfig, m: int, l: int) -> np.ndarray:
    """S_lm for IRS ``m`` (1-based) on subcarrier ``l`` (0-based)."""
    b_ir, b_ti, b_it, b_ri = _steering_set(scene, m, l)
    return np.outer(b_ir * b_ti, b_ri * b_it)


def channel_gain_direct(v_m: np.ndarray, scene: SceneConfig, m: int, l: int) -> complex:
    """h_lm evaluated as a product of two bilinear forms through Diag(v_m)."""
    v_m = np.asarray(v_m)
    b_ir, b_ti, b_it, b_ri = _steering_set(scene, m, l)
    if v_m.shape != b_ir.shape:
        raise ValueError(f"phase-shift vector has length {v_m.size}, IRS_{m} has {b_ir.size} elements")
    phi = np.diag(v_m)
    return complex((b_ir @ phi @ b_ti) * (b_it @ phi @ b_ri))


def build_C(L: int, M: int) -> np.ndarray:
    """Selector with vec(BlockDiag(h_1^T, ..., h_L^T)) = C @ h.

    Assembled term by term from the unit vectors e_i, their (M, L) reshapes E_i,
    the single-entry matrices aleph_l and C_i = e_i kron I_L.
    """
    if L < 1 or M < 1:
        raise ValueError("L and M must be >= 1")
    LM = L * M
    eye_LM = np.eye(LM)
    blocks = []
    for l in range(L):
        aleph = np.zeros((L, L))
        aleph[l, l] = 1.0
        upsilon = np.zeros((L * LM, M))
        for i in range(LM):
            e_i = eye_LM[:, [i]]
            C_i = np.kron(e_i, np.eye(L))
            E_i = e_i.reshape((M, L), order="F")
            upsilon += C_i @ np.kron(aleph.T @ E_i.T, np.eye(1))
        blocks.append(upsilon)
    return np.hstack(blocks)


def block_diag_rows(h: np.ndarray) -> np.ndarray:
    """BlockDiag(h_0^T, ..., h_{L-1}^T) for ``h`` of shape (L, M)."""
    L, M = h.shape
    H = np.zeros((L, L * M), dtype=np.result_type(h, complex))
    for l in range(L):
        H[l, l * M:(l + 1) * M] = h[l]
    return H


def assemble_X(h: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """X = D * H from per-(l, m) gains and reflectivities.

    ``h`` may be the stacked length-LM vector or an (L, M) array; ``alpha`` must
    have the matching (L, M) shape.
    """
    alpha = np.asarray(alpha)
    if alpha.ndim != 2:
        raise ValueError("alpha must be an (L, M) array")
    h = np.asarray(h)
    if h.ndim == 1:
        if h.size != alpha.size:
            raise ValueError(f"stacked h has {h.size} entries, expected {alpha.size}")
        h = h.reshape(alpha.shape)
    if h.shape != alpha.shape:
        raise ValueError(f"h shape {h.shape} does not match alpha shape {alpha.shape}")
    return block_diag_rows(alpha) * block_diag_rows(h)


def split_phases(v: np.ndarray, sizes) -> list[np.ndarray]:
    return np.split(np.asarray(v), np.cumsum(sizes)[:-1])


def build_Q1_Q2(v: np.ndarray, S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Phase-linear maps with Q1(v) @ v == Q2(v) @ v == h (stacked).

    ``S`` has shape (L, M, Nm, Nm). Row (l, m) of Q1(v) is (S_lm v_m)^T placed
    on the columns of IRS m; row (l, m) of Q2(v) is (S_lm^T v_m)^T.
    """
    L, M, Nm, _ = S.shape
    v = np.asarray(v)
    if v.size != M * Nm:
        raise ValueError(f"v has {v.size} entries, expected M*Nm = {M * Nm}")
    vm = v.reshape(M, Nm)
    left = np.einsum("lmij,mj->lmi", S, vm)
    right = np.einsum("lmji,mj->lmi", S, vm)
    Q1 = np.zeros((L, M, M, Nm), dtype=complex)
    Q2 = np.zeros((L, M, M, Nm), dtype=complex)
    idx = np.arange(M)
    Q1[:, idx, idx, :] = left
    Q2[:, idx, idx, :] = right
    return Q1.reshape(L * M, M * Nm), Q2.reshape(L * M, M * Nm)


def draw_reflectivities(rng: np.random.Generator, L: int, M: int) -> np.ndarray:
    """Standard complex Gaussian CN(0, 1) reflectivities, shape (L, M)."""
    return (rng.standard_normal((L, M)) + 1j * rng.standard_normal((L, M))) / np.sqrt(2)


@dataclass(frozen=True)
class ChannelStructure:
    """Cached rank-one factors and selector for a scene; v-dependent pieces are
    computed on demand."""

    S: np.ndarray
    C: np.ndarray
    alpha: np.ndarray

    @classmethod
    def from_scene(cls, scene: SceneConfig, alpha: np.ndarray | None = None) -> "ChannelStructure":
        L, M = scene.num_subcarriers, scene.num_irs
        if M == 0:
            raise ValueError("scene has no IRS")
        sizes = {arr.num_elements for arr in scene.irs}
        if len(sizes) != 1:
            raise ValueError("all IRS platforms must have the same number of elements")
        S = np.array([[build_rank1_factor(scene, m, l) for m in range(1, M + 1)] for l in range(L)])
        if alpha is None:
            alpha = np.ones((L, M), dtype=complex)
        alpha = np.asarray(alpha, dtype=complex)
        if alpha.shape != (L, M):
            raise ValueError(f"alpha must have shape {(L, M)}")
        return cls(S=S, C=build_C(L, M), alpha=alpha)

    @property
    def L(self) -> int:
        return self.S.shape[0]

    @property
    def M(self) -> int:
        return self.S.shape[1]

    @property
    def num_elements(self) -> int:
        return self.S.shape[2]

    @property
    def upsilon(self) -> list[np.ndarray]:
        M = self.M
        return [self.C[:, l * M:(l + 1) * M] for l in range(self.L)]

    @property
    def D(self) -> np.ndarray:
        return block_diag_rows(self.alpha)

    def with_alpha(self, alpha: np.ndarray) -> "ChannelStructure":
        return ChannelStructure(S=self.S, C=self.C, alpha=np.asarray(alpha, dtype=complex))

    def gains(self, v: np.ndarray) -> np.ndarray:
        """h_lm = v_m^T S_lm v_m as an (L, M) array."""
        vm = np.asarray(v).reshape(self.M, self.num_elements)
        return np.einsum("mi,lmij,mj->lm", vm, self.S, vm)

    def H(self, v: np.ndarray) -> np.ndarray:
        return block_diag_rows(self.gains(v))

    def X(self, v: np.ndarray) -> np.ndarray:
        return assemble_X(self.gains(v), self.alpha)

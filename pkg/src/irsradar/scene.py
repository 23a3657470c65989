"""2-D geometry of the radar, the IRS platforms and the moving target.

Delays, fractional Dopplers, per-IRS path angles and the space-frequency
steering vector of a uniform linear array all live here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

SPEED_OF_LIGHT = 3.0e8


class GeometryError(ValueError):
    """Raised when two scene objects coincide or a config is inconsistent."""


def _vec2(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (2,):
        raise GeometryError(f"{name} must be a 2-vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class IrsArray:
    """A passive ULA. ``orientation`` is the unit vector along the array axis."""

    first_element_pos: np.ndarray
    num_elements: int = 8
    spacing: float = 0.15
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0]))

    def __post_init__(self):
        object.__setattr__(self, "first_element_pos", _vec2(self.first_element_pos, "first_element_pos"))
        object.__setattr__(self, "orientation", _vec2(self.orientation, "orientation"))
        if int(self.num_elements) < 1:
            raise GeometryError("IRS needs at least one element")
        object.__setattr__(self, "num_elements", int(self.num_elements))
        if not self.spacing > 0:
            raise GeometryError("IRS element spacing must be positive")
        if abs(np.linalg.norm(self.orientation) - 1.0) > 1e-9:
            raise GeometryError("IRS orientation must be a unit vector")

    @property
    def normal(self) -> np.ndarray:
        """Broadside direction: the array axis rotated by +90 degrees."""
        u = self.orientation
        return np.array([-u[1], u[0]])


@dataclass(frozen=True)
class SceneConfig:
    radar_pos: np.ndarray
    irs: tuple
    target_pos: np.ndarray
    target_vel: np.ndarray
    carrier_freq: float = 1e9
    bandwidth: float = 100e6
    num_subcarriers: int = 4
    num_pulses: int = 50
    pri: float = 20e-6
    pulse_width: float = 50e-9

    def __post_init__(self):
        object.__setattr__(self, "radar_pos", _vec2(self.radar_pos, "radar_pos"))
        object.__setattr__(self, "target_pos", _vec2(self.target_pos, "target_pos"))
        object.__setattr__(self, "target_vel", _vec2(self.target_vel, "target_vel"))
        object.__setattr__(self, "irs", tuple(self.irs))
        L, N = int(self.num_subcarriers), int(self.num_pulses)
        if L < 1 or N < 1:
            raise GeometryError("num_subcarriers and num_pulses must be >= 1")
        object.__setattr__(self, "num_subcarriers", L)
        object.__setattr__(self, "num_pulses", N)
        if not self.bandwidth > 0:
            raise GeometryError("bandwidth must be positive")
        if not self.carrier_freq > self.bandwidth:
            raise GeometryError("carrier frequency must exceed the bandwidth (bandwidth-invariant Doppler)")
        if not np.isclose(self.bandwidth / (L + 1), 1.0 / self.pulse_width, rtol=1e-9):
            raise GeometryError(
                f"subcarrier spacing B/(L+1) = {self.bandwidth / (L + 1):.6g} Hz "
                f"does not match 1/T = {1.0 / self.pulse_width:.6g} Hz"
            )
        _check_distinct(self)

    @property
    def subcarrier_spacing(self) -> float:
        return self.bandwidth / (self.num_subcarriers + 1)

    @property
    def subcarrier_freqs(self) -> np.ndarray:
        return self.carrier_freq + np.arange(self.num_subcarriers) * self.subcarrier_spacing

    @property
    def num_irs(self) -> int:
        return len(self.irs)

    def with_irs(self, irs: Sequence[IrsArray]) -> "SceneConfig":
        """Copy of the scene with a different IRS deployment."""
        return SceneConfig(
            radar_pos=self.radar_pos,
            irs=tuple(irs),
            target_pos=self.target_pos,
            target_vel=self.target_vel,
            carrier_freq=self.carrier_freq,
            bandwidth=self.bandwidth,
            num_subcarriers=self.num_subcarriers,
            num_pulses=self.num_pulses,
            pri=self.pri,
            pulse_width=self.pulse_width,
        )

    @classmethod
    def default(cls, num_irs: int = 2, num_elements: int = 8, num_pulses: int = 50) -> "SceneConfig":
        """Reference scene: radar at origin, target 5 km north moving at [10, 10] m/s,
        IRS at [100, 100] m and [-100, 100] m."""
        spacing = SPEED_OF_LIGHT / (2 * 1e9)
        positions = [(100.0, 100.0), (-100.0, 100.0)][:num_irs]
        irs = tuple(IrsArray(np.array(p), num_elements, spacing) for p in positions)
        return cls(
            radar_pos=np.zeros(2),
            irs=irs,
            target_pos=np.array([0.0, 5000.0]),
            target_vel=np.array([10.0, 10.0]),
            num_pulses=num_pulses,
        )


def _check_distinct(scene: SceneConfig) -> None:
    named = [("radar", scene.radar_pos), ("target", scene.target_pos)]
    named += [(f"IRS_{m + 1}", arr.first_element_pos) for m, arr in enumerate(scene.irs)]
    for i in range(len(named)):
        for j in range(i + 1, len(named)):
            (na, pa), (nb, pb) = named[i], named[j]
            if na.startswith("IRS") and nb.startswith("IRS"):
                continue
            if np.linalg.norm(pa - pb) == 0.0:
                raise GeometryError(f"degenerate geometry: {na} and {nb} are co-located")


@dataclass(frozen=True)
class PathParams:
    """Delays (s) and fractional Dopplers for the LoS path (index 0) and the
    M radar-IRS-target-IRS-radar paths (indices 1..M)."""

    delays: np.ndarray
    dopplers: np.ndarray
    d_tr: float
    d_ri: np.ndarray
    d_it: np.ndarray

    @property
    def narrow_area_ratio(self) -> float:
        """max_m |tau_m - tau_0| / tau_0; small values mean tau_m ~ tau_0 is a fair approximation."""
        if len(self.delays) < 2:
            return 0.0
        return float(np.max(np.abs(self.delays[1:] - self.delays[0])) / self.delays[0])


def compute_path_params(scene: SceneConfig) -> PathParams:
    c = SPEED_OF_LIGHT
    rt, rr, vt = scene.target_pos, scene.radar_pos, scene.target_vel
    d_tr = float(np.linalg.norm(rt - rr))
    if d_tr == 0.0:
        raise GeometryError("degenerate geometry: radar and target are co-located")
    delays = [2 * d_tr / c]
    dopplers = [2 * vt @ (rt - rr) / d_tr / c]
    d_ri, d_it = [], []
    for m, arr in enumerate(scene.irs, start=1):
        ri = float(np.linalg.norm(arr.first_element_pos - rr))
        it = float(np.linalg.norm(rt - arr.first_element_pos))
        if ri == 0.0:
            raise GeometryError(f"degenerate geometry: radar and IRS_{m} are co-located")
        if it == 0.0:
            raise GeometryError(f"degenerate geometry: target and IRS_{m} are co-located")
        d_ri.append(ri)
        d_it.append(it)
        delays.append(2 * (ri + it) / c)
        dopplers.append(2 * vt @ (rt - arr.first_element_pos) / it / c)
    return PathParams(
        delays=np.array(delays),
        dopplers=np.array(dopplers, dtype=float),
        d_tr=d_tr,
        d_ri=np.array(d_ri),
        d_it=np.array(d_it),
    )


class PathAngles(NamedTuple):
    theta_ri: float
    theta_ir: float
    theta_ti: float
    theta_it: float
    grazing: bool


def _broadside_angle(arr: IrsArray, endpoint: np.ndarray) -> tuple[float, bool]:
    d = endpoint - arr.first_element_pos
    dist = np.linalg.norm(d)
    along = float(d @ arr.orientation) / dist
    across = float(d @ arr.normal) / dist
    grazing = abs(across) <= 1e-12
    if grazing:
        return float(np.copysign(np.pi / 2, along)), True
    return float(np.arcsin(np.clip(along, -1.0, 1.0))), False


def path_angles(scene: SceneConfig, m: int) -> PathAngles:
    """Angles of radar and target seen from IRS_m (1-based), measured from broadside.

    Only two of the four angles are distinct for a monostatic radar; all four are
    returned so callers can index them the same way the channel formula does.
    """
    if not 1 <= m <= scene.num_irs:
        raise IndexError(f"IRS index {m} out of range 1..{scene.num_irs}")
    arr = scene.irs[m - 1]
    th_r, g_r = _broadside_angle(arr, scene.radar_pos)
    th_t, g_t = _broadside_angle(arr, scene.target_pos)
    return PathAngles(th_r, th_r, th_t, th_t, g_r or g_t)


def steering_vector(theta: float, freq: float, num_elements: int, spacing: float) -> np.ndarray:
    if not freq > 0:
        raise ValueError("frequency must be positive")
    k = np.arange(num_elements)
    return np.exp(1j * 2 * np.pi * freq / SPEED_OF_LIGHT * spacing * k * np.sin(theta))

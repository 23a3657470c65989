"""Experiment configuration: dataclasses plus a strict TOML loader.

Every key in the file must map onto a field below; unknown keys and bad values
are reported with the section, key and (when it can be found) the line number.
"""
from __future__ import annotations

import dataclasses
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from irsradar.detector import DOF_CONVENTIONS, SCALINGS, VARIANTS
from irsradar.scene import GeometryError, IrsArray, SceneConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCENARIOS = ("los_only", "specular_2path", "irs_M1", "irs_M2")
ALPHA_MODES = ("random", "unit", "frozen", "zero")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseConfig:
    rho: float = 0.5


@dataclass(frozen=True)
class DetectorSettings:
    dof_convention: str = "auto"
    variant: str = "estimated"
    rank_tol: float = 1e-9
    scaling: str = "bartlett"


@dataclass(frozen=True)
class OptimizerSettings:
    eta: float = 1.0
    gamma1: int = 10
    gamma2: int = 30
    rtol: float = 1e-6


@dataclass(frozen=True)
class ExperimentConfig:
    scene: SceneConfig = field(default_factory=SceneConfig.default)
    scenario: str = "irs_M2"
    trials: int = 1000
    pfa_grid: tuple = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1)
    seed: int = 20230101
    target_delta: float = 10.0
    snr_reference: str = "los_only"
    alpha_mode: str = "random"
    include_delay: bool = True
    threads: int = 1
    calibration_trials: int = 2000
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    detector: DetectorSettings = field(default_factory=DetectorSettings)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)

    def __post_init__(self):
        object.__setattr__(self, "pfa_grid", tuple(float(p) for p in self.pfa_grid))
        _validate(self)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _validate(cfg: ExperimentConfig) -> None:
    def bad(key, msg):
        raise ConfigError(f"{key}: {msg}")

    if cfg.scenario not in SCENARIOS:
        bad("experiment.scenario", f"must be one of {SCENARIOS}, got {cfg.scenario!r}")
    if cfg.snr_reference not in SCENARIOS:
        bad("experiment.snr_reference", f"must be one of {SCENARIOS}")
    if cfg.alpha_mode not in ALPHA_MODES:
        bad("experiment.alpha_mode", f"must be one of {ALPHA_MODES}")
    if int(cfg.trials) < 100:
        bad("experiment.trials", f"must be >= 100, got {cfg.trials}")
    grid = np.asarray(cfg.pfa_grid)
    if grid.size == 0 or np.any(grid <= 0) or np.any(grid >= 1):
        bad("experiment.pfa_grid", "values must lie strictly inside (0, 1)")
    if np.any(np.diff(grid) <= 0):
        bad("experiment.pfa_grid", "values must be strictly increasing")
    if not 0 <= cfg.seed < 2**64:
        bad("experiment.seed", "must be an unsigned 64-bit integer")
    if not cfg.target_delta > 0:
        bad("experiment.target_delta", "must be positive")
    if int(cfg.threads) < 1:
        bad("experiment.threads", "must be >= 1")
    if int(cfg.calibration_trials) < 2000:
        bad("experiment.calibration_trials", f"must be >= 2000, got {cfg.calibration_trials}")
    if not 0 <= cfg.noise.rho < 1:
        bad("noise.rho", "must lie in [0, 1)")
    d = cfg.detector
    if d.dof_convention not in DOF_CONVENTIONS + ("auto",):
        bad("detector.dof_convention", f"must be one of {DOF_CONVENTIONS + ('auto',)}")
    if d.variant not in VARIANTS:
        bad("detector.variant", f"must be one of {VARIANTS}")
    if d.scaling not in SCALINGS:
        bad("detector.scaling", f"must be one of {SCALINGS}")
    if not 0 < d.rank_tol < 1:
        bad("detector.rank_tol", "must lie in (0, 1)")
    o = cfg.optimizer
    if o.eta < 0:
        bad("optimizer.eta", "must be >= 0")
    if o.gamma1 < 1 or o.gamma2 < 1:
        bad("optimizer.gamma1/gamma2", "must be >= 1")
    needed = {"irs_M1": 1, "irs_M2": 2, "specular_2path": 2}
    for name in {cfg.scenario, cfg.snr_reference}:
        if cfg.scene.num_irs < needed.get(name, 0):
            bad("scene.irs", f"scenario {name} needs {needed[name]} IRS platforms, scene has {cfg.scene.num_irs}")


_SCENE_KEYS = {"radar_pos", "target_pos", "target_vel", "carrier_freq", "bandwidth", "num_subcarriers",
               "num_pulses", "pri", "pulse_width", "irs"}
_IRS_KEYS = {"position", "num_elements", "spacing", "orientation"}
_EXPERIMENT_KEYS = {"scene_file", "scenario", "trials", "pfa_grid", "seed", "target_delta", "snr_reference",
                    "alpha_mode", "include_delay", "threads", "calibration_trials"}
_SECTIONS = {
    "noise": (NoiseConfig, {"rho"}),
    "detector": (DetectorSettings, {"dof_convention", "variant", "rank_tol", "scaling"}),
    "optimizer": (OptimizerSettings, {"eta", "gamma1", "gamma2", "rtol"}),
}


class _Locator:
    def __init__(self, path: str, text: str):
        self.path = path
        self.lines = text.splitlines()

    def where(self, key: str) -> str:
        pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
        for i, line in enumerate(self.lines, start=1):
            if pat.match(line):
                return f"{self.path}:{i}"
        return self.path

    def fail(self, section: str, key: str, msg: str):
        raise ConfigError(f"{self.where(key)}: [{section}] {key}: {msg}")


def _check_keys(loc: _Locator, section: str, table: dict, allowed: set) -> None:
    for key in table:
        if key not in allowed:
            loc.fail(section, key, f"unknown key (allowed: {', '.join(sorted(allowed))})")


def scene_from_dict(data: dict, loc: _Locator) -> SceneConfig:
    _check_keys(loc, "scene", data, _SCENE_KEYS)
    irs = []
    for k, entry in enumerate(data.get("irs", [])):
        _check_keys(loc, f"scene.irs[{k}]", entry, _IRS_KEYS)
        if "position" not in entry:
            loc.fail(f"scene.irs[{k}]", "position", "missing")
        kwargs = {"first_element_pos": entry["position"]}
        for key in ("num_elements", "spacing", "orientation"):
            if key in entry:
                kwargs[key] = entry[key]
        try:
            irs.append(IrsArray(**kwargs))
        except (GeometryError, TypeError, ValueError) as exc:
            loc.fail(f"scene.irs[{k}]", "position", str(exc))
    kwargs = {k: v for k, v in data.items() if k != "irs"}
    base = SceneConfig.default()
    for key in ("radar_pos", "target_pos", "target_vel"):
        kwargs.setdefault(key, getattr(base, key))
    try:
        return SceneConfig(irs=tuple(irs), **kwargs)
    except (GeometryError, TypeError, ValueError) as exc:
        raise ConfigError(f"{loc.path}: [scene] {exc}") from exc


def _parse(path: Path) -> tuple[dict, _Locator]:
    text = path.read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return data, _Locator(str(path), text)


def load_scene(path) -> SceneConfig:
    data, loc = _parse(Path(path))
    _check_keys(loc, "<root>", data, {"scene"})
    return scene_from_dict(data.get("scene", {}), loc)


def load_config(path) -> ExperimentConfig:
    """Read an experiment document; missing keys take the reference defaults."""
    path = Path(path)
    data, loc = _parse(path)
    _check_keys(loc, "<root>", data, {"scene", "experiment"} | set(_SECTIONS))
    exp = dict(data.get("experiment", {}))
    _check_keys(loc, "experiment", exp, _EXPERIMENT_KEYS)

    kwargs = {}
    scene_file = exp.pop("scene_file", None)
    if scene_file is not None and "scene" in data:
        loc.fail("experiment", "scene_file", "give either scene_file or an inline [scene] table, not both")
    if scene_file is not None:
        kwargs["scene"] = load_scene((path.parent / scene_file).resolve())
    elif "scene" in data:
        kwargs["scene"] = scene_from_dict(data["scene"], loc)

    for name, (cls, allowed) in _SECTIONS.items():
        if name in data:
            _check_keys(loc, name, data[name], allowed)
            try:
                kwargs[name] = cls(**data[name])
            except TypeError as exc:
                raise ConfigError(f"{loc.path}: [{name}] {exc}") from exc
    if "pfa_grid" in exp:
        exp["pfa_grid"] = tuple(exp["pfa_grid"])
    try:
        return ExperimentConfig(**kwargs, **exp)
    except ConfigError as exc:
        key = str(exc).split(":", 1)[0].split(".")[-1]
        raise ConfigError(f"{loc.where(key)}: {exc}") from exc


def scene_to_dict(scene: SceneConfig) -> dict:
    return {
        "radar_pos": scene.radar_pos.tolist(),
        "target_pos": scene.target_pos.tolist(),
        "target_vel": scene.target_vel.tolist(),
        "carrier_freq": scene.carrier_freq,
        "bandwidth": scene.bandwidth,
        "num_subcarriers": scene.num_subcarriers,
        "num_pulses": scene.num_pulses,
        "pri": scene.pri,
        "pulse_width": scene.pulse_width,
        "irs": [
            {
                "position": arr.first_element_pos.tolist(),
                "num_elements": arr.num_elements,
                "spacing": arr.spacing,
                "orientation": arr.orientation.tolist(),
            }
            for arr in scene.irs
        ],
    }


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Plain-data view of a config, used for run manifests."""
    return {
        "scene": scene_to_dict(cfg.scene),
        "experiment": {
            "scenario": cfg.scenario,
            "trials": cfg.trials,
            "pfa_grid": list(cfg.pfa_grid),
            "seed": cfg.seed,
            "target_delta": cfg.target_delta,
            "snr_reference": cfg.snr_reference,
            "alpha_mode": cfg.alpha_mode,
            "include_delay": cfg.include_delay,
            "threads": cfg.threads,
            "calibration_trials": cfg.calibration_trials,
        },
        "noise": dataclasses.asdict(cfg.noise),
        "detector": dataclasses.asdict(cfg.detector),
        "optimizer": dataclasses.asdict(cfg.optimizer),
    }

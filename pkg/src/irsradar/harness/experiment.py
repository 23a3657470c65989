"""Monte Carlo RoC experiments, DoF calibration and the four-scenario suite.

Every trial draws from its own Philox stream keyed by (seed, stream, trial),
so results do not depend on how trials are split across workers. Within a
trial the H0 and H1 noise are drawn before the reflectivities, which gives all
scenarios common noise realizations for a given trial index.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sps

from irsradar.channel import assemble_X, draw_reflectivities
from irsradar.detector import (
    DOF_CONVENTIONS,
    chi2_dof,
    effective_rank,
    glr_statistic,
    noncentrality,
    row_space_projector,
    scaled_statistic,
    theoretical_pd,
)
from irsradar.harness.config import SCENARIOS, ExperimentConfig, config_to_dict
from irsradar.optimizer import DesignProblem, DesignState, algorithm1, design_waveform, random_phases
from irsradar.scene import compute_path_params
from irsradar.signal_model import NoiseModel, complex_normal, doppler_rows, make_noise_model
from irsradar.stats import chi2_isf

log = logging.getLogger(__name__)

DESIGN_STREAM = 1
TRIAL_STREAM = 2
CALIBRATION_STREAM = 3

CSV_HEADER = ["scenario", "pfa_target", "pfa_emp", "pfa_lo", "pfa_hi", "pd_emp", "pd_lo", "pd_hi",
              "pd_theory", "delta", "trials", "seed"]


class CalibrationError(RuntimeError):
    def __init__(self, message: str, diagnostic: dict):
        super().__init__(message)
        self.diagnostic = diagnostic


def trial_rng(seed: int, stream: int, trial: int) -> np.random.Generator:
    """Counter-based generator for one trial, independent of execution order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream, trial])))


def wilson_interval(successes: int, n: int) -> tuple[float, float]:
    ci = sps.binomtest(int(successes), int(n)).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class ScenarioModel:
    """A fully specified detection scenario: waveform, path gains and Doppler matrix."""

    name: str
    a: np.ndarray
    gains: np.ndarray
    P: np.ndarray
    rank: int
    projector: np.ndarray
    initial_delta: float
    design: DesignState | None = None

    @property
    def L(self) -> int:
        return self.P.shape[0] // self.gains.shape[1]

    @property
    def N(self) -> int:
        return self.P.shape[1]

    def X(self, alpha: np.ndarray) -> np.ndarray:
        return assemble_X(self.gains, alpha)

    def nominal_delta(self, sigma: np.ndarray) -> float:
        return noncentrality(np.diag(self.a), self.X(np.ones_like(self.gains)), self.P, sigma)


def _path_dopplers(name: str, dopplers: np.ndarray) -> np.ndarray:
    if name == "los_only":
        return dopplers[:1]
    if name == "irs_M1":
        return dopplers[1:2]
    return dopplers[1:3]


def _initial_setup(name: str, cfg: ExperimentConfig):
    """Initial waveform, gains, Doppler matrix and (for IRS scenarios) the design problem
    at unit noise power and unit reflectivities."""
    scene = cfg.scene
    L = scene.num_subcarriers
    pp = compute_path_params(scene)
    P = doppler_rows(_path_dopplers(name, pp.dopplers), scene.subcarrier_freqs, pp.delays[0],
                     scene.num_pulses, scene.pri, cfg.include_delay)
    a0 = np.full(L, 1 / np.sqrt(L), dtype=complex)
    if name in ("los_only", "specular_2path"):
        paths = 1 if name == "los_only" else 2
        return a0, np.ones((L, paths), dtype=complex), P, None, None
    M = 1 if name == "irs_M1" else 2
    sub = scene.with_irs(scene.irs[:M])
    unit = make_noise_model(L, 1.0, cfg.noise.rho)
    problem = DesignProblem.from_scene(sub, unit, include_delay=cfg.include_delay)
    v0 = random_phases(trial_rng(cfg.seed, DESIGN_STREAM, SCENARIOS.index(name)), problem.n)
    return a0, problem.channel.gains(v0), P, problem, v0


def noise_for(cfg: ExperimentConfig) -> NoiseModel:
    """Noise model whose power puts the reference scenario's initial delta at the target."""
    L = cfg.scene.num_subcarriers
    unit = make_noise_model(L, 1.0, cfg.noise.rho)
    a0, gains, P, _, _ = _initial_setup(cfg.snr_reference, cfg)
    ref = noncentrality(np.diag(a0), assemble_X(gains, np.ones_like(gains)), P, unit.sigma)
    if ref <= 0:
        raise ValueError(f"reference scenario {cfg.snr_reference} has zero signal energy")
    return make_noise_model(L, ref / cfg.target_delta, cfg.noise.rho)


def build_scenario(name: str, cfg: ExperimentConfig, noise: NoiseModel) -> ScenarioModel:
    """Design the transmit side of a scenario under nominal (unit) reflectivities.

    IRS scenarios run the joint design; the two baselines only have a waveform
    to choose and use the converged power method.
    """
    a0, gains0, P, problem, v0 = _initial_setup(name, cfg)
    sigma = noise.sigma
    unit_alpha = np.ones_like(gains0)
    init_delta = noncentrality(np.diag(a0), assemble_X(gains0, unit_alpha), P, sigma)
    design = None
    if problem is None:
        a, gains = design_waveform(assemble_X(gains0, unit_alpha), P, sigma), gains0
    else:
        problem = DesignProblem(problem.channel, problem.P, sigma)
        o = cfg.optimizer
        design = algorithm1(problem, eta=o.eta, gamma1=o.gamma1, gamma2=o.gamma2,
                            seed=trial_rng(cfg.seed, DESIGN_STREAM, 100 + SCENARIOS.index(name)),
                            v0=v0, rtol=o.rtol)
        a, gains = design.a, problem.channel.gains(design.v)
    tol = cfg.detector.rank_tol
    return ScenarioModel(name, a, gains, P, effective_rank(P, tol), row_space_projector(P, tol), init_delta, design)


def _draw_alpha(mode: str, rng: np.random.Generator, shape, frozen: np.ndarray | None) -> np.ndarray:
    if mode == "random":
        return draw_reflectivities(rng, *shape)
    if mode == "unit":
        return np.ones(shape, dtype=complex)
    if mode == "zero":
        return np.zeros(shape, dtype=complex)
    return frozen


def _draw_trial(model: ScenarioModel, seed: int, stream: int, trial: int, alpha_mode: str,
                frozen: np.ndarray | None):
    """Noise for H0 and H1, then reflectivities, in that fixed order."""
    rng = trial_rng(seed, stream, trial)
    n0 = complex_normal(rng, (model.L, model.N))
    n1 = complex_normal(rng, (model.L, model.N))
    return n0, n1, _draw_alpha(alpha_mode, rng, model.gains.shape, frozen)


def frozen_alpha(cfg: ExperimentConfig, shape) -> np.ndarray | None:
    if cfg.alpha_mode != "frozen":
        return None
    return draw_reflectivities(trial_rng(cfg.seed, DESIGN_STREAM, 999), *shape)


def trial_observation(model: ScenarioModel, noise: NoiseModel, cfg: ExperimentConfig, trial: int,
                      hypothesis: str = "H1", stream: int = TRIAL_STREAM) -> np.ndarray:
    """The data matrix Y seen by the detector in one Monte Carlo trial."""
    n0, n1, alpha = _draw_trial(model, cfg.seed, stream, trial, cfg.alpha_mode,
                                frozen_alpha(cfg, model.gains.shape))
    if hypothesis == "H0":
        return noise.chol @ n0
    if hypothesis != "H1":
        raise ValueError("hypothesis must be 'H0' or 'H1'")
    return np.diag(model.a) @ model.X(alpha) @ model.P + noise.chol @ n1


def _run_chunk(args) -> np.ndarray:
    model, noise, cfg_bits, trials, with_h1 = args
    seed, stream, alpha_mode, variant, rank_tol, frozen = cfg_bits
    A = np.diag(model.a)
    out = np.full((len(trials), 3), np.nan)
    for i, t in enumerate(trials):
        n0, n1, alpha = _draw_trial(model, seed, stream, t, alpha_mode, frozen)
        X = model.X(alpha)
        g0 = glr_statistic(noise.chol @ n0, A, X, model.P, variant, rank_tol, model.projector, model.rank)
        out[i, 0] = g0.log_statistic
        if with_h1:
            y1 = A @ X @ model.P + noise.chol @ n1
            g1 = glr_statistic(y1, A, X, model.P, variant, rank_tol, model.projector, model.rank)
            out[i, 1] = g1.log_statistic
            out[i, 2] = noncentrality(A, X, model.P, noise.sigma)
    return out


def simulate(model: ScenarioModel, noise: NoiseModel, cfg: ExperimentConfig, trials: int, stream: int,
             with_h1: bool = True) -> np.ndarray:
    """Per-trial (N ln T under H0, N ln T under H1, delta), one row per trial index."""
    frozen = frozen_alpha(cfg, model.gains.shape)
    bits = (cfg.seed, stream, cfg.alpha_mode, cfg.detector.variant, cfg.detector.rank_tol, frozen)
    idx = np.arange(trials)
    workers = min(int(cfg.threads), trials)
    if workers <= 1:
        return _run_chunk((model, noise, bits, idx, with_h1))
    chunks = np.array_split(idx, workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, [(model, noise, bits, c, with_h1) for c in chunks]))
    return np.vstack(parts)


@dataclass(frozen=True)
class RocRecord:
    scenario: str
    pfa_target: float
    pfa_emp: float
    pfa_lo: float
    pfa_hi: float
    pd_emp: float
    pd_lo: float
    pd_hi: float
    pd_theory: float
    delta: float
    trials: int
    seed: int

    def row(self) -> list[str]:
        return [self.scenario] + [repr(float(getattr(self, k))) for k in CSV_HEADER[1:10]] + [
            str(self.trials), str(self.seed)]


def roc_records(model: ScenarioModel, sims: np.ndarray, cfg: ExperimentConfig, convention: str) -> list[RocRecord]:
    L, N, r = model.L, model.N, model.rank
    scale = lambda x: scaled_statistic(x, r, L, N, convention, cfg.detector.scaling)  # noqa: E731
    s0 = np.array([scale(x) for x in sims[:, 0]])
    s1 = np.array([scale(x) for x in sims[:, 1]])
    deltas = sims[:, 2]
    n = len(sims)
    records = []
    for pfa in cfg.pfa_grid:
        gamma = chi2_isf(pfa, chi2_dof(r, L, convention))
        k0 = int(np.sum(s0 > gamma))
        k1 = int(np.sum(s1 > gamma))
        pd_theory = float(np.mean([theoretical_pd(d, pfa, r, L, convention) for d in deltas]))
        records.append(RocRecord(model.name, pfa, k0 / n, *wilson_interval(k0, n), k1 / n,
                                 *wilson_interval(k1, n), pd_theory, float(np.mean(deltas)), n, cfg.seed))
    return records


def write_csv(records: list[RocRecord], path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.row())
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> list[RocRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        RocRecord(r["scenario"], *(float(r[k]) for k in CSV_HEADER[1:10]), int(r["trials"]), int(r["seed"]))
        for r in rows
    ]


@dataclass(frozen=True)
class CalibrationResult:
    convention: str | None
    pvalues: dict
    ks_distances: dict
    trials: int
    rank: int
    num_subcarriers: int
    scenario: str
    skipped_reason: str | None = None
    empirical_pfa: tuple = ()

    def to_dict(self) -> dict:
        return {
            "convention": self.convention,
            "pvalues": self.pvalues,
            "ks_distances": self.ks_distances,
            "trials": self.trials,
            "rank": self.rank,
            "num_subcarriers": self.num_subcarriers,
            "scenario": self.scenario,
            "skipped_reason": self.skipped_reason,
            "empirical_pfa": [list(x) for x in self.empirical_pfa],
        }


def null_statistics(model: ScenarioModel, noise: NoiseModel, cfg: ExperimentConfig, trials: int) -> np.ndarray:
    """N ln T over H0-only trials on the calibration stream."""
    return simulate(model, noise, cfg, trials, CALIBRATION_STREAM, with_h1=False)[:, 0]


def calibrate_dof(cfg: ExperimentConfig, trials: int | None = None, scenario: str | None = None,
                  out_dir=None, model: ScenarioModel | None = None,
                  noise: NoiseModel | None = None) -> CalibrationResult:
    """Choose the real-DoF convention whose chi-square law best fits H0 data (KS p-value)."""
    trials = int(trials or cfg.calibration_trials)
    scenario = scenario or cfg.scenario
    noise = noise or noise_for(cfg)
    model = model or build_scenario(scenario, cfg, noise)
    L, N, r = model.L, model.N, model.rank

    if cfg.detector.variant == "clairvoyant" and cfg.alpha_mode == "zero":
        reason = "clairvoyant statistic with X = 0 is identically T = 1 under H0"
        log.info("calibration skipped: %s", reason)
        return CalibrationResult(None, {}, {}, trials, r, L, scenario, reason)

    raw = null_statistics(model, noise, cfg, trials)
    pvalues, dists, scaled = {}, {}, {}
    for conv in DOF_CONVENTIONS:
        vals = np.array([scaled_statistic(x, r, L, N, conv, cfg.detector.scaling) for x in raw])
        res = sps.kstest(vals, "chi2", args=(chi2_dof(r, L, conv),))
        pvalues[conv], dists[conv], scaled[conv] = float(res.pvalue), float(res.statistic), vals
    best = max(DOF_CONVENTIONS, key=lambda c: pvalues[c])
    if pvalues[best] < 1e-4:
        qs = [0.5, 0.9, 0.99]
        diag = {
            conv: {
                "empirical_quantiles": np.quantile(scaled[conv], qs).tolist(),
                "chi2_quantiles": [float(sps.chi2.ppf(q, chi2_dof(r, L, conv))) for q in qs],
                "ks_pvalue": pvalues[conv],
            }
            for conv in DOF_CONVENTIONS
        }
        raise CalibrationError(f"both DoF conventions rejected (best p = {pvalues[best]:.3g})", diag)
    emp = []
    for pfa in cfg.pfa_grid:
        k = int(np.sum(scaled[best] > chi2_isf(pfa, chi2_dof(r, L, best))))
        emp.append((pfa, k / trials, *wilson_interval(k, trials)))
    result = CalibrationResult(best, pvalues, dists, trials, r, L, scenario, None, tuple(emp))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest = {"calibration": result.to_dict(), "config": config_to_dict(cfg)}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return result


def _resolve_convention(cfg, model, noise, out_dir) -> tuple[str, CalibrationResult | None]:
    conv = cfg.detector.dof_convention
    if conv != "auto":
        return conv, None
    cal = calibrate_dof(cfg, scenario=model.name, out_dir=out_dir, model=model, noise=noise)
    if cal.convention is None:
        return "2rL", cal
    return cal.convention, cal


def run_roc(cfg: ExperimentConfig, out_dir=None, scenario: str | None = None,
            noise: NoiseModel | None = None, convention: str | None = None) -> list[RocRecord]:
    """Monte Carlo RoC for one scenario; writes ``roc_<scenario>.csv`` when ``out_dir`` is given."""
    scenario = scenario or cfg.scenario
    noise = noise or noise_for(cfg)
    model = build_scenario(scenario, cfg, noise)
    if convention is None:
        convention, _ = _resolve_convention(cfg, model, noise, out_dir)
    sims = simulate(model, noise, cfg, int(cfg.trials), TRIAL_STREAM)
    records = roc_records(model, sims, cfg, convention)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        write_csv(records, Path(out_dir) / f"roc_{scenario}.csv")
        lines = ["pfa_target\tpfa_emp\tpd_emp\tpd_theory"]
        lines += [f"{r.pfa_target!r}\t{r.pfa_emp!r}\t{r.pd_emp!r}\t{r.pd_theory!r}" for r in records]
        (Path(out_dir) / f"roc_{scenario}.tsv").write_text("\n".join(lines) + "\n")
    return records


ORDERINGS = (("irs_M2", "irs_M1"), ("irs_M1", "los_only"), ("irs_M2", "specular_2path"))


def ordering_flag(hi: RocRecord, lo: RocRecord) -> str:
    """"true" when hi >= lo, "tie" on equality or within hi's Wilson interval, else "false"."""
    if hi.pd_emp == lo.pd_emp:
        return "tie"
    if hi.pd_emp > lo.pd_emp:
        return "true"
    return "tie" if hi.pd_hi >= lo.pd_emp else "false"


@dataclass(frozen=True)
class SuiteReport:
    records: dict
    ordering: list
    convention: str
    sigma2: float
    deltas: dict

    def passed(self, pfas=None) -> bool:
        rows = [o for o in self.ordering if pfas is None or any(np.isclose(o["pfa"], p) for p in pfas)]
        return all(flag != "false" for o in rows for flag in o["flags"].values())


def run_scenario_suite(cfg: ExperimentConfig, out_dir=None) -> SuiteReport:
    """Run all four scenarios on a common noise power and check the RoC ordering."""
    noise = noise_for(cfg)
    models = {name: build_scenario(name, cfg, noise) for name in SCENARIOS}
    convention, _ = _resolve_convention(cfg, models[cfg.scenario], noise, out_dir)
    records = {}
    for name, model in models.items():
        sims = simulate(model, noise, cfg, int(cfg.trials), TRIAL_STREAM)
        records[name] = roc_records(model, sims, cfg, convention)
    ordering = []
    for i, pfa in enumerate(cfg.pfa_grid):
        flags = {f"{a}>={b}": ordering_flag(records[a][i], records[b][i]) for a, b in ORDERINGS}
        ordering.append({"pfa": pfa, "flags": flags})
    report = SuiteReport(records, ordering, convention, noise.sigma2,
                         {n: float(np.mean([r.delta for r in recs])) for n, recs in records.items()})
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv([r for name in SCENARIOS for r in records[name]], out / "suite.csv")
        lines = ["pfa\t" + "\t".join(f"pd_{n}\tpd_theory_{n}" for n in SCENARIOS)]
        for i, pfa in enumerate(cfg.pfa_grid):
            cols = [f"{records[n][i].pd_emp!r}\t{records[n][i].pd_theory!r}" for n in SCENARIOS]
            lines.append(f"{pfa!r}\t" + "\t".join(cols))
        (out / "suite_plot.tsv").write_text("\n".join(lines) + "\n")
        (out / "ordering.json").write_text(json.dumps(
            {"convention": convention, "sigma2": noise.sigma2, "ordering": ordering}, indent=2))
    return report


def design_problem(cfg: ExperimentConfig, noise: NoiseModel, scenario: str | None = None) -> DesignProblem:
    """Design problem of an IRS scenario at the experiment's noise level."""
    scenario = scenario or cfg.scenario
    if scenario not in ("irs_M1", "irs_M2"):
        raise ValueError(f"scenario {scenario} has no IRS phase shifts to design")
    _, _, _, problem, _ = _initial_setup(scenario, cfg)
    return DesignProblem(problem.channel, problem.P, noise.sigma)


def design_to_dict(model: ScenarioModel, noise: NoiseModel, cfg: ExperimentConfig) -> dict:
    st = model.design
    return {
        "scenario": model.name,
        "seed": cfg.seed,
        "sigma2": noise.sigma2,
        "a": [[float(z.real), float(z.imag)] for z in st.a],
        "v": [float(p) for p in np.angle(st.v)],
        "delta": st.delta,
        "delta_trace": [[int(i), float(d)] for i, d in st.trace],
        "phase_gap": st.phase_gap,
    }


def run_design(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Run the joint design for the configured IRS scenario; writes ``design_<scenario>.json``."""
    if cfg.scenario not in ("irs_M1", "irs_M2"):
        raise ValueError(f"scenario {cfg.scenario} has no IRS phase shifts to design")
    noise = noise_for(cfg)
    doc = design_to_dict(build_scenario(cfg.scenario, cfg, noise), noise, cfg)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / f"design_{cfg.scenario}.json").write_text(json.dumps(doc, indent=2))
    return doc


def load_design(path) -> tuple[str, np.ndarray, np.ndarray]:
    """(scenario, a, v) from a design file."""
    doc = json.loads(Path(path).read_text())
    try:
        a = np.array([complex(re, im) for re, im in doc["a"]])
        v = np.exp(1j * np.asarray(doc["v"], dtype=float))
        return doc["scenario"], a, v
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: malformed design file ({exc})") from exc


def design_delta(cfg: ExperimentConfig, path) -> float:
    """Noncentrality of a stored design under the experiment's scene and noise."""
    scenario, a, v = load_design(path)
    problem = design_problem(cfg, noise_for(cfg), scenario)
    if a.size != problem.channel.L or v.size != problem.n:
        raise ValueError(f"{path}: design sizes ({a.size}, {v.size}) do not match the scene "
                         f"({problem.channel.L}, {problem.n})")
    return problem.delta(a, v)

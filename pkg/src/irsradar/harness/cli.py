"""Command line entry point: ``irsradar {design,roc,suite,calibrate,delta}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from irsradar.harness import experiment as ex
from irsradar.harness.config import ConfigError, ExperimentConfig, load_config
from irsradar.signal_model import write_y_dump

log = logging.getLogger("irsradar")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML experiment file (defaults: reference scene)")
    p.add_argument("--seed", type=int, help="override the experiment seed (unsigned 64-bit)")
    p.add_argument("--trials", type=int, help="override the number of Monte Carlo trials")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--threads", type=int, help="worker processes for the trial loop")
    p.add_argument("--scenario", choices=ex.SCENARIOS, help="override the scenario")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irsradar", description="Multi-IRS OFDM radar experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("design", help="joint waveform / phase-shift design, writes a design JSON"))
    roc = sub.add_parser("roc", help="Monte Carlo RoC for one scenario")
    _common(roc)
    roc.add_argument("--dump-y", type=Path, help="write the first H1 data matrix as a binary Y dump")
    _common(sub.add_parser("suite", help="four-scenario comparison with ordering flags"))
    _common(sub.add_parser("calibrate", help="choose the DoF convention from H0 trials"))
    delta = sub.add_parser("delta", help="print the noncentrality of a design file")
    _common(delta)
    delta.add_argument("--design", type=Path, required=True, help="design JSON written by 'design'")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["calibration_trials" if args.command == "calibrate" else "trials"] = args.trials
    if args.threads is not None:
        changes["threads"] = args.threads
    if args.scenario is not None:
        changes["scenario"] = args.scenario
    return cfg.replace(**changes) if changes else cfg


def _print_records(records) -> None:
    print(",".join(ex.CSV_HEADER))
    for rec in records:
        print(",".join(rec.row()))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        out = args.out
        if args.command == "design":
            doc = ex.run_design(cfg, out)
            print(f"{doc['scenario']}: delta {doc['delta_trace'][0][1]:.6g} -> {doc['delta']:.6g}")
        elif args.command == "roc":
            records = ex.run_roc(cfg, out)
            _print_records(records)
            if args.dump_y is not None:
                noise = ex.noise_for(cfg)
                model = ex.build_scenario(cfg.scenario, cfg, noise)
                write_y_dump(args.dump_y, ex.trial_observation(model, noise, cfg, 0))
        elif args.command == "suite":
            report = ex.run_scenario_suite(cfg, out)
            _print_records([r for name in ex.SCENARIOS for r in report.records[name]])
            for row in report.ordering:
                flags = " ".join(f"{k}={v}" for k, v in row["flags"].items())
                print(f"# pfa={row['pfa']:g} {flags}")
        elif args.command == "calibrate":
            result = ex.calibrate_dof(cfg, out_dir=out)
            print(json.dumps(result.to_dict(), indent=2))
        elif args.command == "delta":
            print(repr(ex.design_delta(cfg, args.design)))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ex.CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        print(json.dumps(exc.diagnostic, indent=2), file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

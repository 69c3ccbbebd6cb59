"""Command line entry point.

    obdpd preset NAME                       print a preset config (fig1, fig2a, fig2b, scenario_h)
    obdpd heatmap --config FILE [--seed S]  objective surfaces of one realisation
    obdpd sweep --config FILE --axis snr|n  RMS miss distance sweep
    obdpd trial --config FILE --index I     one Monte Carlo trial, JSON lines on stdout
    obdpd selftest [--fault F]              internal consistency suites

Exit codes: 0 success, 1 invalid config, 2 numerical failure budget
exceeded, 3 self-test failure.
"""

import argparse
import json
import logging
import sys

from .errors import NumericalFailure
from .harness.config import PRESETS, ConfigError, ExperimentConfig
from .harness.experiment import (
    heatmap,
    run_trial,
    sweep,
    write_heatmap_outputs,
    write_sweep_outputs,
)
from .harness.selftest import FAULTS, run_selftest, suite_status

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_SELFTEST = 0, 1, 2, 3


def _load(args):
    cfg = ExperimentConfig.load(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    if getattr(args, "out_dir", None):
        cfg = cfg.replace(output_dir=args.out_dir)
    return cfg


def cmd_preset(args):
    sys.stdout.write(PRESETS[args.name].to_toml())
    return EXIT_OK


def cmd_heatmap(args):
    cfg = _load(args)
    surfaces = heatmap(cfg, args.index)
    write_heatmap_outputs(cfg.output_dir, cfg, surfaces, args.index)
    for name, s in surfaces.items():
        print(f"{name}: argmax ({s.argmax[0]:.4f}, {s.argmax[1]:.4f}) km, value {s.argmax_value:.6g}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load(args)
    rows = sweep(cfg, args.axis)
    write_sweep_outputs(cfg.output_dir, cfg, args.axis, rows)
    for r in rows:
        print(f"{args.axis}={r.axis_value:g} {r.estimator:6s} rms {r.rms_km:.4f} km "
              f"({r.trials_ok} ok, {r.trials_failed} failed)")
    return EXIT_OK


def cmd_trial(args):
    cfg = _load(args)
    for r in run_trial(cfg, args.index):
        print(json.dumps({
            "trial_index": r.trial_index, "estimator": r.estimator,
            "estimate_km": list(r.estimate), "miss_distance_km": r.miss_distance,
            "objective_at_argmax": r.objective_at_argmax, "wall_time_s": r.wall_time,
            "error": r.error,
        }))
    return EXIT_OK


def cmd_selftest(args):
    results = run_selftest(args.seed, args.fault)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.suite:10s} {r.name}: {r.detail}")
    status = suite_status(results)
    print("suites: " + ", ".join(f"{k}={'pass' if v else 'FAIL'}" for k, v in status.items()))
    return EXIT_OK if all(status.values()) else EXIT_SELFTEST


def build_parser():
    parser = argparse.ArgumentParser(prog="obdpd", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preset", help="print a preset configuration")
    p.add_argument("name", choices=sorted(PRESETS))
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("heatmap", help="export objective surfaces for one trial")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--index", type=int, default=0, help="trial index of the realisation")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("sweep", help="RMS miss distance over an SNR or sample-size axis")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", choices=("snr", "n"), required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trial", help="run a single trial")
    p.add_argument("--config", required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_trial)

    p = sub.add_parser("selftest", help="run the internal consistency suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fault", choices=FAULTS, help="inject a known defect")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Monte Carlo trials, RMS sweeps, heat maps and their CSV exports."""

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import DegenerateGeometry, InvalidArgument, NumericalFailure
from ..estimators import locate_dpd, locate_obdpd
from ..scene import grid_points
from ..signal import draw_channel, quantize_set, random_stream, synthesize

log = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.05
AXES = {"snr": ("snr_db", "sweep_snr_db"), "n": ("num_samples", "sweep_num_samples")}


class FailureBudgetExceeded(NumericalFailure):
    pass


@dataclass(frozen=True)
class TrialResult:
    trial_index: int
    estimator: str
    estimate: tuple
    miss_distance: float
    objective_at_argmax: float
    wall_time: float
    error: str = None

    @property
    def ok(self):
        return self.error is None


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    estimator: str
    rms_km: float
    trials_ok: int
    trials_failed: int


def simulate(cfg, trial_index, axis_index=0):
    """Channel draw, snapshots and their one-bit version for one trial."""
    scene = cfg.scene()
    spec = cfg.signal_spec()
    draw = draw_channel(scene.num_stations, random_stream(cfg.seed, trial_index, "channel", axis_index),
                        spec, cfg.channel_model)
    snapshots = synthesize(scene, cfg.emitter_position, spec, draw,
                           random_stream(cfg.seed, trial_index, "signal", axis_index))
    return scene, snapshots, quantize_set(snapshots)


def run_trial(cfg, trial_index, axis_index=0):
    """Run every selected estimator on one seeded realisation.

    DPD receives the unquantized snapshots and OB-DPD only the quantized set.
    Numerical failures are captured in the returned results.
    """
    scene, snapshots, quantized = simulate(cfg, trial_index, axis_index)
    grid = cfg.grid()
    p_true = cfg.emitter_position
    results = []
    for name in cfg.selected_estimators:
        t0 = time.perf_counter()
        try:
            if name == "dpd":
                surface = locate_dpd(snapshots, scene, grid, cfg.grid_refine_levels)
            else:
                surface = locate_obdpd(quantized, scene, grid, cfg.grid_refine_levels)
        except (NumericalFailure, DegenerateGeometry) as exc:
            log.warning("trial %d (%s) failed: %s", trial_index, name, exc)
            results.append(TrialResult(trial_index, name, (np.nan, np.nan), np.nan, np.nan,
                                       time.perf_counter() - t0, str(exc)))
            continue
        est = surface.argmax
        results.append(TrialResult(trial_index, name, (float(est[0]), float(est[1])),
                                   float(np.hypot(*(est - p_true))), surface.argmax_value,
                                   time.perf_counter() - t0))
    return results


def worker_count():
    env = os.environ.get("OBDPD_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise InvalidArgument(f"OBDPD_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    if hasattr(os, "sched_getaffinity"):
        return len(os.sched_getaffinity(0)) or 1
    return os.cpu_count() or 1


def _run_trial_args(args):
    return run_trial(*args)


def run_trials(cfg, axis_index=0, workers=None):
    """All ``cfg.num_trials`` trials, flattened and ordered by trial index."""
    workers = worker_count() if workers is None else workers
    jobs = [(cfg, k, axis_index) for k in range(cfg.num_trials)]
    if workers <= 1 or len(jobs) == 1:
        batches = [run_trial(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_run_trial_args, jobs, chunksize=4))
    return [r for batch in batches for r in batch]


def rms_miss_distance(results):
    """Root mean square of the miss distances of successful trials (km)."""
    misses = [r.miss_distance for r in results if r.ok]
    if not misses:
        raise InvalidArgument("no successful trial results")
    return float(np.sqrt(np.mean(np.square(misses))))


def sweep(cfg, axis, workers=None):
    """RMS miss distance per estimator for every value on a sweep axis.

    Each axis value runs the full trial set on its own random streams.
    Raises :class:`FailureBudgetExceeded` when more than 5% of the trials at
    any point fail.
    """
    if axis not in AXES:
        raise InvalidArgument(f"axis must be one of {sorted(AXES)}")
    field_name, values_name = AXES[axis]
    rows = []
    for a, value in enumerate(getattr(cfg, values_name)):
        point_cfg = cfg.replace(**{field_name: value})
        results = run_trials(point_cfg, axis_index=a, workers=workers)
        for name in cfg.selected_estimators:
            mine = [r for r in results if r.estimator == name]
            failed = sum(not r.ok for r in mine)
            if failed > MAX_FAILURE_FRACTION * len(mine):
                raise FailureBudgetExceeded(
                    f"{failed}/{len(mine)} {name} trials failed at {axis}={value}")
            rows.append(SweepRow(value, name, rms_miss_distance(mine), len(mine) - failed, failed))
    return rows


def heatmap(cfg, trial_index=0):
    """Objective surfaces of every selected estimator on one realisation."""
    scene, snapshots, quantized = simulate(cfg, trial_index)
    grid = cfg.grid()
    surfaces = {}
    if "dpd" in cfg.selected_estimators:
        surfaces["dpd"] = locate_dpd(snapshots, scene, grid, cfg.grid_refine_levels)
    if "obdpd" in cfg.selected_estimators:
        surfaces["obdpd"] = locate_obdpd(quantized, scene, grid, cfg.grid_refine_levels)
    return surfaces


# --- export -----------------------------------------------------------------

def _fmt(v):
    return repr(float(v))


def header_lines(cfg, **extra):
    lines = [f"# obdpd {__version__}", f"# config_sha256 {cfg.sha256()}", f"# seed {cfg.seed}"]
    lines += [f"# {k} {v}" for k, v in extra.items()]
    return lines


def write_heatmap_csv(path, cfg, surface, trial_index=0):
    lines = header_lines(cfg, trial_index=trial_index)
    lines.append("x_km,y_km,value")
    for (x, y), v in zip(grid_points(surface.grid), surface.values.ravel()):
        lines.append(f"{_fmt(x)},{_fmt(y)},{_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_sweep_csv(path, cfg, axis, rows):
    lines = header_lines(cfg, axis=axis)
    lines.append("axis,estimator,rms_km,trials_ok,trials_failed")
    for r in rows:
        lines.append(f"{_fmt(r.axis_value)},{r.estimator},{_fmt(r.rms_km)},{r.trials_ok},{r.trials_failed}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_heatmap_outputs(out_dir, cfg, surfaces, trial_index=0):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = header_lines(cfg, trial_index=trial_index)
    p = cfg.emitter_position
    summary.append(f"p_true {_fmt(p[0])} {_fmt(p[1])}")
    for name, surface in surfaces.items():
        write_heatmap_csv(out_dir / f"heatmap_{name}.csv", cfg, surface, trial_index)
        x, y = surface.argmax
        summary.append(f"{name} argmax {_fmt(x)} {_fmt(y)} value {_fmt(surface.argmax_value)} "
                       f"miss_km {_fmt(np.hypot(x - p[0], y - p[1]))}")
    (out_dir / "summary.txt").write_text("\n".join(summary) + "\n")


def write_sweep_outputs(out_dir, cfg, axis, rows):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(out_dir / f"rms_vs_{axis}.csv", cfg, axis, rows)
    summary = header_lines(cfg, axis=axis)
    for r in rows:
        summary.append(f"{axis}={_fmt(r.axis_value)} {r.estimator} rms_km {_fmt(r.rms_km)} "
                       f"ok {r.trials_ok} failed {r.trials_failed}")
    (out_dir / "summary.txt").write_text("\n".join(summary) + "\n")

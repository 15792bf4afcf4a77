"""Execution of configured experiments: dispatch, provenance, manifest.

``run`` maps a validated :class:`~shotqsd.config.ExperimentConfig` onto the
matching library operation, writes the documented CSV/JSON outputs plus a
run manifest listing every emitted file with its SHA-256 checksum, and
returns the list of written paths.  Exit-code conventions (used by the
CLI): 0 success, 2 validation failure, 3 divergence-budget failure,
4 I/O failure.
"""

from __future__ import annotations

import dataclasses
import datetime
import os

import numpy as np

from . import __version__
from .analysis import (
    default_sweep_axes,
    fidelity_curves,
    markov_scan,
    shot_params_for,
    sweep_jw,
    washout_diagnostic,
)
from .config import ExperimentConfig
from .dynamics import crosscheck_conventions
from .errors import InvalidParameterError
from .io import emit_plotdata, sha256_of_file, write_json
from .noise import OUParams, ShotNoiseParams, ou_statistics, sample_shot_train, shot_train_moments
from .rng import RngStream

__all__ = ["run", "EXIT_OK", "EXIT_CONFIG", "EXIT_DIVERGENCE", "EXIT_IO"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def _provenance(cfg: ExperimentConfig, excluded: int = 0) -> dict:
    # Execution-environment knobs (threads, out_dir) are excluded from the
    # embedded config echo: results are worker-count independent by the
    # reduction contract, so data bytes must not depend on them.  The wall
    # clock is stamped only in the manifest, for byte-stable data files.
    config = dataclasses.asdict(cfg)
    del config["threads"]
    del config["out_dir"]
    return {
        "code_version": __version__,
        "config": config,
        "master_seed": cfg.master_seed,
        "excluded_trajectories": excluded,
        "wall_clock": None,
    }


def _threads(cfg: ExperimentConfig) -> int:
    return cfg.threads if cfg.threads > 0 else (os.cpu_count() or 1)


def _label(value: float) -> str:
    text = f"{value:g}"
    return text.replace(".", "p").replace("-", "m")


def _run_simulate(cfg: ExperimentConfig, out: str) -> list[str]:
    sys = cfg.system()
    J_list = cfg.J_values or (cfg.J,)
    W_list = cfg.W_values or (cfg.W,)
    variants = [(J, cfg.rate_of(W)) for J in J_list for W in W_list]
    labels = [(J, W) for J in J_list for W in W_list]
    curves = fidelity_curves(
        sys,
        variants,
        n_trains=cfg.n_trains,
        dt=cfg.dt,
        horizon=cfg.horizon,
        stream=RngStream(cfg.master_seed),
        convention=cfg.fidelity_convention,
        kick_scale=cfg.kick_scale,
        amplitude_law=cfg.amplitude_law,
        out_stride=cfg.out_stride,
        n_workers=_threads(cfg),
    )
    files = []
    excluded = sum(v["excluded"] for v in curves.variants)
    prov = _provenance(cfg, excluded)
    for (J, W), curve in zip(labels, curves.curves):
        path = os.path.join(out, f"fidelity_J{_label(J)}_W{_label(W)}.csv")
        files.append(emit_plotdata(curve, path, prov))
    files.append(emit_plotdata(curves.free, os.path.join(out, "fidelity_free.csv"), prov))
    return files


def _run_sweep(cfg: ExperimentConfig, out: str) -> list[str]:
    sys = cfg.system()
    if cfg.J_values and cfg.W_values:
        J_values = np.asarray(cfg.J_values)
        W_values = np.asarray([cfg.rate_of(w) for w in cfg.W_values])
        probes = np.asarray(cfg.probe_times)
    else:
        J_values, W_values, probes = default_sweep_axes(sys)
    grid = sweep_jw(
        sys,
        J_values,
        W_values,
        probes,
        n_traj=cfg.n_traj,
        dt=cfg.dt,
        stream=RngStream(cfg.master_seed),
        convention=cfg.fidelity_convention,
        kick_scale=cfg.kick_scale,
        amplitude_law=cfg.amplitude_law,
        n_workers=_threads(cfg),
    )
    excluded = int(grid.n_traj * grid.n_used.size - grid.n_used.sum())
    prov = _provenance(cfg, excluded)
    files = []
    for p, probe in enumerate(probes):
        view = dataclasses.replace(
            grid,
            probe_times=grid.probe_times[p : p + 1],
            fidelity=grid.fidelity[:, :, p : p + 1],
            stderr=grid.stderr[:, :, p : p + 1],
        )
        path = os.path.join(out, f"sweep_t{_label(probe / sys.T)}T.csv")
        files.append(emit_plotdata(view, path, prov))
    return files


def _run_markov(cfg: ExperimentConfig, out: str) -> list[str]:
    scan = markov_scan(
        cfg.system(),
        cfg.gamma_values,
        cfg.J,
        cfg.rate_of(cfg.W),
        t_probe=cfg.t_probe_T * cfg.T,
        n_traj=cfg.n_traj,
        dt=cfg.dt,
        stream=RngStream(cfg.master_seed),
        convention=cfg.fidelity_convention,
        kick_scale=cfg.kick_scale,
        amplitude_law=cfg.amplitude_law,
        n_workers=_threads(cfg),
    )
    path = os.path.join(out, "markov_scan.csv")
    return [emit_plotdata(scan, path, _provenance(cfg))]


def _run_washout(cfg: ExperimentConfig, out: str) -> list[str]:
    sys = cfg.system()
    files = []
    summaries = {}
    for k, J in enumerate(cfg.J_values or (cfg.J,)):
        shot = shot_params_for(J, cfg.rate_of(cfg.W), sys, cfg.kick_scale, cfg.amplitude_law)
        train = sample_shot_train(shot, cfg.horizon, RngStream(cfg.master_seed, k))
        series = washout_diagnostic(sys, train, cfg.dt, cfg.horizon, out_stride=cfg.out_stride)
        path = os.path.join(out, f"washout_J{_label(J)}.csv")
        files.append(emit_plotdata(series, path, _provenance(cfg)))
        summaries[f"J={J:g}"] = series.summary()
    files.append(write_json(os.path.join(out, "washout_summary.json"), summaries, _provenance(cfg)))
    return files


def _run_noise_test(cfg: ExperimentConfig, out: str) -> list[str]:
    # Validates the samplers themselves: J is the mean kick amplitude here.
    stream = RngStream(cfg.master_seed)
    shot = ShotNoiseParams(J=cfg.J, W=cfg.rate_of(cfg.W), amplitude_law=cfg.amplitude_law)
    horizon = cfg.nt_horizon_T * cfg.T
    trains = [
        sample_shot_train(shot, horizon, stream.child(0, i)) for i in range(cfg.nt_n_trains)
    ]
    moments = shot_train_moments(trains, shot)
    shot_checks = {
        "rate_within_2pct": bool(
            abs(moments.rate_empirical / moments.rate_expected - 1.0) < 0.02
        ),
        "amp_mean_within_2pct": bool(
            abs(moments.amp_mean_empirical / moments.amp_mean_expected - 1.0) < 0.02
        ),
        "c_mean_within_3_sigma": bool(
            abs(moments.c_mean_empirical - moments.c_mean_expected)
            < 3.0 * moments.c_mean_stderr
        ),
    }
    ou_params = OUParams(gamma=cfg.gamma, dt=cfg.nt_ou_dt, n_steps=cfg.nt_ou_n_steps)
    lag_steps = np.unique(
        np.linspace(0.0, cfg.nt_ou_max_lag / cfg.nt_ou_dt, cfg.nt_ou_n_lags).astype(np.int64)
    )
    ou = ou_statistics(ou_params, cfg.nt_ou_n_paths, stream.child(1), lag_steps)
    ou_checks = {
        "autocorr_rel_l2_below_5pct": bool(ou.autocorr_rel_l2_error < 0.05),
        "mean_consistent_with_zero_3_sigma": ou.mean_consistent_with_zero(3.0),
        "second_moment_within_5pct": bool(
            np.all(np.abs(ou.second_moment / ou.second_moment_target - 1.0) < 0.05)
        ),
    }
    doc = {
        "shot_moments": moments.to_dict(),
        "shot_checks": shot_checks,
        "ou_statistics": ou.to_dict(),
        "ou_checks": ou_checks,
        "all_passed": bool(all(shot_checks.values()) and all(ou_checks.values())),
    }
    return [write_json(os.path.join(out, "noise_report.json"), doc, _provenance(cfg))]


def _run_crosscheck(cfg: ExperimentConfig, out: str) -> list[str]:
    sys = cfg.system()
    shot = shot_params_for(cfg.J, cfg.rate_of(cfg.W), sys, cfg.kick_scale, cfg.amplitude_law)
    train = sample_shot_train(shot, cfg.horizon, RngStream(cfg.master_seed))
    rep = crosscheck_conventions(sys, train, cfg.dt, cfg.horizon, out_stride=cfg.out_stride)
    files = [
        emit_plotdata(rep, os.path.join(out, "crosscheck.csv"), _provenance(cfg)),
        write_json(os.path.join(out, "crosscheck.json"), rep.to_dict(), _provenance(cfg)),
    ]
    return files


_DISPATCH = {
    "simulate": _run_simulate,
    "sweep": _run_sweep,
    "markov-scan": _run_markov,
    "washout": _run_washout,
    "noise-test": _run_noise_test,
    "crosscheck": _run_crosscheck,
}


def run(cfg: ExperimentConfig) -> list[str]:
    """Execute one configured experiment; returns all written file paths.

    The run manifest (written last) lists every data file with its SHA-256
    checksum and carries the only wall-clock stamp of the run.
    """
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    if cfg.mode not in _DISPATCH:
        raise InvalidParameterError(f"unknown mode {cfg.mode!r}")
    files = _DISPATCH[cfg.mode](cfg, out)
    manifest = {
        "code_version": __version__,
        "config": dataclasses.asdict(cfg),
        "master_seed": cfg.master_seed,
        "wall_clock": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "files": [
            {"path": os.path.basename(p), "sha256": sha256_of_file(p)} for p in files
        ],
    }
    manifest_path = write_json(os.path.join(out, "manifest.json"), manifest)
    return files + [manifest_path]

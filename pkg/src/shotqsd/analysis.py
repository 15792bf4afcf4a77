"""Figure-level experiments: fidelity comparisons, (J, W) sweeps, memory
scans and the washout-integrand diagnostic.

Noise strengths are quoted figure-style: J in units of omega, W as an
arrival rate per unit time (the captions quote W in units of 1/T; divide
by ``sys.T`` when translating).  Two conventions map the strength J to the
mean kick amplitude of the sampled trains:

* ``"mean-rate"`` (default): mean kick = J*omega/W, so the time average of
  the control field c(t) equals J*omega.  J then acts as an added energy
  scale and larger J separates the noise phase factor from the slow system
  dynamics, which reproduces the strong J-dependence of the suppression.
* ``"direct"``: mean kick = J*omega (one unit of time per kick).  Kicks of
  several radians wrap the phase, so all large J behave alike; kept for
  comparison studies.

Every experiment draws its randomness from substreams of one RngStream and
reduces in fixed index order, so results are reproducible for any worker
count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import numpy.typing as npt

from .dynamics import (
    DEFAULT_GUARD,
    CONVENTIONS,
    FidelityCurve,
    SystemParams,
    q_integral_batch,
)
from .errors import DivergenceBudgetError, InvalidParameterError
from .kernels import DIVERGED, riccati_rk4_washout
from .noise import ShotNoiseParams, ShotTrain, sample_shot_train
from .rng import RngStream

__all__ = [
    "KICK_SCALES",
    "shot_params_for",
    "CurveSet",
    "SweepGrid",
    "MarkovScan",
    "IntegrandSeries",
    "fidelity_curves",
    "sweep_jw",
    "default_sweep_axes",
    "markov_scan",
    "washout_diagnostic",
]

KICK_SCALES = ("mean-rate", "direct")


def shot_params_for(
    J_value: float,
    W: float,
    sys: SystemParams,
    kick_scale: str = "mean-rate",
    amplitude_law: str = "exponential",
) -> ShotNoiseParams:
    """Translate a figure-style strength (J, W) into sampler parameters.

    ``J_value`` is in units of omega; ``W`` is the arrival rate per unit
    time.  See the module docstring for the two kick-scale conventions.
    """
    if kick_scale not in KICK_SCALES:
        raise InvalidParameterError(f"kick_scale must be one of {KICK_SCALES}")
    J_freq = J_value * sys.omega
    if kick_scale == "mean-rate":
        mean_kick = J_freq / W if W > 0 else 0.0
    else:
        mean_kick = J_freq
    return ShotNoiseParams(J=mean_kick, W=W, amplitude_law=amplitude_law)


def _fidelity_stats(
    integrals: npt.NDArray[np.float64],
    ok: npt.NDArray[np.bool_],
    factor: float,
    n_total: int,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Mean and stderr of F = exp(-factor * int Re Q) over non-diverged trains."""
    excluded = int(n_total - ok.sum())
    if excluded > 0.01 * n_total or ok.sum() == 0:
        raise DivergenceBudgetError(excluded, n_total)
    F = np.exp(-factor * integrals[ok])
    mean = F.mean(axis=0)
    n = F.shape[0]
    stderr = F.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(mean.shape, np.nan)
    return mean, stderr, excluded


def _convention_factor(convention: str, sys: SystemParams) -> float:
    if convention not in CONVENTIONS:
        raise InvalidParameterError(f"convention must be one of {CONVENTIONS}")
    return 1.0 if convention == "eq3" else sys.g


def _free_curve(
    sys: SystemParams, dt: float, horizon: float, out_stride: int, factor: float
) -> FidelityCurve:
    train = ShotTrain(horizon, np.empty(0), np.empty(0))
    integ, ok = q_integral_batch(sys, [train], dt, horizon, out_stride=out_stride)
    F = np.exp(-factor * integ[0])
    times = np.arange(F.size) * (dt * out_stride)
    return FidelityCurve(times=times, values=F, provenance={"J": 0.0, "W": 0.0, "free": True})


@dataclass(frozen=True)
class CurveSet:
    """Averaged fidelity curves for a list of noise variants plus the free curve."""

    sys: SystemParams
    convention: str
    kick_scale: str
    variants: list[dict]
    curves: list[FidelityCurve]
    free: FidelityCurve


def fidelity_curves(
    sys: SystemParams,
    variants: Sequence[tuple[float, float]],
    n_trains: int,
    dt: float,
    horizon: float,
    stream: RngStream,
    convention: str = "eq3",
    kick_scale: str = "mean-rate",
    amplitude_law: str = "exponential",
    out_stride: int = 250,
    n_workers: int = 1,
) -> CurveSet:
    """Train-averaged fidelity curve per (J, W) variant, plus free dynamics.

    ``variants`` holds figure-style (J_value, W_rate) pairs.  Variant v
    draws its trains from substreams (v, 0..n_trains-1).  Each averaged
    curve carries the Monte Carlo stderr across trains.
    """
    if n_trains < 1:
        raise InvalidParameterError("n_trains must be >= 1")
    factor = _convention_factor(convention, sys)
    curves: list[FidelityCurve] = []
    meta: list[dict] = []
    for v, (J_value, W) in enumerate(variants):
        shot = shot_params_for(J_value, W, sys, kick_scale, amplitude_law)
        trains = [
            sample_shot_train(shot, horizon, stream.child(v, i)) for i in range(n_trains)
        ]
        integ, ok = q_integral_batch(
            sys, trains, dt, horizon, out_stride=out_stride, n_workers=n_workers
        )
        mean, stderr, excluded = _fidelity_stats(integ, ok, factor, n_trains)
        times = np.arange(mean.size) * (dt * out_stride)
        prov = {
            "J": J_value,
            "W": W,
            "n_trains": n_trains,
            "excluded": excluded,
            "convention": convention,
            "kick_scale": kick_scale,
            "mean_kick": shot.J,
        }
        curves.append(FidelityCurve(times=times, values=mean, stderr=stderr, provenance=prov))
        meta.append(prov)
    free = _free_curve(sys, dt, horizon, out_stride, factor)
    return CurveSet(
        sys=sys,
        convention=convention,
        kick_scale=kick_scale,
        variants=meta,
        curves=curves,
        free=free,
    )


@dataclass(frozen=True)
class SweepGrid:
    """Fidelity over a (J, W) grid at a few probe times.

    ``fidelity[j, w, p]`` is the train-averaged fidelity for
    ``J_values[j]``, ``W_values[w]`` at ``probe_times[p]``; entries lie in
    (0, 1].  ``n_used`` counts non-diverged trains per cell.
    """

    J_values: npt.NDArray[np.float64]
    W_values: npt.NDArray[np.float64]
    probe_times: npt.NDArray[np.float64]
    fidelity: npt.NDArray[np.float64]
    stderr: npt.NDArray[np.float64]
    n_traj: int
    n_used: npt.NDArray[np.int64]
    convention: str
    kick_scale: str
    provenance: dict = field(default_factory=dict)

    def above(self, threshold: float = 0.99) -> npt.NDArray[np.bool_]:
        return self.fidelity > threshold

    def plateau_onset(self, probe_index: int, tol: float = 0.005) -> npt.NDArray[np.float64]:
        """Smallest W whose fidelity is within ``tol`` of the largest-W value.

        The largest W of the grid stands in for the W -> infinity plateau.
        Returned per J row (NaN when even the last point is outside tol,
        which cannot happen by construction).
        """
        onset = np.full(self.J_values.size, np.nan)
        for j in range(self.J_values.size):
            ref = self.fidelity[j, -1, probe_index]
            close = np.abs(self.fidelity[j, :, probe_index] - ref) < tol
            # first W from which the curve stays within tol of the plateau
            stay = np.logical_and.accumulate(close[::-1])[::-1]
            hits = np.flatnonzero(stay)
            if hits.size:
                onset[j] = self.W_values[hits[0]]
        return onset


def default_sweep_axes(sys: SystemParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Default sweep axes: 16x16 over J in [0, 20], W in [50, 1200]/T,
    probed at 50T and 100T."""
    J_values = np.linspace(0.0, 20.0, 16)
    W_values = np.linspace(50.0, 1200.0, 16) / sys.T
    probe_times = np.array([50.0 * sys.T, 100.0 * sys.T])
    return J_values, W_values, probe_times


def sweep_jw(
    sys: SystemParams,
    J_values: Sequence[float],
    W_values: Sequence[float],
    probe_times: Sequence[float],
    n_traj: int,
    dt: float,
    stream: RngStream,
    convention: str = "eq3",
    kick_scale: str = "mean-rate",
    amplitude_law: str = "exponential",
    n_workers: int = 1,
) -> SweepGrid:
    """Fill the (J, W) fidelity grid at the probe times.

    Cell (j, w) draws its trains from substreams (cell_id, 0..n_traj-1)
    with cell_id = j*len(W_values) + w; cells are therefore independent
    jobs and may be computed in any order.  Divergent trains are excluded
    per cell (beyond 1% the cell raises).
    """
    J_values = np.asarray(J_values, dtype=np.float64)
    W_values = np.asarray(W_values, dtype=np.float64)
    probe_times = np.asarray(probe_times, dtype=np.float64)
    if np.any(np.diff(J_values) <= 0) or np.any(np.diff(W_values) <= 0):
        raise InvalidParameterError("grid axes must be strictly increasing")
    if n_traj < 1:
        raise InvalidParameterError("n_traj must be >= 1")
    factor = _convention_factor(convention, sys)
    horizon = float(probe_times.max())
    probe_steps = np.rint(probe_times / dt).astype(np.int64)
    stride = int(np.gcd.reduce(np.concatenate([probe_steps, [int(round(horizon / dt))]])))
    probe_out = probe_steps // stride

    shape = (J_values.size, W_values.size, probe_times.size)
    fidelity = np.full(shape, np.nan)
    stderr = np.full(shape, np.nan)
    n_used = np.zeros(shape[:2], dtype=np.int64)
    for j, J in enumerate(J_values):
        for w, W in enumerate(W_values):
            cell = j * W_values.size + w
            shot = shot_params_for(J, W, sys, kick_scale, amplitude_law)
            trains = [
                sample_shot_train(shot, horizon, stream.child(cell, i)) for i in range(n_traj)
            ]
            integ, ok = q_integral_batch(
                sys, trains, dt, horizon, out_stride=stride, n_workers=n_workers
            )
            mean, err, excluded = _fidelity_stats(integ[:, probe_out], ok, factor, n_traj)
            fidelity[j, w] = mean
            stderr[j, w] = err
            n_used[j, w] = n_traj - excluded
    prov = {
        "n_traj": n_traj,
        "dt": dt,
        "convention": convention,
        "kick_scale": kick_scale,
        "master_seed": stream.master_seed,
        "system": vars(sys).copy(),
    }
    return SweepGrid(
        J_values=J_values,
        W_values=W_values,
        probe_times=probe_times,
        fidelity=fidelity,
        stderr=stderr,
        n_traj=n_traj,
        n_used=n_used,
        convention=convention,
        kick_scale=kick_scale,
        provenance=prov,
    )


@dataclass(frozen=True)
class MarkovScan:
    """Suppression gain versus the environmental memory rate gamma.

    gain = F_noise(t_probe) - F_free(t_probe), evaluated per gamma at
    fixed (J, W).  Gains lie in (-1, 1).
    """

    gamma_values: npt.NDArray[np.float64]
    f_noise: npt.NDArray[np.float64]
    f_noise_stderr: npt.NDArray[np.float64]
    f_free: npt.NDArray[np.float64]
    t_probe: float
    provenance: dict = field(default_factory=dict)

    @property
    def gains(self) -> npt.NDArray[np.float64]:
        return self.f_noise - self.f_free

    def trend_summary(self) -> str:
        g = self.gains
        if np.all(np.diff(g) < 0):
            return "monotone degradation with increasing gamma"
        if np.all(np.diff(g) > 0):
            return "monotone improvement with increasing gamma"
        return "non-monotone gain across the scan"


def markov_scan(
    sys: SystemParams,
    gamma_values: Sequence[float],
    J_value: float,
    W: float,
    t_probe: float,
    n_traj: int,
    dt: float,
    stream: RngStream,
    convention: str = "eq3",
    kick_scale: str = "mean-rate",
    amplitude_law: str = "exponential",
    n_workers: int = 1,
) -> MarkovScan:
    """Scan the suppression gain over gamma at fixed noise strength.

    ``gamma_values`` must span at least a decade.  Scan point k draws its
    trains from substreams (k, 0..n_traj-1).
    """
    gamma_values = np.asarray(gamma_values, dtype=np.float64)
    if gamma_values.max() / gamma_values.min() < 10.0:
        raise InvalidParameterError("gamma_values must span at least one decade")
    horizon = float(t_probe)
    f_noise = np.empty(gamma_values.size)
    f_err = np.empty(gamma_values.size)
    f_free = np.empty(gamma_values.size)
    for k, gamma in enumerate(gamma_values):
        sys_k = replace(sys, gamma=gamma)
        factor = _convention_factor(convention, sys_k)
        shot = shot_params_for(J_value, W, sys_k, kick_scale, amplitude_law)
        trains = [
            sample_shot_train(shot, horizon, stream.child(k, i)) for i in range(n_traj)
        ]
        n_steps = int(round(horizon / dt))
        integ, ok = q_integral_batch(
            sys_k, trains, dt, horizon, out_stride=n_steps, n_workers=n_workers
        )
        mean, err, _ = _fidelity_stats(integ[:, -1:], ok, factor, n_traj)
        f_noise[k], f_err[k] = mean[0], err[0]
        free = _free_curve(sys_k, dt, horizon, n_steps, factor)
        f_free[k] = free.values[-1]
    prov = {
        "J": J_value,
        "W": W,
        "t_probe": t_probe,
        "n_traj": n_traj,
        "dt": dt,
        "convention": convention,
        "kick_scale": kick_scale,
        "master_seed": stream.master_seed,
    }
    return MarkovScan(
        gamma_values=gamma_values,
        f_noise=f_noise,
        f_noise_stderr=f_err,
        f_free=f_free,
        t_probe=float(t_probe),
        provenance=prov,
    )


@dataclass(frozen=True)
class IntegrandSeries:
    """Washout diagnostic: the fast phase factor, the slow factor and their integral.

    N(t) = exp(-i * int_0^t (omega + c) ds) is a pure phase (|N| = 1);
    h(t) = -Q(t) * <psi_0|psi_t> with the overlap taken from the
    deterministic (z* = 0) reduction; ``partial_integral`` is the running
    integral of conj(N) * h, which starts at 0.  ``integral_N`` is the
    running integral of N alone, used for the frozen-h variant of the
    washout check (its running average decays for white noise).
    """

    times: npt.NDArray[np.float64]
    N: npt.NDArray[np.complex128]
    h: npt.NDArray[np.complex128]
    partial_integral: npt.NDArray[np.complex128]
    integral_N: npt.NDArray[np.complex128]
    provenance: dict = field(default_factory=dict)

    def summary(self) -> dict:
        t_end = float(self.times[-1])
        return {
            "horizon": t_end,
            "abs_partial_integral": float(np.abs(self.partial_integral[-1])),
            "abs_running_mean_N": float(np.abs(self.integral_N[-1]) / t_end),
        }


def washout_diagnostic(
    sys: SystemParams,
    train: ShotTrain,
    dt: float,
    horizon: float,
    out_stride: int = 250,
    guard: float = DEFAULT_GUARD,
) -> IntegrandSeries:
    """Compute the washout integrand series for one shot train."""
    from .dynamics import _check_dt, _grid_steps, _prepare_kicks  # shared validation

    _check_dt(sys, dt)
    n_steps = _grid_steps(horizon, dt)
    if n_steps % out_stride:
        raise InvalidParameterError("out_stride must divide the number of steps")
    if train.horizon < horizon - 1e-9:
        raise InvalidParameterError("train horizon shorter than integration horizon")
    idx, amps, snap = _prepare_kicks(train, dt, n_steps)
    _, _, N, h, inh, in_n, status, blow = riccati_rk4_washout(
        complex(sys.riccati_source),
        sys.riccati_linear,
        sys.g,
        sys.omega,
        dt,
        n_steps,
        idx,
        amps,
        out_stride,
        guard,
    )
    if status == DIVERGED:
        from .errors import DivergenceError

        raise DivergenceError(blow * dt, guard)
    times = np.arange(N.size) * (dt * out_stride)
    prov = {"dt": dt, "n_kicks": int(idx.size), "max_snap_error": snap, "system": vars(sys).copy()}
    return IntegrandSeries(
        times=times, N=N, h=h, partial_integral=inh, integral_N=in_n, provenance=prov
    )

"""Stochastic inputs: Poissonian shot trains and complex Ornstein-Uhlenbeck paths.

Two noise sources drive the simulator:

* ``c(t) = sum_j x_j delta(t - t_j)`` -- biased (single-sign) Poissonian
  white shot noise.  Arrival times ``t_j`` form a Poisson process of rate
  ``W`` and the kick amplitudes ``x_j`` are positive with mean ``J``, so
  the time average of ``c`` is ``J*W`` and the process stays one-sided.
* ``z*_t`` -- a stationary complex Ornstein-Uhlenbeck process with
  autocorrelation ``(gamma/2) * exp(-gamma*|t-s|)``, discretized as
  ``z*_{t+dt} = z*_t - gamma*z*_t*dt + gamma*sqrt(dt/2)*w*`` where
  ``w* = w1 + i*w2`` with independent standard-normal components.  With
  this convention the stationary second moment is ``gamma/2`` up to
  O(gamma*dt) discretization bias.

Both samplers are pure functions of ``(params, RngStream)``: no shared
mutable state, safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt

from .errors import InvalidParameterError
from .rng import RngStream

__all__ = [
    "ShotNoiseParams",
    "ShotTrain",
    "MomentsReport",
    "OUParams",
    "OUPath",
    "OUStatsReport",
    "sample_shot_train",
    "shot_train_moments",
    "sample_ou_path",
    "sample_ou_paths",
    "ou_statistics",
]

AMPLITUDE_LAWS = ("exponential", "fixed")


@dataclass(frozen=True)
class ShotNoiseParams:
    """Parameters of the biased Poissonian shot noise.

    J is the mean kick amplitude (a dimensionless phase).  W is the mean
    arrival rate per unit time.  ``amplitude_law`` selects the kick
    distribution: "exponential" (mean J) or "fixed" (every kick equals J).
    """

    J: float
    W: float
    amplitude_law: str = "exponential"

    def __post_init__(self):
        if not np.isfinite(self.J) or self.J < 0:
            raise InvalidParameterError(f"J must be >= 0 and finite, got {self.J}")
        if not np.isfinite(self.W) or self.W < 0:
            raise InvalidParameterError(f"W must be >= 0 and finite, got {self.W}")
        if self.amplitude_law not in AMPLITUDE_LAWS:
            raise InvalidParameterError(
                f"amplitude_law must be one of {AMPLITUDE_LAWS}, got {self.amplitude_law!r}"
            )


@dataclass(frozen=True)
class ShotTrain:
    """One realization of the shot noise on ``[0, horizon)``.

    ``times`` are strictly increasing, ``amplitudes`` strictly positive.
    An empty train represents ``c(t) = 0``.
    """

    horizon: float
    times: npt.NDArray[np.float64]
    amplitudes: npt.NDArray[np.float64]

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        amps = np.asarray(self.amplitudes, dtype=np.float64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amplitudes", amps)
        if self.horizon <= 0:
            raise InvalidParameterError(f"horizon must be > 0, got {self.horizon}")
        if times.shape != amps.shape or times.ndim != 1:
            raise InvalidParameterError("times and amplitudes must be 1-d and equal length")
        if times.size:
            if times[0] < 0 or times[-1] >= self.horizon:
                raise InvalidParameterError("arrival times must lie in [0, horizon)")
            if np.any(np.diff(times) <= 0):
                raise InvalidParameterError("arrival times must be strictly increasing")
            if np.any(amps <= 0):
                raise InvalidParameterError("kick amplitudes must be strictly positive")

    @property
    def n_kicks(self) -> int:
        return int(self.times.size)

    def total_kick(self) -> float:
        """Integral of c(t) over the horizon (sum of kick amplitudes)."""
        return float(self.amplitudes.sum())


def sample_shot_train(params: ShotNoiseParams, horizon: float, rng: RngStream) -> ShotTrain:
    """Draw one shot train on ``[0, horizon)``.

    The arrival count is Poisson(W*horizon) and arrival times are sorted
    uniforms, which realizes exponential inter-arrival gaps of mean 1/W.
    Amplitudes are drawn from ``amplitude_law`` with mean J.  Coincident
    float arrivals (astronomically rare) are merged by summing their
    amplitudes; zero-strength kicks (J = 0) are dropped, which leaves the
    dynamics identical.

    Draw order (part of the determinism contract): count, times, amplitudes.
    """
    if not np.isfinite(horizon) or horizon <= 0:
        raise InvalidParameterError(f"horizon must be > 0 and finite, got {horizon}")
    gen = rng.generator()
    if params.W == 0.0:
        return ShotTrain(horizon, np.empty(0), np.empty(0))
    n = int(gen.poisson(params.W * horizon))
    times = np.sort(gen.uniform(0.0, horizon, n))
    if params.amplitude_law == "exponential":
        amps = gen.exponential(params.J, n)
    else:
        amps = np.full(n, params.J, dtype=np.float64)
    if n:
        keep = np.ones(n, dtype=bool)
        dup = np.flatnonzero(np.diff(times) == 0.0)
        if dup.size:
            for i in dup[::-1]:
                amps[i] += amps[i + 1]
                keep[i + 1] = False
            times, amps = times[keep], amps[keep]
        positive = amps > 0
        if not positive.all():
            times, amps = times[positive], amps[positive]
    return ShotTrain(horizon, times, amps)


@dataclass(frozen=True)
class MomentsReport:
    """Empirical shot-train statistics against their targets.

    ``c_mean`` is the time-averaged noise (total kick sum / horizon),
    whose target is J*W.  Stderrs are sample standard errors across
    trains (pooled across kicks for the amplitude moments).
    """

    n_trains: int
    horizon: float
    rate_empirical: float
    rate_stderr: float
    rate_expected: float
    amp_mean_empirical: float
    amp_mean_stderr: float
    amp_mean_expected: float
    amp_sq_empirical: float
    amp_sq_stderr: float
    c_mean_empirical: float
    c_mean_stderr: float
    c_mean_expected: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def shot_train_moments(
    trains: Sequence[ShotTrain],
    params: ShotNoiseParams | None = None,
) -> MomentsReport:
    """Empirical rate, amplitude moments and mean of c over a set of trains.

    All trains must share one horizon.  Expected values are filled from
    ``params`` when given, else NaN.
    """
    if len(trains) < 1:
        raise InvalidParameterError("need at least one train")
    horizon = trains[0].horizon
    if any(t.horizon != horizon for t in trains):
        raise InvalidParameterError("all trains must share the same horizon")
    n = len(trains)
    counts = np.array([t.n_kicks for t in trains], dtype=np.float64)
    sums = np.array([t.total_kick() for t in trains])
    all_amps = np.concatenate([t.amplitudes for t in trains]) if counts.sum() else np.empty(0)

    rates = counts / horizon
    c_means = sums / horizon

    def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
        if x.size == 0:
            return 0.0, float("nan")
        if x.size == 1:
            return float(x[0]), float("nan")
        return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))

    rate_m, rate_s = _mean_stderr(rates)
    amp_m, amp_s = _mean_stderr(all_amps)
    amp2_m, amp2_s = _mean_stderr(all_amps**2)
    c_m, c_s = _mean_stderr(c_means)

    J = params.J if params is not None else float("nan")
    W = params.W if params is not None else float("nan")
    return MomentsReport(
        n_trains=n,
        horizon=horizon,
        rate_empirical=rate_m,
        rate_stderr=rate_s,
        rate_expected=W,
        amp_mean_empirical=amp_m,
        amp_mean_stderr=amp_s,
        amp_mean_expected=J,
        amp_sq_empirical=amp2_m,
        amp_sq_stderr=amp2_s,
        c_mean_empirical=c_m,
        c_mean_stderr=c_s,
        c_mean_expected=J * W,
    )


@dataclass(frozen=True)
class OUParams:
    """Discretization of the complex OU process.

    ``gamma`` is the memory rate (inverse correlation time).  The step must
    resolve the memory: ``dt * gamma <= stability_limit`` (default 0.05).
    """

    gamma: float
    dt: float
    n_steps: int
    stability_limit: float = 0.05

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise InvalidParameterError(f"gamma must be > 0, got {self.gamma}")
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise InvalidParameterError(f"dt must be > 0, got {self.dt}")
        if self.n_steps < 1:
            raise InvalidParameterError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.dt * self.gamma > self.stability_limit:
            raise InvalidParameterError(
                f"dt*gamma = {self.dt * self.gamma:.4g} exceeds the stability "
                f"limit {self.stability_limit:g}; reduce dt"
            )

    @property
    def times(self) -> npt.NDArray[np.float64]:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class OUPath:
    """One discretized realization z*_0 .. z*_{n_steps}."""

    values: npt.NDArray[np.complex128]
    params: OUParams

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        object.__setattr__(self, "values", values)
        if values.shape != (self.params.n_steps + 1,):
            raise InvalidParameterError(
                f"path length {values.shape} does not match n_steps+1 = {self.params.n_steps + 1}"
            )


def _ou_normals(params: OUParams, gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    # Draw order: 2 normals for z0, then (n_steps, 2) step normals.
    z0_parts = gen.standard_normal(2)
    steps = gen.standard_normal((params.n_steps, 2))
    return z0_parts, steps


def _ou_recursion(z0: np.ndarray, w: np.ndarray, gamma: float, dt: float) -> np.ndarray:
    """Run the update rule for a batch of paths.

    z0: (batch,) complex; w: (batch, n_steps) complex standard increments.
    Returns (batch, n_steps+1).
    """
    batch, n_steps = w.shape
    out = np.empty((batch, n_steps + 1), dtype=np.complex128)
    out[:, 0] = z0
    decay = 1.0 - gamma * dt
    amp = gamma * np.sqrt(dt / 2.0)
    z = z0.copy()
    for k in range(n_steps):
        z = z * decay + amp * w[:, k]
        out[:, k + 1] = z
    return out


def sample_ou_path(params: OUParams, rng: RngStream) -> OUPath:
    """Draw one stationary complex OU path.

    z*_0 is drawn from the stationary complex Gaussian with
    E[|z|^2] = gamma/2 (each real component has variance gamma/4), so the
    path is stationary from t = 0.
    """
    gen = rng.generator()
    z0_parts, steps = _ou_normals(params, gen)
    scale = np.sqrt(params.gamma / 4.0)
    z0 = np.array([scale * (z0_parts[0] + 1j * z0_parts[1])])
    w = (steps[:, 0] + 1j * steps[:, 1])[np.newaxis, :]
    values = _ou_recursion(z0, w, params.gamma, params.dt)[0]
    return OUPath(values, params)


def sample_ou_paths(params: OUParams, streams: Sequence[RngStream]) -> npt.NDArray[np.complex128]:
    """Draw a batch of paths, one per stream, as a (len(streams), n+1) array.

    Row i is bit-identical to ``sample_ou_path(params, streams[i]).values``.
    """
    batch = len(streams)
    z0 = np.empty(batch, dtype=np.complex128)
    w = np.empty((batch, params.n_steps), dtype=np.complex128)
    scale = np.sqrt(params.gamma / 4.0)
    for i, stream in enumerate(streams):
        z0_parts, steps = _ou_normals(params, stream.generator())
        z0[i] = scale * (z0_parts[0] + 1j * z0_parts[1])
        w[i] = steps[:, 0] + 1j * steps[:, 1]
    return _ou_recursion(z0, w, params.gamma, params.dt)


@dataclass(frozen=True)
class OUStatsReport:
    """Monte Carlo statistics of an OU ensemble against the target law.

    ``autocorr_rel_l2_error`` is ||G_hat - G||_2 / ||G||_2 over the probed
    lags, with G(tau) = (gamma/2) exp(-gamma*tau).  ``mean_abs`` and
    ``mean_stderr`` probe E[z_t] at a few grid times; ``second_moment``
    probes stationarity of E[|z_t|^2].
    """

    n_paths: int
    lag_times: npt.NDArray[np.float64]
    autocorr_empirical: npt.NDArray[np.float64]
    autocorr_target: npt.NDArray[np.float64]
    autocorr_rel_l2_error: float
    probe_times: npt.NDArray[np.float64]
    mean_abs: npt.NDArray[np.float64]
    mean_stderr: npt.NDArray[np.float64]
    second_moment: npt.NDArray[np.float64]
    second_moment_target: float

    def mean_consistent_with_zero(self, n_sigma: float = 3.0) -> bool:
        return bool(np.all(self.mean_abs < n_sigma * self.mean_stderr))

    def to_dict(self) -> dict:
        return {
            "n_paths": self.n_paths,
            "lag_times": self.lag_times.tolist(),
            "autocorr_empirical": self.autocorr_empirical.tolist(),
            "autocorr_target": self.autocorr_target.tolist(),
            "autocorr_rel_l2_error": self.autocorr_rel_l2_error,
            "probe_times": self.probe_times.tolist(),
            "mean_abs": self.mean_abs.tolist(),
            "mean_stderr": self.mean_stderr.tolist(),
            "second_moment": self.second_moment.tolist(),
            "second_moment_target": self.second_moment_target,
        }


def ou_statistics(
    params: OUParams,
    n_paths: int,
    stream: RngStream,
    lag_steps: Sequence[int],
    n_mean_probes: int = 5,
    chunk: int = 512,
) -> OUStatsReport:
    """Estimate ensemble mean, stationary second moment and autocorrelation.

    The autocorrelation estimator averages z_{t+tau} * conj(z_t) over both
    the ensemble and all grid offsets t (the process is stationary).  Paths
    are generated in chunks from per-path substreams ``stream.child(i)``,
    so the estimate is reproducible and resumable.
    """
    if n_paths < 2:
        raise InvalidParameterError("need at least 2 paths")
    lag_steps = np.asarray(lag_steps, dtype=np.int64)
    if lag_steps.max() >= params.n_steps + 1:
        raise InvalidParameterError("largest lag exceeds the path length")
    n_grid = params.n_steps + 1
    probe_idx = np.unique(np.linspace(0, params.n_steps, n_mean_probes).astype(np.int64))

    lag_sums = np.zeros(lag_steps.size, dtype=np.complex128)
    lag_counts = np.zeros(lag_steps.size, dtype=np.int64)
    mean_sum = np.zeros(probe_idx.size, dtype=np.complex128)
    sq_sum = np.zeros(probe_idx.size, dtype=np.float64)  # sum of |z|^2 at probes

    done = 0
    while done < n_paths:
        b = min(chunk, n_paths - done)
        streams = [stream.child(done + i) for i in range(b)]
        z = sample_ou_paths(params, streams)
        for j, k in enumerate(lag_steps):
            prod = z[:, k:] * np.conj(z[:, : n_grid - k])
            lag_sums[j] += prod.sum()
            lag_counts[j] += prod.size
        zp = z[:, probe_idx]
        mean_sum += zp.sum(axis=0)
        sq_sum += (zp.real**2 + zp.imag**2).sum(axis=0)
        done += b

    g_hat = (lag_sums / lag_counts).real
    lag_times = lag_steps * params.dt
    g_target = (params.gamma / 2.0) * np.exp(-params.gamma * lag_times)
    rel_l2 = float(np.linalg.norm(g_hat - g_target) / np.linalg.norm(g_target))

    mean = mean_sum / n_paths
    # stderr of the complex mean magnitude (E|z|^2 ~ gamma/2 per sample)
    mean_stderr = np.sqrt(sq_sum / n_paths / n_paths)
    second = sq_sum / n_paths
    return OUStatsReport(
        n_paths=n_paths,
        lag_times=lag_times,
        autocorr_empirical=g_hat,
        autocorr_target=g_target,
        autocorr_rel_l2_error=rel_l2,
        probe_times=probe_idx * params.dt,
        mean_abs=np.abs(mean),
        mean_stderr=mean_stderr,
        second_moment=second,
        second_moment_target=params.gamma / 2.0,
    )

"""Trajectory dynamics of the dissipative two-level system.

The environment-influence function Q(t) obeys the impulsive Riccati
equation

    Qdot = g*gamma/2 + (-gamma + i*omega + i*c(t)) * Q + g * Q**2,  Q(0) = 0,

where c(t) is a shot train.  Between kicks the flow is integrated with a
fixed-step classical RK4 scheme; each delta kick acts exactly as
Q -> Q*exp(i*x_j) at its (grid-snapped) arrival time.  The survival
fidelity follows from the running integral of Re Q, which is co-integrated
to 4th order:

    F(t) = exp(-c_conv * int_0^t Re Q ds),

with c_conv = 1 for the "eq3" convention and c_conv = g for the
"amplitude" convention.  Both conventions are computed by
:func:`crosscheck_conventions`; "eq3" is the package default.

Full linear-unraveling trajectories psi = (A, B) on (|1>, |0>) evolve
under the non-Hermitian generator with the complex OU noise z*_t driving
the lower component; ensemble averages of the outer products recover the
density matrix.  Each trajectory is a pure function of its RngStream, so
ensembles are reproducible for any worker count.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import numpy.typing as npt

from .errors import (
    DivergenceBudgetError,
    DivergenceError,
    GridMismatchError,
    InvalidParameterError,
)
from .kernels import DIVERGED, riccati_rk4, state_rk4
from .noise import OUParams, OUPath, ShotNoiseParams, ShotTrain, sample_ou_path, sample_shot_train
from .rng import RngStream

__all__ = [
    "SystemParams",
    "QTrajectory",
    "FidelityCurve",
    "StateTrajectory",
    "DensityCurve",
    "TrainPolicy",
    "ConventionReport",
    "DEFAULT_GUARD",
    "integrate_q",
    "fidelity_from_q",
    "free_q_exact",
    "free_log_fidelity_exact",
    "propagate_trajectory",
    "ensemble_density",
    "crosscheck_conventions",
    "q_integral_batch",
]

DEFAULT_GUARD = 1.0e6
CONVENTIONS = ("eq3", "amplitude")


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the two-level model (dimensionless, omega = 1 scale).

    omega: bare level spacing; g: system-environment coupling;
    gamma: environmental memory rate; T: characteristic timescale used to
    quote figure-style parameters (W in units of 1/T, probes at 50T, 100T).
    """

    omega: float = 1.0
    g: float = 0.4
    gamma: float = 0.2
    T: float = 5.0

    def __post_init__(self):
        if not self.omega > 0:
            raise InvalidParameterError(f"omega must be > 0, got {self.omega}")
        if self.g < 0:
            raise InvalidParameterError(f"g must be >= 0, got {self.g}")
        if not self.gamma > 0:
            raise InvalidParameterError(f"gamma must be > 0, got {self.gamma}")
        if not self.T > 0:
            raise InvalidParameterError(f"T must be > 0, got {self.T}")

    @property
    def riccati_source(self) -> float:
        return self.g * self.gamma / 2.0

    @property
    def riccati_linear(self) -> complex:
        return complex(-self.gamma, self.omega)

    def max_dt(self) -> float:
        return min(0.01 / self.omega, 0.1 / self.gamma)


def _check_dt(sys: SystemParams, dt: float) -> None:
    if not np.isfinite(dt) or dt <= 0:
        raise InvalidParameterError(f"dt must be > 0, got {dt}")
    if dt > sys.max_dt() * (1 + 1e-12):
        raise InvalidParameterError(
            f"dt = {dt:g} too coarse; need dt <= min(0.01/omega, 0.1/gamma) = {sys.max_dt():g}"
        )


def _grid_steps(horizon: float, dt: float) -> int:
    if horizon < dt:
        raise InvalidParameterError(f"horizon = {horizon:g} shorter than one step dt = {dt:g}")
    n_steps = int(round(horizon / dt))
    if abs(n_steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise GridMismatchError(
            f"horizon = {horizon:g} is not a whole number of steps of dt = {dt:g}"
        )
    return n_steps


def _prepare_kicks(train: ShotTrain, dt: float, n_steps: int):
    """Snap kick times to grid indices and merge coincident kicks.

    Phases of kicks landing on one grid point add (the rotations commute),
    so merging is exact.  Returns (indices, amplitudes, max_snap_error).
    """
    if train.n_kicks == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), 0.0
    idx = np.rint(train.times / dt).astype(np.int64)
    snap_err = float(np.max(np.abs(train.times - idx * dt)))
    inside = idx <= n_steps
    idx, amps = idx[inside], train.amplitudes[inside]
    if idx.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), snap_err
    uniq, start = np.unique(idx, return_index=True)
    merged = np.add.reduceat(amps, start)
    return uniq, merged, snap_err


@dataclass(frozen=True)
class QTrajectory:
    """Time-discretized solution Q(t) for one shot train.

    ``values[k]`` is Q at grid time ``k*out_stride*dt``, recorded after any
    kick at that instant (kicks preserve |Q|, so the modulus is one-sided
    continuous).  ``integral[k]`` is the co-integrated running integral of
    Q, which carries the fidelity exponent.
    """

    dt: float
    out_stride: int
    values: npt.NDArray[np.complex128]
    integral: npt.NDArray[np.complex128]
    kick_indices: npt.NDArray[np.int64]
    kick_amplitudes: npt.NDArray[np.float64]
    max_snap_error: float
    sys: SystemParams

    @property
    def times(self) -> npt.NDArray[np.float64]:
        return np.arange(self.values.size) * (self.dt * self.out_stride)

    @property
    def horizon(self) -> float:
        return float((self.values.size - 1) * self.dt * self.out_stride)


@dataclass(frozen=True)
class FidelityCurve:
    """F(t) on a time grid with optional Monte Carlo stderr and provenance."""

    times: npt.NDArray[np.float64]
    values: npt.NDArray[np.float64]
    stderr: npt.NDArray[np.float64] | None = None
    provenance: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StateTrajectory:
    """Unnormalized state components (A, B) of one trajectory on (|1>, |0>)."""

    times: npt.NDArray[np.float64]
    A: npt.NDArray[np.complex128]
    B: npt.NDArray[np.complex128]


@dataclass(frozen=True)
class DensityCurve:
    """Ensemble-averaged density matrix on a time grid.

    ``rho[k]`` is the 2x2 Hermitian matrix at time ``times[k]`` in the
    basis (|1>, |0>) -- entry (0, 0) is the excited population.  ``stderr``
    holds the per-entry standard error of the complex mean.
    """

    times: npt.NDArray[np.float64]
    rho: npt.NDArray[np.complex128]
    stderr: npt.NDArray[np.float64]
    n_traj: int
    excluded: int
    provenance: dict = field(default_factory=dict)


def integrate_q(
    sys: SystemParams,
    train: ShotTrain,
    dt: float,
    horizon: float,
    out_stride: int = 1,
    guard: float = DEFAULT_GUARD,
) -> QTrajectory:
    """Integrate the impulsive Riccati equation for one shot train.

    Kick times are snapped to the nearest grid point (error <= dt/2,
    recorded in the trajectory).  Raises :class:`DivergenceError` when |Q|
    exceeds ``guard`` (finite-time Riccati blow-up).
    """
    _check_dt(sys, dt)
    n_steps = _grid_steps(horizon, dt)
    if train.horizon < horizon - 1e-9:
        raise InvalidParameterError(
            f"train horizon {train.horizon:g} shorter than integration horizon {horizon:g}"
        )
    if n_steps % out_stride:
        raise InvalidParameterError("out_stride must divide the number of steps")
    idx, amps, snap = _prepare_kicks(train, dt, n_steps)
    q, integ, status, blow = riccati_rk4(
        complex(sys.riccati_source),
        sys.riccati_linear,
        sys.g,
        dt,
        n_steps,
        idx,
        amps,
        out_stride,
        guard,
    )
    if status == DIVERGED:
        raise DivergenceError(blow * dt, guard)
    return QTrajectory(
        dt=dt,
        out_stride=out_stride,
        values=q,
        integral=integ,
        kick_indices=idx,
        kick_amplitudes=amps,
        max_snap_error=snap,
        sys=sys,
    )


def fidelity_from_q(q: QTrajectory, convention: str = "eq3") -> FidelityCurve:
    """Survival fidelity from a Q trajectory.

    F(t) = exp(-int Re Q) for the "eq3" convention, and
    F(t) = exp(-g * int Re Q) for the "amplitude" convention (the decay of
    the upper-level amplitude as integrated directly from the state
    equation; see :func:`crosscheck_conventions`).
    """
    if convention not in CONVENTIONS:
        raise InvalidParameterError(f"convention must be one of {CONVENTIONS}")
    factor = 1.0 if convention == "eq3" else q.sys.g
    F = np.exp(-factor * q.integral.real)
    prov = {
        "convention": convention,
        "dt": q.dt,
        "out_stride": q.out_stride,
        "n_kicks": int(q.kick_indices.size),
        "max_snap_error": q.max_snap_error,
        "system": vars(q.sys).copy(),
    }
    return FidelityCurve(times=q.times, values=F, provenance=prov)


# ---------------------------------------------------------------------------
# Closed-form constant-coefficient solution (c = 0), used as the oracle and
# for cheap free-dynamics reference curves.
# ---------------------------------------------------------------------------


def _free_roots(sys: SystemParams) -> tuple[complex, complex]:
    """Roots of lambda^2 - b*lambda + a*g = 0 with Re(lp) >= Re(lm).

    Derivation: the substitution Q = -udot/(g*u) linearizes the
    constant-coefficient Riccati flow to u'' - b*u' + (a*g)*u = 0 with
    u(0) = 1, u'(0) = 0.
    """
    b = sys.riccati_linear
    c = sys.riccati_source * sys.g
    disc = np.sqrt(b * b - 4.0 * c)
    lp = 0.5 * (b + disc)
    lm = 0.5 * (b - disc)
    if lp.real < lm.real:
        lp, lm = lm, lp
    return lp, lm


def free_q_exact(sys: SystemParams, times: npt.NDArray[np.float64]) -> npt.NDArray[np.complex128]:
    """Closed-form Q(t) for c = 0 (constant coefficients)."""
    times = np.asarray(times, dtype=np.float64)
    if sys.g == 0.0:
        return np.zeros_like(times, dtype=np.complex128)
    lp, lm = _free_roots(sys)
    if abs(lp - lm) < 1e-12 * max(1.0, abs(lp)):
        lam = 0.5 * (lp + lm)
        return lam * lam * times / (sys.g * (1.0 - lam * times))
    E = np.exp((lm - lp) * times)
    return -(lp * lm / sys.g) * (E - 1.0) / (lp * E - lm)


def free_log_fidelity_exact(
    sys: SystemParams, times: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    """Closed-form int_0^t Re Q ds for c = 0 (the eq3 fidelity exponent).

    Uses int Q = -(1/g) ln u, so the real part is -(1/g) ln|u| with no
    branch ambiguity; |u| is evaluated with the growing exponential
    factored out for stability.
    """
    times = np.asarray(times, dtype=np.float64)
    if sys.g == 0.0:
        return np.zeros_like(times)
    lp, lm = _free_roots(sys)
    if abs(lp - lm) < 1e-12 * max(1.0, abs(lp)):
        lam = 0.5 * (lp + lm)
        ln_abs_u = lam.real * times + np.log(np.abs(1.0 - lam * times))
    else:
        E = np.exp((lm - lp) * times)
        ln_abs_u = lp.real * times + np.log(np.abs((lp * E - lm) / (lp - lm)))
    return -ln_abs_u / sys.g


# ---------------------------------------------------------------------------
# Full linear-unraveling trajectories and ensembles
# ---------------------------------------------------------------------------


def propagate_trajectory(
    sys: SystemParams,
    train: ShotTrain,
    ou: OUPath,
    dt: float,
    out_stride: int = 1,
    guard: float = DEFAULT_GUARD,
) -> StateTrajectory:
    """Integrate one unnormalized trajectory psi = (A, B), psi(0) = (1, 0).

    The OU path must be sampled on the integration grid (same dt) and its
    memory rate must match the system's gamma.  The state is deliberately
    not normalized (linear unraveling): only ensemble averages of the
    outer products are physical.
    """
    _check_dt(sys, dt)
    if not np.isclose(ou.params.dt, dt, rtol=1e-12, atol=0.0):
        raise GridMismatchError(
            f"OU path step {ou.params.dt:g} does not match requested dt {dt:g}"
        )
    if not np.isclose(ou.params.gamma, sys.gamma, rtol=1e-12, atol=0.0):
        raise InvalidParameterError(
            f"OU memory rate {ou.params.gamma:g} differs from system gamma {sys.gamma:g}"
        )
    n_steps = ou.params.n_steps
    horizon = n_steps * dt
    if train.horizon < horizon - 1e-9:
        raise InvalidParameterError(
            f"train horizon {train.horizon:g} shorter than the OU path horizon {horizon:g}"
        )
    if n_steps % out_stride:
        raise InvalidParameterError("out_stride must divide the number of steps")
    idx, amps, _ = _prepare_kicks(train, dt, n_steps)
    A, B, status, blow = state_rk4(
        complex(sys.riccati_source),
        sys.riccati_linear,
        sys.g,
        sys.omega,
        dt,
        n_steps,
        idx,
        amps,
        ou.values,
        out_stride,
        guard,
    )
    if status == DIVERGED:
        raise DivergenceError(blow * dt, guard)
    times = np.arange(A.size) * (dt * out_stride)
    return StateTrajectory(times=times, A=A, B=B)


@dataclass(frozen=True)
class TrainPolicy:
    """How ensemble trajectories obtain their control-noise realization.

    mode "fresh": a new train per trajectory (substream (2, i));
    mode "shared": one train for the whole ensemble, either supplied via
    ``train`` or sampled once from substream (0,);
    mode "none": no control noise (c = 0).
    """

    mode: str
    shot: ShotNoiseParams | None = None
    train: ShotTrain | None = None

    def __post_init__(self):
        if self.mode not in ("fresh", "shared", "none"):
            raise InvalidParameterError(f"unknown train policy mode {self.mode!r}")
        if self.mode == "fresh" and self.shot is None:
            raise InvalidParameterError("fresh-train policy requires shot-noise params")
        if self.mode == "shared" and self.shot is None and self.train is None:
            raise InvalidParameterError("shared-train policy requires params or a train")


def _empty_train(horizon: float) -> ShotTrain:
    return ShotTrain(horizon, np.empty(0), np.empty(0))


def _run_chunked(
    n_jobs: int,
    chunk_size: int,
    n_workers: int,
    worker: Callable[[int, int], object],
) -> list:
    """Run ``worker(start, stop)`` over fixed chunks; results in chunk order.

    The chunk layout depends only on ``chunk_size``, never on the worker
    count, so reductions over the returned list are bit-reproducible.
    """
    bounds = [(s, min(s + chunk_size, n_jobs)) for s in range(0, n_jobs, chunk_size)]
    if n_workers <= 1 or len(bounds) <= 1:
        return [worker(s, e) for s, e in bounds]
    with concurrent.futures.ThreadPoolExecutor(max_workers=n_workers) as pool:
        futures = [pool.submit(worker, s, e) for s, e in bounds]
        return [f.result() for f in futures]


def ensemble_density(
    sys: SystemParams,
    policy: TrainPolicy,
    n_traj: int,
    dt: float,
    horizon: float,
    stream: RngStream,
    out_stride: int = 1,
    n_workers: int = 1,
    chunk_size: int = 256,
    guard: float = DEFAULT_GUARD,
) -> DensityCurve:
    """Monte Carlo density matrix rho_t = M[|psi_t><psi_t|].

    Trajectory i draws its OU path from substream (1, i) and, under the
    fresh-train policy, its train from substream (2, i).  Outer products
    are reduced in fixed trajectory order (chunk by chunk), so the result
    is byte-identical for any worker count.  Divergent trajectories are
    excluded and counted; more than 1% exclusions raises
    :class:`DivergenceBudgetError`.
    """
    if n_traj < 1:
        raise InvalidParameterError("n_traj must be >= 1")
    _check_dt(sys, dt)
    n_steps = _grid_steps(horizon, dt)
    if n_steps % out_stride:
        raise InvalidParameterError("out_stride must divide the number of steps")
    ou_params = OUParams(gamma=sys.gamma, dt=dt, n_steps=n_steps)
    a = complex(sys.riccati_source)
    b = sys.riccati_linear

    if policy.mode == "shared":
        shared = policy.train
        if shared is None:
            shared = sample_shot_train(policy.shot, horizon, stream.child(0))
        shared_kicks = _prepare_kicks(shared, dt, n_steps)
    elif policy.mode == "none":
        shared_kicks = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), 0.0)
    else:
        shared_kicks = None

    n_out = n_steps // out_stride + 1

    def worker(start: int, stop: int):
        rho_sum = np.zeros((n_out, 2, 2), dtype=np.complex128)
        abs2_sum = np.zeros((n_out, 2, 2), dtype=np.float64)
        excluded = []
        for i in range(start, stop):
            ou = sample_ou_path(ou_params, stream.child(1, i))
            if policy.mode == "fresh":
                train = sample_shot_train(policy.shot, horizon, stream.child(2, i))
                idx, amps, _ = _prepare_kicks(train, dt, n_steps)
            else:
                idx, amps, _ = shared_kicks
            A, B, status, _ = state_rk4(
                a, b, sys.g, sys.omega, dt, n_steps, idx, amps, ou.values, out_stride, guard
            )
            if status == DIVERGED:
                excluded.append(i)
                continue
            rho = np.empty((n_out, 2, 2), dtype=np.complex128)
            rho[:, 0, 0] = A * np.conj(A)
            rho[:, 0, 1] = A * np.conj(B)
            rho[:, 1, 0] = np.conj(rho[:, 0, 1])
            rho[:, 1, 1] = B * np.conj(B)
            rho_sum += rho
            abs2_sum += rho.real**2 + rho.imag**2
        return rho_sum, abs2_sum, excluded

    rho_sum = np.zeros((n_out, 2, 2), dtype=np.complex128)
    abs2_sum = np.zeros((n_out, 2, 2), dtype=np.float64)
    excluded: list[int] = []
    for part_rho, part_abs2, part_exc in _run_chunked(n_traj, chunk_size, n_workers, worker):
        rho_sum += part_rho
        abs2_sum += part_abs2
        excluded.extend(part_exc)

    n_used = n_traj - len(excluded)
    if len(excluded) > 0.01 * n_traj or n_used == 0:
        raise DivergenceBudgetError(len(excluded), n_traj)
    rho = rho_sum / n_used
    if n_used > 1:
        var = (abs2_sum / n_used - (rho.real**2 + rho.imag**2)) * n_used / (n_used - 1)
        stderr = np.sqrt(np.maximum(var, 0.0) / n_used)
    else:
        stderr = np.full((n_out, 2, 2), np.nan)
    times = np.arange(n_out) * (dt * out_stride)
    prov = {
        "n_traj": n_traj,
        "excluded": len(excluded),
        "dt": dt,
        "out_stride": out_stride,
        "train_policy": policy.mode,
        "master_seed": stream.master_seed,
        "stream_index": list(stream.stream_index),
        "system": vars(sys).copy(),
    }
    return DensityCurve(
        times=times, rho=rho, stderr=stderr, n_traj=n_used, excluded=len(excluded), provenance=prov
    )


@dataclass(frozen=True)
class ConventionReport:
    """Comparison of the two fidelity conventions on one configuration.

    ``lnF_eq3`` is -int Re Q (the exponent as published); ``lnF_amplitude``
    is ln|A(t)| from direct integration of the state equation with z* = 0,
    which carries an extra factor g.  Their pointwise ratio should equal g;
    the report records the worst deviation.  The package default for
    figure-level runs is "eq3"; the alternative is reported, never
    silently substituted.
    """

    times: npt.NDArray[np.float64]
    lnF_eq3: npt.NDArray[np.float64]
    lnF_amplitude: npt.NDArray[np.float64]
    ratio: npt.NDArray[np.float64]
    g: float
    max_ratio_deviation: float
    default_convention: str = "eq3"

    def to_dict(self) -> dict:
        return {
            "g": self.g,
            "max_ratio_deviation": self.max_ratio_deviation,
            "default_convention": self.default_convention,
            "n_points": int(self.times.size),
        }


def crosscheck_conventions(
    sys: SystemParams,
    train: ShotTrain,
    dt: float,
    horizon: float,
    out_stride: int = 1,
) -> ConventionReport:
    """Compute both fidelity exponents along independent routes.

    Route 1 integrates the Riccati equation and its running integral;
    route 2 integrates the state amplitude A(t) directly (with z* = 0) and
    takes ln|A|.  Their ratio isolates the factor-g ambiguity between the
    two conventions.  Points with a negligible exponent (including t = 0)
    are excluded from the ratio to avoid 0/0.
    """
    q = integrate_q(sys, train, dt, horizon, out_stride=out_stride)
    n_steps = _grid_steps(horizon, dt)
    ou = OUPath(np.zeros(n_steps + 1, dtype=np.complex128), OUParams(sys.gamma, dt, n_steps))
    state = propagate_trajectory(sys, train, ou, dt, out_stride=out_stride)
    lnF_eq3 = -q.integral.real
    lnF_amp = np.log(np.abs(state.A))
    ratio = np.full_like(lnF_eq3, np.nan)
    valid = np.abs(lnF_eq3) > 1e-12
    ratio[valid] = lnF_amp[valid] / lnF_eq3[valid]
    deviations = np.abs(ratio[valid] - sys.g)
    max_dev = float(deviations.max()) if deviations.size else float("nan")
    return ConventionReport(
        times=q.times,
        lnF_eq3=lnF_eq3,
        lnF_amplitude=lnF_amp,
        ratio=ratio,
        g=sys.g,
        max_ratio_deviation=max_dev,
    )


def q_integral_batch(
    sys: SystemParams,
    trains: Sequence[ShotTrain],
    dt: float,
    horizon: float,
    out_stride: int = 1,
    n_workers: int = 1,
    chunk_size: int = 64,
    guard: float = DEFAULT_GUARD,
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.bool_]]:
    """Running integral of Re Q for a batch of trains.

    Returns (integrals, ok) where ``integrals`` has shape
    (len(trains), n_out) and ``ok`` flags trains that did not diverge
    (diverged rows hold NaN).  Rows are filled by train index, so the
    result does not depend on the worker count.
    """
    _check_dt(sys, dt)
    n_steps = _grid_steps(horizon, dt)
    if n_steps % out_stride:
        raise InvalidParameterError("out_stride must divide the number of steps")
    n_out = n_steps // out_stride + 1
    a = complex(sys.riccati_source)
    b = sys.riccati_linear
    out = np.full((len(trains), n_out), np.nan)
    ok = np.zeros(len(trains), dtype=bool)

    def worker(start: int, stop: int):
        for i in range(start, stop):
            if trains[i].horizon < horizon - 1e-9:
                raise InvalidParameterError("train horizon shorter than integration horizon")
            idx, amps, _ = _prepare_kicks(trains[i], dt, n_steps)
            _, integ, status, _ = riccati_rk4(
                a, b, sys.g, dt, n_steps, idx, amps, out_stride, guard
            )
            if status != DIVERGED:
                out[i] = integ.real
                ok[i] = True
        return None

    _run_chunked(len(trains), chunk_size, n_workers, worker)
    return out, ok

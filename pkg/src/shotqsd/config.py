"""Experiment configuration: flat key=value text, presets, round-trip safe.

Grammar
-------
One ``key = value`` pair per line, UTF-8; ``#`` starts a comment (full line
or trailing); blank lines ignored.  List values are comma-separated.
Unknown keys are rejected.  Validation reports *all* problems at once.

Units
-----
``omega``, ``g``, ``gamma`` and ``dt`` are per unit time (omega = 1 scale);
``omega_T`` fixes the characteristic timescale T = omega_T/omega.  Figure
style parameters follow the captions: ``J`` (and ``J_values``) in units of
omega, ``W`` (and ``W_values``) in units of 1/T, probe times and horizons
in units of T.  ``kick_scale`` selects how J maps to the mean kick
amplitude of the sampled trains (see :mod:`shotqsd.analysis`); noise-test
mode is the exception: it validates the sampler itself, so there J *is*
the mean kick amplitude and W is still quoted in 1/T.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Any

from .analysis import KICK_SCALES
from .dynamics import CONVENTIONS, SystemParams
from .errors import ConfigError, InvalidParameterError
from .noise import AMPLITUDE_LAWS

__all__ = ["ExperimentConfig", "MODES", "parse_config", "serialize_config", "preset_config", "PRESETS"]

MODES = ("simulate", "sweep", "markov-scan", "washout", "noise-test", "crosscheck")
TRAIN_POLICIES = ("fresh", "shared")


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v.strip()) for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved configuration of one run.

    Every field has a default except ``mode``; the mode decides which
    fields an execution actually consumes.
    """

    mode: str
    # physical system
    omega: float = 1.0
    omega_T: float = 5.0
    g: float = 0.4
    gamma: float = 0.2
    # noise, figure-style units
    J: float = 15.0
    W: float = 1000.0
    J_values: tuple[float, ...] = ()
    W_values: tuple[float, ...] = ()
    gamma_values: tuple[float, ...] = (0.2, 0.5, 5.0)
    amplitude_law: str = "exponential"
    kick_scale: str = "mean-rate"
    # discretization and probes (times in units of T)
    dt: float = 1e-3
    horizon_T: float = 100.0
    probe_times_T: tuple[float, ...] = (50.0, 100.0)
    t_probe_T: float = 50.0
    out_stride: int = 250
    # ensemble sizes
    n_trains: int = 32
    n_traj: int = 2000
    train_policy: str = "fresh"
    fidelity_convention: str = "eq3"
    # noise-test sizes
    nt_n_trains: int = 10000
    nt_horizon_T: float = 10.0
    nt_ou_n_paths: int = 10000
    nt_ou_dt: float = 0.01
    nt_ou_n_steps: int = 3500
    nt_ou_max_lag: float = 25.0
    nt_ou_n_lags: int = 26
    # execution
    master_seed: int = 12345
    threads: int = 0  # 0 = all available
    out_dir: str = "out"

    @property
    def T(self) -> float:
        return self.omega_T / self.omega

    def system(self, gamma: float | None = None) -> SystemParams:
        return SystemParams(
            omega=self.omega,
            g=self.g,
            gamma=self.gamma if gamma is None else gamma,
            T=self.T,
        )

    def rate_of(self, W_figure: float) -> float:
        """Convert a figure-style W (units of 1/T) to a rate per unit time."""
        return W_figure / self.T

    @property
    def horizon(self) -> float:
        return self.horizon_T * self.T

    @property
    def probe_times(self) -> tuple[float, ...]:
        return tuple(p * self.T for p in self.probe_times_T)


_PARSERS: dict[str, Any] = {
    "mode": str,
    "omega": float,
    "omega_T": float,
    "g": float,
    "gamma": float,
    "J": float,
    "W": float,
    "J_values": _float_list,
    "W_values": _float_list,
    "gamma_values": _float_list,
    "amplitude_law": str,
    "kick_scale": str,
    "dt": float,
    "horizon_T": float,
    "probe_times_T": _float_list,
    "t_probe_T": float,
    "out_stride": int,
    "n_trains": int,
    "n_traj": int,
    "train_policy": str,
    "fidelity_convention": str,
    "nt_n_trains": int,
    "nt_horizon_T": float,
    "nt_ou_n_paths": int,
    "nt_ou_dt": float,
    "nt_ou_n_steps": int,
    "nt_ou_max_lag": float,
    "nt_ou_n_lags": int,
    "master_seed": int,
    "threads": int,
    "out_dir": str,
}


def _validate(cfg: ExperimentConfig, problems: list[str]) -> None:
    if cfg.mode not in MODES:
        problems.append(f"mode: must be one of {', '.join(MODES)}; got {cfg.mode!r}")
    if cfg.omega <= 0:
        problems.append(f"omega: must be > 0, got {cfg.omega}")
    if cfg.omega_T <= 0:
        problems.append(f"omega_T: must be > 0, got {cfg.omega_T}")
    if cfg.g < 0:
        problems.append(f"g: must be >= 0, got {cfg.g}")
    if cfg.gamma <= 0:
        problems.append(f"gamma: must be > 0, got {cfg.gamma}")
    if cfg.J < 0:
        problems.append(f"J: must be >= 0, got {cfg.J}")
    if cfg.W < 0:
        problems.append(f"W: must be >= 0, got {cfg.W}")
    for key in ("J_values", "W_values", "gamma_values"):
        vals = getattr(cfg, key)
        if any(v < 0 for v in vals):
            problems.append(f"{key}: entries must be >= 0")
        if key == "gamma_values" and any(v == 0 for v in vals):
            problems.append("gamma_values: entries must be > 0")
    if cfg.dt <= 0:
        problems.append(f"dt: must be > 0, got {cfg.dt}")
    elif cfg.omega > 0 and cfg.gamma > 0:
        gammas = list(cfg.gamma_values) if cfg.mode == "markov-scan" else []
        bound = min(
            [0.01 / cfg.omega] + [0.1 / g for g in [cfg.gamma] + gammas if g > 0]
        )
        if cfg.dt > bound * (1 + 1e-12):
            problems.append(
                f"dt: {cfg.dt} too coarse; need dt <= min(0.01/omega, 0.1/gamma) = {bound:g}"
            )
    if cfg.horizon_T <= 0:
        problems.append(f"horizon_T: must be > 0, got {cfg.horizon_T}")
    if any(p <= 0 for p in cfg.probe_times_T):
        problems.append("probe_times_T: entries must be > 0")
    if cfg.t_probe_T <= 0:
        problems.append(f"t_probe_T: must be > 0, got {cfg.t_probe_T}")
    if cfg.out_stride < 1:
        problems.append(f"out_stride: must be >= 1, got {cfg.out_stride}")
    for key in ("n_trains", "n_traj", "nt_n_trains", "nt_ou_n_paths", "nt_ou_n_steps", "nt_ou_n_lags"):
        if getattr(cfg, key) < 1:
            problems.append(f"{key}: must be >= 1, got {getattr(cfg, key)}")
    if cfg.nt_horizon_T <= 0:
        problems.append(f"nt_horizon_T: must be > 0, got {cfg.nt_horizon_T}")
    if cfg.nt_ou_dt <= 0:
        problems.append(f"nt_ou_dt: must be > 0, got {cfg.nt_ou_dt}")
    elif cfg.gamma > 0 and cfg.nt_ou_dt * cfg.gamma > 0.05:
        problems.append(
            f"nt_ou_dt: dt*gamma = {cfg.nt_ou_dt * cfg.gamma:g} exceeds the 0.05 stability limit"
        )
    if cfg.nt_ou_max_lag <= 0:
        problems.append(f"nt_ou_max_lag: must be > 0, got {cfg.nt_ou_max_lag}")
    if cfg.train_policy not in TRAIN_POLICIES:
        problems.append(f"train_policy: must be one of {', '.join(TRAIN_POLICIES)}")
    if cfg.fidelity_convention not in CONVENTIONS:
        problems.append(f"fidelity_convention: must be one of {', '.join(CONVENTIONS)}")
    if cfg.kick_scale not in KICK_SCALES:
        problems.append(f"kick_scale: must be one of {', '.join(KICK_SCALES)}")
    if cfg.amplitude_law not in AMPLITUDE_LAWS:
        problems.append(f"amplitude_law: must be one of {', '.join(AMPLITUDE_LAWS)}")
    if not 0 <= cfg.master_seed < 2**64:
        problems.append(f"master_seed: must fit in 64 bits, got {cfg.master_seed}")
    if cfg.threads < 0:
        problems.append(f"threads: must be >= 0, got {cfg.threads}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text.

    Raises :class:`ConfigError` carrying every problem found: unknown
    keys, type mismatches and invariant violations, each naming the
    offending key.
    """
    problems: list[str] = []
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _PARSERS:
            problems.append(f"{key}: unknown key (line {lineno})")
            continue
        if key in values:
            problems.append(f"{key}: duplicate assignment (line {lineno})")
            continue
        try:
            values[key] = _PARSERS[key](val)
        except ValueError:
            problems.append(
                f"{key}: cannot parse {val!r} as {_PARSERS[key].__name__} (line {lineno})"
            )
    if "mode" not in values and not any(p.startswith("mode:") for p in problems):
        problems.append("mode: required key is missing")
    if problems and "mode" not in values:
        raise ConfigError(problems)
    try:
        cfg = ExperimentConfig(**values)
    except TypeError:
        raise ConfigError(problems + ["internal: could not assemble configuration"])
    _validate(cfg, problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; ``parse_config`` round-trips it exactly."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            lines.append(f"{f.name} = {', '.join(repr(x) for x in v)}")
        elif isinstance(v, str):
            lines.append(f"{f.name} = {v}")
        else:
            lines.append(f"{f.name} = {v!r}")
    return "\n".join(lines) + "\n"


_FLUX_QUBIT = """\
# Superconducting flux qubit preset (dimensionless units, omega = 1).
#
# Physical mapping: the level spacing of a flux qubit is omega ~ 1e9-1e10 Hz
# and its relaxation time is T1 ~ 1 us.  Taking the characteristic
# timescale as T = 5 ns gives the dimensionless omega*T = 5 used here
# (T is assumed to be quoted in nanoseconds).  A noise strength J above
# ~1e9 Hz (J >= omega, i.e. J >= 1 in these units) is then required for
# effective suppression; J = 15 sits comfortably in that regime.
mode = simulate
omega = 1.0
omega_T = 5.0
g = 0.4
gamma = 0.2
J = 15.0
W = 1000.0           # units of 1/T
horizon_T = 100.0
dt = 0.001
n_trains = 32
master_seed = 12345
"""

PRESETS = {"flux-qubit": _FLUX_QUBIT}


def preset_config(name: str) -> str:
    """Return the text of a named preset configuration."""
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidParameterError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None


def apply_overrides(
    cfg: ExperimentConfig,
    seed: int | None = None,
    out_dir: str | None = None,
    threads: int | None = None,
) -> ExperimentConfig:
    """Apply command-line overrides onto a parsed configuration."""
    updates: dict[str, Any] = {}
    if seed is not None:
        updates["master_seed"] = seed
    if out_dir is not None:
        updates["out_dir"] = out_dir
    if threads is not None:
        updates["threads"] = threads
    if not updates:
        return cfg
    new = replace(cfg, **updates)
    problems: list[str] = []
    _validate(new, problems)
    if problems:
        raise ConfigError(problems)
    return new

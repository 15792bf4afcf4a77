"""Serialization of results: CSV/JSON with embedded provenance, atomic writes.

Every output file embeds a provenance header (code version, resolved
config, master seed, excluded-trajectory count).  The wall-clock stamp
lives only in the run manifest, so data files are byte-identical across
reruns of the same (config, seed).  Numeric formatting is fixed at 17
significant digits for reproducibility.

Files are written to a temporary path in the target directory and renamed
into place, so a failed run leaves no partially-written outputs.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from typing import Iterable, Sequence

import numpy as np

from .analysis import CurveSet, IntegrandSeries, MarkovScan, SweepGrid
from .dynamics import ConventionReport, DensityCurve, FidelityCurve
from .noise import MomentsReport, OUStatsReport

__all__ = [
    "format_number",
    "atomic_write_text",
    "write_csv",
    "write_json",
    "emit_plotdata",
    "sha256_of_file",
]


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def atomic_write_text(path: str, text: str) -> str:
    """Write text to ``path`` via a temporary file and atomic rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _provenance_line(provenance: dict | None) -> str:
    if provenance is None:
        return ""
    return "# provenance: " + json.dumps(provenance, sort_keys=True, default=str) + "\n"


def write_csv(
    path: str,
    header: Sequence[str],
    rows: Iterable[Sequence],
    provenance: dict | None = None,
) -> str:
    lines = [_provenance_line(provenance) + ",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path: str, obj: dict, provenance: dict | None = None) -> str:
    doc = dict(obj)
    if provenance is not None:
        doc = {"provenance": provenance, **doc}
    return atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def sha256_of_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _fidelity_rows(curve: FidelityCurve):
    if curve.stderr is None:
        header = ["t", "F"]
        rows = zip(curve.times, curve.values)
    else:
        header = ["t", "F", "stderr"]
        rows = zip(curve.times, curve.values, curve.stderr)
    return header, rows


def _sweep_rows(grid: SweepGrid):
    header = ["J", "W", "t_probe", "F", "stderr", "above_0.99", "n_traj"]
    T = grid.provenance.get("system", {}).get("T", 1.0)
    mask = grid.above(0.99)
    rows = []
    for j, J in enumerate(grid.J_values):
        for w, W in enumerate(grid.W_values):
            for p, t in enumerate(grid.probe_times):
                rows.append(
                    (
                        J,
                        W * T,  # quoted in units of 1/T, as in configs
                        t,
                        grid.fidelity[j, w, p],
                        grid.stderr[j, w, p],
                        mask[j, w, p],
                        grid.n_used[j, w],
                    )
                )
    return header, rows


def _markov_rows(scan: MarkovScan):
    header = ["gamma", "F_noise", "F_free", "gain"]
    rows = zip(scan.gamma_values, scan.f_noise, scan.f_free, scan.gains)
    return header, rows


def _integrand_rows(series: IntegrandSeries):
    header = ["t", "re_N", "im_N", "re_h", "im_h", "re_I", "im_I"]
    rows = zip(
        series.times,
        series.N.real,
        series.N.imag,
        series.h.real,
        series.h.imag,
        series.partial_integral.real,
        series.partial_integral.imag,
    )
    return header, rows


def _density_rows(curve: DensityCurve):
    header = [
        "t",
        "re_rho11", "im_rho11", "re_rho10", "im_rho10",
        "re_rho01", "im_rho01", "re_rho00", "im_rho00",
        "stderr_rho11", "stderr_rho00",
    ]
    r = curve.rho
    rows = zip(
        curve.times,
        r[:, 0, 0].real, r[:, 0, 0].imag, r[:, 0, 1].real, r[:, 0, 1].imag,
        r[:, 1, 0].real, r[:, 1, 0].imag, r[:, 1, 1].real, r[:, 1, 1].imag,
        curve.stderr[:, 0, 0], curve.stderr[:, 1, 1],
    )
    return header, rows


def _crosscheck_rows(rep: ConventionReport):
    header = ["t", "lnF_eq3", "lnF_amplitude", "ratio"]
    rows = zip(rep.times, rep.lnF_eq3, rep.lnF_amplitude, rep.ratio)
    return header, rows


def emit_plotdata(result, path: str, provenance: dict | None = None) -> str:
    """Write any result object to its documented schema at ``path``.

    CSV schemas: FidelityCurve -> t,F[,stderr]; SweepGrid ->
    J,W,t_probe,F,stderr,above_0.99,n_traj; MarkovScan ->
    gamma,F_noise,F_free,gain; IntegrandSeries -> t plus six numeric
    columns (Re/Im of N, h and the running integral).  Report objects
    (MomentsReport, OUStatsReport, ConventionReport summaries) go to JSON.
    A FidelityCurve whose ``path`` ends in ``.json`` is written as JSON
    (its own provenance plus the t/F[/stderr] arrays).
    """
    if isinstance(result, FidelityCurve) and path.endswith(".json"):
        doc = {
            "curve_provenance": result.provenance,
            "t": result.times.tolist(),
            "F": result.values.tolist(),
        }
        if result.stderr is not None:
            doc["stderr"] = result.stderr.tolist()
        return write_json(path, doc, provenance)
    if isinstance(result, FidelityCurve):
        header, rows = _fidelity_rows(result)
    elif isinstance(result, SweepGrid):
        header, rows = _sweep_rows(result)
    elif isinstance(result, MarkovScan):
        header, rows = _markov_rows(result)
    elif isinstance(result, IntegrandSeries):
        header, rows = _integrand_rows(result)
    elif isinstance(result, DensityCurve):
        header, rows = _density_rows(result)
    elif isinstance(result, ConventionReport):
        header, rows = _crosscheck_rows(result)
    elif isinstance(result, (MomentsReport, OUStatsReport)):
        return write_json(path, result.to_dict(), provenance)
    elif isinstance(result, CurveSet):
        raise TypeError("emit each curve of a CurveSet separately")
    else:
        raise TypeError(f"no writer for result type {type(result).__name__}")
    return write_csv(path, header, rows, provenance)

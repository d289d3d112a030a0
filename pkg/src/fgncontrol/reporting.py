"""Deterministic CSV and JSON serialization for solver artifacts.

Floats are written with 17 significant digits so that identical inputs
produce byte-identical files and values round-trip through float64.
All writers emit '\n' line endings regardless of platform.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .dynamics import ControlProcess
from .errors import ConfigError
from .lattice import NoiseLattice, SamplePaths, condexp, white_value

__all__ = [
    "ensure_out_dir",
    "fmt",
    "read_control_csv",
    "read_matrix_csv",
    "write_adjoint_csv",
    "write_bsde_csv",
    "write_control_csv",
    "write_json",
    "write_lq_trace_csv",
    "write_matrix_csv",
    "write_optimize_trace_csv",
    "write_paths_csv",
    "write_residual_csv",
    "write_state_csv",
]


def fmt(x: float) -> str:
    """17-significant-digit decimal; adding 0.0 maps -0.0 to 0.0."""
    return format(float(x) + 0.0, ".17g")


def _write_rows(path: str, header: tuple[str, ...], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_matrix_csv(path: str, mat: np.ndarray) -> None:
    """Header `n,k,value`, one row per nonzero entry, row-major order."""
    rows = [
        (str(n), str(k), fmt(mat[n, k]))
        for n in range(mat.shape[0])
        for k in range(mat.shape[1])
        if mat[n, k] != 0.0
    ]
    _write_rows(path, ("n", "k", "value"), rows)


def read_matrix_csv(path: str) -> np.ndarray:
    """Inverse of write_matrix_csv; size inferred from the largest index.

    Raises ConfigError on schema violations.  OSError propagates.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty matrix file") from None
        if header != ["n", "k", "value"]:
            raise ConfigError(f"{path}: expected header n,k,value, got {header!r}")
        entries = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ConfigError(f"{path}: line {lineno}: expected 3 fields")
            try:
                n, k, value = int(row[0]), int(row[1]), float(row[2])
            except ValueError as exc:
                raise ConfigError(f"{path}: line {lineno}: {exc}") from None
            if n < 0 or k < 0:
                raise ConfigError(f"{path}: line {lineno}: negative index")
            entries.append((n, k, value))
    if not entries:
        raise ConfigError(f"{path}: no matrix entries")
    size = 1 + max(max(n, k) for n, k, _ in entries)
    mat = np.zeros((size, size))
    for n, k, value in entries:
        mat[n, k] = value
    return mat


def write_state_csv(path: str, lat: NoiseLattice, values_by_stage) -> None:
    """Header `stage,node_index,value,probability`; one block per stage."""
    rows = []
    for stage, val in enumerate(values_by_stage):
        probs = lat.node_probabilities(val.level)
        rows.extend(
            (str(stage), str(i), fmt(v), fmt(p))
            for i, (v, p) in enumerate(zip(val.values, probs))
        )
    _write_rows(path, ("stage", "node_index", "value", "probability"), rows)


def write_control_csv(path: str, lat: NoiseLattice, control: ControlProcess) -> None:
    write_state_csv(path, lat, (control[n] for n in range(control.horizon)))


def read_control_csv(path: str, lat: NoiseLattice, horizon: int) -> ControlProcess:
    """Read a control written by write_control_csv onto the given lattice.

    The probability column is ignored; each stage n must supply exactly
    one value per level-n node, in node order.
    """
    per_stage: dict[int, list[tuple[int, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty control file") from None
        if header[:3] != ["stage", "node_index", "value"]:
            raise ConfigError(
                f"{path}: expected header stage,node_index,value[,probability], got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if len(row) not in (3, 4):
                raise ConfigError(f"{path}: line {lineno}: expected 3 or 4 fields")
            try:
                stage, idx, value = int(row[0]), int(row[1]), float(row[2])
            except ValueError as exc:
                raise ConfigError(f"{path}: line {lineno}: {exc}") from None
            per_stage.setdefault(stage, []).append((idx, value))
    stages = []
    for n in range(horizon):
        if n not in per_stage:
            raise ConfigError(f"{path}: missing rows for stage {n}")
        got = sorted(per_stage[n])
        expected = lat.level_size(n)
        if [i for i, _ in got] != list(range(expected)):
            raise ConfigError(
                f"{path}: stage {n} must have node indices 0..{expected - 1}"
            )
        stages.append(lat.from_values(n, np.array([v for _, v in got])))
    extra = set(per_stage) - set(range(horizon))
    if extra:
        raise ConfigError(f"{path}: unexpected stages {sorted(extra)}")
    return ControlProcess(stages)


def write_bsde_csv(path: str, lat: NoiseLattice, sol) -> None:
    """Header `stage,node_index,Y,Z,R_mean_check,R_eta_check`.

    Stages 0..N-1 carry Y, Z and the two conditional moments of the
    orthogonal residual (all at level n); the terminal stage carries Y
    only, with the remaining fields empty.
    """
    n_stages = sol.horizon
    rows = []
    for n in range(n_stages):
        r_mean = condexp(sol.r[n], n).values
        r_eta = condexp(white_value(lat, n) * sol.r[n], n).values
        y, z = sol.y[n].values, sol.z[n].values
        rows.extend(
            (str(n), str(i), fmt(y[i]), fmt(z[i]), fmt(r_mean[i]), fmt(r_eta[i]))
            for i in range(y.shape[0])
        )
    terminal = sol.y[n_stages].values
    rows.extend(
        (str(n_stages), str(i), fmt(v), "", "", "") for i, v in enumerate(terminal)
    )
    _write_rows(path, ("stage", "node_index", "Y", "Z", "R_mean_check", "R_eta_check"), rows)


def write_adjoint_csv(path: str, sol) -> None:
    """Header `stage,node_index,p,q` for the adjoint pair."""
    rows = []
    for n in range(sol.horizon):
        p, q = sol.y[n].values, sol.z[n].values
        rows.extend((str(n), str(i), fmt(p[i]), fmt(q[i])) for i in range(p.shape[0]))
    _write_rows(path, ("stage", "node_index", "p", "q"), rows)


def write_residual_csv(path: str, residual, control, classification) -> None:
    """Header `stage,node_index,rho,u_star,classification,violation`.

    `classification` is a sequence of (passed_array, violation_array)
    per stage; passed nodes print as "pass", others as "fail".
    """
    rows = []
    for n, (rho, u_n, (ok, viol)) in enumerate(zip(residual, control, classification)):
        rows.extend(
            (
                str(n),
                str(i),
                fmt(rho.values[i]),
                fmt(u_n.values[i]),
                "pass" if ok[i] else "fail",
                fmt(viol[i]),
            )
            for i in range(rho.values.shape[0])
        )
    _write_rows(
        path, ("stage", "node_index", "rho", "u_star", "classification", "violation"), rows
    )


def write_optimize_trace_csv(path: str, trace) -> None:
    """Header `iter,J,step,worst_residual`."""
    rows = [
        (str(pt.iteration), fmt(pt.cost), fmt(pt.step), fmt(pt.worst_residual))
        for pt in trace
    ]
    _write_rows(path, ("iter", "J", "step", "worst_residual"), rows)


def write_lq_trace_csv(path: str, trace) -> None:
    """Header `iter,J,residual` for the fixed-point iteration record."""
    rows = [(str(pt.iteration), fmt(pt.cost), fmt(pt.residual)) for pt in trace]
    _write_rows(path, ("iter", "J", "residual"), rows)


def write_paths_csv(path: str, paths: SamplePaths) -> None:
    """Header `path_index,stage,eta,xi,probability`.

    Monte Carlo draws are equiprobable, so probability is 1/n_paths.
    """
    n_paths, horizon = paths.eta.shape
    prob = fmt(1.0 / n_paths)
    rows = [
        (str(i), str(n), fmt(paths.eta[i, n]), fmt(paths.xi[i, n]), prob)
        for i in range(n_paths)
        for n in range(horizon)
    ]
    _write_rows(path, ("path_index", "stage", "eta", "xi", "probability"), rows)


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(path: str, obj) -> None:
    """Sorted keys, two-space indent, trailing newline, no NaN/inf."""
    text = json.dumps(obj, sort_keys=True, indent=2, allow_nan=False, default=_json_default)
    with open(path, "w", newline="") as fh:
        fh.write(text + "\n")


def ensure_out_dir(out: str) -> str:
    """Create the output directory if needed; OSError propagates."""
    os.makedirs(out, exist_ok=True)
    return out

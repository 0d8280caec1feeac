"""Text persistence for configurations, trajectories, fields and reports.

All files are UTF-8 with LF newlines and 17-significant-digit decimal floats,
which round-trip binary64 exactly: reading a written file reproduces the
in-memory arrays bit for bit.  Report files carry a leading block of
``# key = value`` comment lines (format version first) followed by a plain
CSV header row; readers skip the comment block.
"""

import csv
import io as _io
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .fields import CoarseFields, GridSpec
from .initcond import InitialConfiguration, ScalingPlan
from .potentials import PotentialSpec

TRAJECTORY_VERSION = 1
IC_VERSION = 1
FIELDS_VERSION = 1
RESIDUALS_VERSION = 1
SWEEP_VERSION = 1


def fmt(x) -> str:
    """Shortest-faithful decimal for a float (17 significant digits)."""
    return f"{float(x):.17g}"


def _fmt_vec(values) -> str:
    return " ".join(fmt(v) for v in np.asarray(values, dtype=np.float64).ravel())


def _write_text(path, text):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _parse_header(lines):
    """Collect '# key = value' pairs from leading comment lines."""
    meta = {}
    body_start = 0
    for k, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = k
            break
        body_start = k + 1
        stripped = line[1:].strip()
        if "=" in stripped:
            key, _, value = stripped.partition("=")
            meta[key.strip()] = value.strip()
    return meta, lines[body_start:]


def potential_from_descriptor(descriptor: str) -> PotentialSpec:
    descriptor = descriptor.strip()
    if descriptor == "free":
        return PotentialSpec.free()
    if descriptor.startswith("power_law"):
        _, _, ptext = descriptor.partition("p=")
        return PotentialSpec.power_law(float(ptext))
    raise ValueError(f"cannot reconstruct potential from descriptor {descriptor!r}")


def write_points(fh, positions, velocities):
    for i in range(positions.shape[0]):
        fh.write(f"{i} {_fmt_vec(positions[i])} {_fmt_vec(velocities[i])}\n")


def _read_points(lines, n):
    pos = np.empty((n, 3))
    vel = np.empty((n, 3))
    for line in lines:
        parts = line.split()
        if len(parts) != 7:
            raise ValueError(f"malformed particle row: {line!r}")
        i = int(parts[0])
        pos[i] = [float(v) for v in parts[1:4]]
        vel[i] = [float(v) for v in parts[4:7]]
    return pos, vel


def write_ic(path, ic: InitialConfiguration, plan: ScalingPlan, meta: dict):
    """Initial-configuration file: metadata + certificate block + particle rows."""
    buf = _io.StringIO()
    buf.write(f"# hydrolim initial-configuration v{IC_VERSION}\n")
    buf.write(f"# n = {ic.n}\n")
    for key in ("generator", "seed", "lambda", "alpha", "jitter"):
        if key in meta:
            buf.write(f"# {key} = {meta[key]}\n")
    buf.write(f"# x_sup = {fmt(ic.X)}\n")
    buf.write(f"# u_sup = {fmt(ic.U)}\n")
    buf.write(f"# d_min = {fmt(ic.d_min)}\n")
    buf.write(f"# align_min = {fmt(ic.align_min)}\n")
    buf.write(f"# plan_t = {fmt(plan.T)}\n")
    buf.write(f"# plan_b_n = {fmt(plan.B_N)}\n")
    buf.write(f"# plan_sigma_n = {fmt(plan.sigma_N)}\n")
    buf.write(f"# plan_mode = {plan.mode}\n")
    buf.write(f"# plan_certified = {'true' if plan.certified else 'false'}\n")
    for line in plan.diagnostics.splitlines():
        buf.write(f"# certificate: {line}\n")
    write_points(buf, ic.positions, ic.velocities)
    _write_text(path, buf.getvalue())


def read_ic(path):
    """Returns (InitialConfiguration, ScalingPlan, meta dict)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta, body = _parse_header(lines)
    n = int(meta["n"])
    pos, vel = _read_points([ln for ln in body if ln.strip()], n)
    ic = InitialConfiguration.from_points(pos, vel)
    plan = ScalingPlan(
        T=float(meta["plan_t"]),
        B_N=float(meta["plan_b_n"]),
        sigma_N=float(meta["plan_sigma_n"]),
        mode=meta["plan_mode"],
        certified=meta["plan_certified"] == "true",
        diagnostics="",
    )
    return ic, plan, meta


def write_trajectory(path, traj: Trajectory, seed=None):
    buf = _io.StringIO()
    buf.write(f"# hydrolim trajectory v{TRAJECTORY_VERSION}\n")
    buf.write(f"# n = {traj.n}\n")
    buf.write(f"# t_final = {fmt(traj.horizon)}\n")
    buf.write(f"# h = {fmt(traj.h)}\n")
    buf.write(f"# stride = {traj.stride}\n")
    buf.write(f"# sigma = {fmt(traj.sigma)}\n")
    buf.write(f"# potential = {traj.potential.descriptor}\n")
    seed = traj.seed if seed is None else seed
    buf.write(f"# seed = {'none' if seed is None else seed}\n")
    for k in range(traj.n_samples):
        buf.write(f"t {fmt(traj.times[k])}\n")
        write_points(buf, traj.positions[k], traj.velocities[k])
    _write_text(path, buf.getvalue())


def read_trajectory(path) -> Trajectory:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta, body = _parse_header(lines)
    n = int(meta["n"])
    potential = potential_from_descriptor(meta["potential"])
    times = []
    blocks = []
    current = None
    for line in body:
        if not line.strip():
            continue
        if line.startswith("t "):
            times.append(float(line[2:]))
            current = []
            blocks.append(current)
        else:
            if current is None:
                raise ValueError("particle row before the first sample time")
            current.append(line)
    pos = np.empty((len(times), n, 3))
    vel = np.empty((len(times), n, 3))
    for k, block in enumerate(blocks):
        pos[k], vel[k] = _read_points(block, n)
    seed = None if meta.get("seed", "none") == "none" else int(meta["seed"])
    return Trajectory(
        times=np.asarray(times),
        positions=pos,
        velocities=vel,
        h=float(meta["h"]),
        stride=int(meta["stride"]),
        sigma=float(meta["sigma"]),
        potential=potential,
        seed=seed,
    )


def _write_csv(path, version_tag, comments: dict, header, rows):
    buf = _io.StringIO()
    buf.write(f"# {version_tag}\n")
    for key, value in comments.items():
        buf.write(f"# {key} = {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    _write_text(path, buf.getvalue())


def read_csv(path):
    """Returns (meta dict, header list, data rows as string lists)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta, body = _parse_header(lines)
    body = [ln for ln in body if ln.strip()]
    if not body:
        raise ValueError(f"{path} carries no CSV header row")
    reader = csv.reader(body)
    table = list(reader)
    return meta, table[0], table[1:]


FIELDS_HEADER = [
    "time_bin", "ix", "iy", "iz", "mass",
    "ux", "uy", "uz",
    "sxx", "sxy", "sxz", "syy", "syz", "szz",
]


def write_fields(path, fields: CoarseFields):
    """Occupied-cell dump of coarse fields (empty cells are implicit zeros)."""
    grid = fields.grid
    comments = {
        "t_edges": _fmt_vec(grid.t_edges),
        "box_lo": _fmt_vec(grid.lo),
        "box_hi": _fmt_vec(grid.hi),
        "cells": " ".join(str(c) for c in grid.shape),
    }

    def row_iter():
        for b in range(fields.nt):
            mass = fields.mass[b]
            occ = np.argwhere(mass > 0)
            for ix, iy, iz in occ:
                u = fields.mean_velocity[b, ix, iy, iz]
                s = fields.fluct_tensor[b, ix, iy, iz]
                yield [
                    b, ix, iy, iz, fmt(mass[ix, iy, iz]),
                    fmt(u[0]), fmt(u[1]), fmt(u[2]),
                    fmt(s[0, 0]), fmt(s[0, 1]), fmt(s[0, 2]),
                    fmt(s[1, 1]), fmt(s[1, 2]), fmt(s[2, 2]),
                ]

    _write_csv(path, f"hydrolim fields v{FIELDS_VERSION}", comments, FIELDS_HEADER, row_iter())


def read_fields(path) -> CoarseFields:
    meta, header, rows = read_csv(path)
    if header != FIELDS_HEADER:
        raise ValueError(f"unexpected fields header in {path}")
    t_edges = np.array([float(v) for v in meta["t_edges"].split()])
    lo = np.array([float(v) for v in meta["box_lo"].split()])
    hi = np.array([float(v) for v in meta["box_hi"].split()])
    shape = tuple(int(v) for v in meta["cells"].split())
    grid = GridSpec(t_edges=t_edges, lo=lo, hi=hi, shape=shape)
    nt = grid.nt
    mass = np.zeros((nt,) + shape)
    mean_v = np.zeros((nt,) + shape + (3,))
    fluct = np.zeros((nt,) + shape + (3, 3))
    for row in rows:
        b, ix, iy, iz = (int(v) for v in row[:4])
        vals = [float(v) for v in row[4:]]
        mass[b, ix, iy, iz] = vals[0]
        mean_v[b, ix, iy, iz] = vals[1:4]
        sxx, sxy, sxz, syy, syz, szz = vals[4:]
        fluct[b, ix, iy, iz] = [[sxx, sxy, sxz], [sxy, syy, syz], [sxz, syz, szz]]
    return CoarseFields(grid=grid, mass=mass, mean_velocity=mean_v, fluct_tensor=fluct)


RESIDUALS_HEADER = [
    "tf_index", "t0", "x0", "y0", "z0", "rho_t", "rho_x", "amplitude",
    "disc_continuity",
    "disc_momentum_x", "disc_momentum_y", "disc_momentum_z",
    "interaction_x", "interaction_y", "interaction_z",
    "sup_interaction",
    "limit_continuity",
    "limit_momentum_x", "limit_momentum_y", "limit_momentum_z",
]


def write_residuals(path, report):
    comments = {
        "h": fmt(report.h),
        "stride": report.stride,
        "grid": report.grid_descriptor,
    }

    def row_iter():
        for idx, row in enumerate(report.rows):
            tf = row.tf
            yield [
                idx, fmt(tf.t0), fmt(tf.x0[0]), fmt(tf.x0[1]), fmt(tf.x0[2]),
                fmt(tf.rho_t), fmt(tf.rho_x), fmt(tf.amplitude),
                fmt(row.disc_continuity),
                fmt(row.disc_momentum[0]), fmt(row.disc_momentum[1]), fmt(row.disc_momentum[2]),
                fmt(row.interaction[0]), fmt(row.interaction[1]), fmt(row.interaction[2]),
                fmt(row.sup_interaction),
                fmt(row.limit_continuity),
                fmt(row.limit_momentum[0]), fmt(row.limit_momentum[1]), fmt(row.limit_momentum[2]),
            ]

    _write_csv(path, f"hydrolim residuals v{RESIDUALS_VERSION}", comments, RESIDUALS_HEADER, row_iter())


def read_residuals(path):
    """Returns (meta, list of per-test-function dicts with float values)."""
    meta, header, rows = read_csv(path)
    if header != RESIDUALS_HEADER:
        raise ValueError(f"unexpected residuals header in {path}")
    out = []
    for row in rows:
        rec = dict(zip(header, row))
        out.append({k: (int(v) if k == "tf_index" else float(v)) for k, v in rec.items()})
    return meta, out

"""Coarse-grained hydrodynamic fields from particle trajectories.

The disintegration of the space-time empirical measure is realized by hard
histogram binning: per (time bin, space cell) the mass fraction, the
conditional mean velocity (the barycentric velocity field) and the
conditional velocity covariance (the fluctuation/stress tensor).  Empty cells
carry zeros, matching the extend-by-zero convention for the velocity field.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory


@dataclass(frozen=True)
class GridSpec:
    """Uniform time bins on [0, T] and a uniform space grid over a box."""

    t_edges: np.ndarray  # (nt + 1,)
    lo: np.ndarray  # (3,)
    hi: np.ndarray  # (3,)
    shape: tuple  # (cx, cy, cz)

    def __post_init__(self):
        t_edges = np.ascontiguousarray(self.t_edges, dtype=np.float64)
        lo = np.ascontiguousarray(self.lo, dtype=np.float64).reshape(3)
        hi = np.ascontiguousarray(self.hi, dtype=np.float64).reshape(3)
        shape = tuple(int(c) for c in self.shape)
        if t_edges.ndim != 1 or t_edges.size < 2 or not (np.diff(t_edges) > 0).all():
            raise ValueError("t_edges must be strictly increasing with >= 2 entries")
        if not (hi > lo).all():
            raise ValueError("grid box must have positive extent on every axis")
        if len(shape) != 3 or any(c < 1 for c in shape):
            raise ValueError("space grid needs a positive cell count per axis")
        for arr in (t_edges, lo, hi):
            arr.flags.writeable = False
        object.__setattr__(self, "t_edges", t_edges)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "shape", shape)

    @property
    def nt(self) -> int:
        return self.t_edges.size - 1

    @property
    def n_cells(self) -> int:
        cx, cy, cz = self.shape
        return cx * cy * cz

    @property
    def cell_size(self) -> np.ndarray:
        return (self.hi - self.lo) / np.asarray(self.shape, dtype=np.float64)

    @property
    def t_centers(self) -> np.ndarray:
        return 0.5 * (self.t_edges[:-1] + self.t_edges[1:])

    def cell_centers(self) -> np.ndarray:
        """(cx, cy, cz, 3) array of space cell centers."""
        axes = [
            self.lo[d] + (np.arange(self.shape[d]) + 0.5) * self.cell_size[d]
            for d in range(3)
        ]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        return np.stack([gx, gy, gz], axis=-1)

    @classmethod
    def from_trajectory(cls, traj: Trajectory, time_bins=16, cells=24, inflate=0.05) -> "GridSpec":
        """Default grid: uniform bins over [0, T] and the position bounding box
        inflated by `inflate` per axis."""
        return cls.from_box(
            t_max=traj.horizon,
            lo=traj.positions.reshape(-1, 3).min(axis=0),
            hi=traj.positions.reshape(-1, 3).max(axis=0),
            time_bins=time_bins,
            cells=cells,
            inflate=inflate,
        )

    @classmethod
    def from_box(cls, t_max, lo, hi, time_bins=16, cells=24, inflate=0.05) -> "GridSpec":
        lo = np.asarray(lo, dtype=np.float64).reshape(3).copy()
        hi = np.asarray(hi, dtype=np.float64).reshape(3).copy()
        extent = hi - lo
        pad = inflate * np.where(extent > 0, extent, max(extent.max(), 1.0))
        t_edges = np.linspace(0.0, float(t_max), int(time_bins) + 1)
        return cls(t_edges=t_edges, lo=lo - pad, hi=hi + pad, shape=(cells, cells, cells))


@dataclass(frozen=True)
class CoarseFields:
    """Per (time bin, cell): mass fraction, mean velocity, fluctuation tensor.

    mass sums to 1 over cells in every time bin; empty cells have zero mean
    velocity and zero tensor.  The tensor uses the population convention
    (divisor = count), so single-occupancy cells give exactly zero.
    """

    grid: GridSpec
    mass: np.ndarray  # (nt, cx, cy, cz)
    mean_velocity: np.ndarray  # (nt, cx, cy, cz, 3)
    fluct_tensor: np.ndarray  # (nt, cx, cy, cz, 3, 3)

    @property
    def nt(self) -> int:
        return self.grid.nt


def _bin_samples(traj: Trajectory, grid: GridSpec):
    """Time-bin index per sample; every bin must contain a sample."""
    nt = grid.nt
    idx = np.searchsorted(grid.t_edges, traj.times, side="right") - 1
    idx = np.clip(idx, 0, nt - 1)
    counts = np.bincount(idx, minlength=nt)
    if (counts == 0).any():
        empty = int(np.flatnonzero(counts == 0)[0])
        raise ValueError(
            f"time bin {empty} contains no trajectory sample; use fewer time "
            "bins or a smaller sampling stride"
        )
    return idx, counts


def coarse_grain(traj: Trajectory, grid: GridSpec) -> CoarseFields:
    """Histogram estimate of (density, barycentric velocity, fluctuation tensor).

    Each (sample, particle) pair carries weight 1/(N * samples-in-bin), so
    mass sums to exactly 1 per time bin.  Raises if any particle leaves the
    grid box, naming the sample time and particle index.
    """
    t_idx, t_counts = _bin_samples(traj, grid)
    nt = grid.nt
    cx, cy, cz = grid.shape
    n_cells = grid.n_cells
    n = traj.n

    counts = np.zeros((nt, n_cells), dtype=np.int64)
    vel_sum = np.zeros((nt, n_cells, 3), dtype=np.float64)
    cell_of = np.empty((traj.n_samples, n), dtype=np.int64)

    size = grid.cell_size
    for k in range(traj.n_samples):
        pos = traj.positions[k]
        rel = (pos - grid.lo) / size
        cell = np.floor(rel).astype(np.int64)
        inside = (cell >= 0).all(axis=1) & (cell < np.array(grid.shape)).all(axis=1)
        # Points exactly on the upper face belong to the last cell.
        on_face = ~inside & (pos >= grid.lo).all(axis=1) & (pos <= grid.hi).all(axis=1)
        if on_face.any():
            cell[on_face] = np.minimum(cell[on_face], np.array(grid.shape) - 1)
            inside |= on_face
        if not inside.all():
            bad = int(np.flatnonzero(~inside)[0])
            raise ValueError(
                f"particle {bad} at t={traj.times[k]:.17g} lies outside the grid box"
            )
        flat = (cell[:, 0] * cy + cell[:, 1]) * cz + cell[:, 2]
        cell_of[k] = flat
        b = t_idx[k]
        counts[b] += np.bincount(flat, minlength=n_cells)
        np.add.at(vel_sum[b], flat, traj.velocities[k])

    occupied = counts > 0
    mean_v = np.zeros_like(vel_sum)
    mean_v[occupied] = vel_sum[occupied] / counts[occupied][:, None]

    # Second pass: centered outer products for a PSD covariance.
    fluct = np.zeros((nt, n_cells, 3, 3), dtype=np.float64)
    for k in range(traj.n_samples):
        b = t_idx[k]
        flat = cell_of[k]
        dv = traj.velocities[k] - mean_v[b, flat]
        np.add.at(fluct[b], flat, dv[:, :, None] * dv[:, None, :])
    fluct[occupied] /= counts[occupied][:, None, None]

    mass = counts / (n * t_counts[:, None]).astype(np.float64)
    return CoarseFields(
        grid=grid,
        mass=mass.reshape(nt, cx, cy, cz),
        mean_velocity=mean_v.reshape(nt, cx, cy, cz, 3),
        fluct_tensor=fluct.reshape(nt, cx, cy, cz, 3, 3),
    )


def kinetic_decomposition(traj: Trajectory, fields: CoarseFields):
    """Split the binned kinetic energy into bulk and fluctuation parts.

    Per time bin, bulk = 1/2 sum_cells mass |mean_velocity|^2 and
    fluctuation = 1/2 sum_cells mass trace(fluct_tensor); their sum equals
    half the pooled second velocity moment of the bin (law of total
    variance).  Returns the two parts averaged over time bins.
    """
    if fields.grid.nt < 1:
        raise ValueError("fields carry no time bins")
    _bin_samples(traj, fields.grid)  # validates the grid covers the trajectory in t
    mass = fields.mass.reshape(fields.nt, -1)
    mv = fields.mean_velocity.reshape(fields.nt, -1, 3)
    ft = fields.fluct_tensor.reshape(fields.nt, -1, 3, 3)
    bulk_b = 0.5 * np.einsum("bc,bck,bck->b", mass, mv, mv)
    fluct_b = 0.5 * np.einsum("bc,bckk->b", mass, ft)
    return float(bulk_b.mean()), float(fluct_b.mean())


def field_distance(a: CoarseFields, b: CoarseFields) -> float:
    """Total-variation distance of masses plus mass-weighted RMS velocity gap.

    (i) the per-time-bin total variation (1/2) sum_cells |mass_a - mass_b|,
    averaged over bins, plus (ii) the RMS of |mean_velocity_a -
    mean_velocity_b| over cells where both masses are positive, weighted by
    the average mass.  Symmetric, zero for equal fields.
    """
    ga, gb = a.grid, b.grid
    same = (
        ga.shape == gb.shape
        and ga.t_edges.shape == gb.t_edges.shape
        and np.array_equal(ga.t_edges, gb.t_edges)
        and np.array_equal(ga.lo, gb.lo)
        and np.array_equal(ga.hi, gb.hi)
    )
    if not same:
        raise ValueError("field distance needs both fields on one shared grid")
    tv = 0.5 * np.abs(a.mass - b.mass).reshape(a.nt, -1).sum(axis=1).mean()
    both = (a.mass > 0) & (b.mass > 0)
    if both.any():
        w = 0.5 * (a.mass[both] + b.mass[both])
        dv = a.mean_velocity[both] - b.mean_velocity[both]
        rms = np.sqrt(float(np.einsum("i,ij,ij->", w, dv, dv) / w.sum()))
    else:
        rms = 0.0
    return float(tv + rms)

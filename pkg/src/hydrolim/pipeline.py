"""End-to-end run orchestration shared by the CLI and the test harness.

A run directory holds ic.txt, trajectory.txt, fields.csv, residuals.csv and
run.log; a sweep directory holds one run directory per N plus
sweep_report.csv and sweep_slope.csv.  Every output is deterministic in the
configuration: no timestamps, fixed float formatting, append-only reports.
"""

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import dynamics, io, measures, weakform
from .config import RunConfig, SweepConfig
from .errors import ConfigError
from .fields import CoarseFields, GridSpec, coarse_grain, field_distance
from .initcond import (
    BURST_CLOSED_FORM,
    InitialConfiguration,
    ScalingPlan,
    build_plan,
    compute_B_N,
    gen_burst,
    gen_lattice_cloud,
    gen_lifted,
    gen_planar,
)
from .potentials import PotentialSpec

IC_FILE = "ic.txt"
TRAJECTORY_FILE = "trajectory.txt"
FIELDS_FILE = "fields.csv"
RESIDUALS_FILE = "residuals.csv"
LOG_FILE = "run.log"
SWEEP_REPORT_FILE = "sweep_report.csv"
SWEEP_SLOPE_FILE = "sweep_slope.csv"

SWEEP_HEADER = [
    "n", "h", "stride", "seed",
    "b_n", "b_n_burst", "sigma_n",
    "d_min", "align_min", "x_sup", "u_sup",
    "energy_drift", "min_dist_worst_step",
    "acc_ratio", "speed_ratio", "pos_ratio",
    "sup_interaction",
    "char_dist_to_ref", "field_dist_to_ref",
    "limit_continuity_rms", "limit_momentum_rms",
    "status",
]


def potential_from_config(cfg: RunConfig) -> PotentialSpec:
    if cfg.potential_kind == "free":
        return PotentialSpec.free()
    return PotentialSpec.power_law(cfg.p)


def _lattice_points_2d(n, alpha, seed):
    """N points of a square lattice with pitch alpha * N^(-1/2) in the unit square."""
    pitch = alpha * n ** (-0.5)
    m = int(np.floor(1.0 / pitch + 1e-12))
    if m < 1 or m * m < n:
        raise ValueError(
            f"infeasible alpha: 2-d pitch {pitch:.6g} admits only {max(m, 0)**2} "
            f"lattice sites in the unit square, fewer than N = {n}"
        )
    rng = np.random.default_rng(seed)
    total = m * m
    chosen = np.arange(total) if total == n else np.sort(
        np.concatenate([[0, 1], rng.permutation(total - 2)[: n - 2] + 2])
    )
    offset = 0.5 * (1.0 - (m - 1) * pitch)
    return offset + pitch * np.column_stack([chosen // m, chosen % m]).astype(np.float64)


def make_initial(cfg: RunConfig) -> InitialConfiguration:
    """Build the initial configuration the config describes."""
    if cfg.generator == "lattice_burst":
        points = gen_lattice_cloud(cfg.n, cfg.alpha, cfg.jitter, cfg.seed)
        return gen_burst(points, cfg.lam)
    if cfg.generator == "lattice_lifted":
        ab = _lattice_points_2d(cfg.n, cfg.alpha, cfg.seed)
        rng = np.random.default_rng(cfg.seed + 1)
        c = rng.uniform(-cfg.c_scale, cfg.c_scale, size=cfg.n)
        return gen_lifted(ab, c)
    if cfg.generator == "planar_lattice":
        pts = _lattice_points_2d(cfg.n, cfg.alpha, cfg.seed)
        if cfg.signs == "equal":
            signs = np.ones(cfg.n)
        else:
            signs = np.where(np.arange(cfg.n) % 2 == 0, 1.0, -1.0)
        return gen_planar(pts, cfg.vx, cfg.vy, cfg.vz, signs)
    raise ConfigError(f"unknown generator {cfg.generator!r}")


def make_plan(cfg: RunConfig, ic: InitialConfiguration) -> ScalingPlan:
    potential = potential_from_config(cfg)
    if potential.kind == "free":
        # Free flight needs no interaction scale; keep a unit sigma placeholder.
        return ScalingPlan(T=cfg.T, B_N=np.inf, sigma_N=1.0, mode=cfg.b_mode,
                           certified=True, diagnostics="free potential: no certificate needed")
    return build_plan(ic, cfg.T, potential, mode=cfg.b_mode)


def _log(run_dir, lines):
    with open(Path(run_dir) / LOG_FILE, "a", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def run_generate(cfg: RunConfig, allow_uncertified=False):
    """Generate the IC and scaling certificate; write ic.txt."""
    ic = make_initial(cfg)
    plan = make_plan(cfg, ic)
    if not plan.certified and not allow_uncertified:
        raise ConfigError(
            "refusing to write an uncertified plan (pass --allow-uncertified to force):\n"
            + plan.diagnostics
        )
    run_dir = Path(cfg.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "generator": cfg.generator,
        "seed": cfg.seed,
        "lambda": io.fmt(cfg.lam),
        "alpha": io.fmt(cfg.alpha),
        "jitter": io.fmt(cfg.jitter),
    }
    io.write_ic(run_dir / IC_FILE, ic, plan, meta)
    _log(run_dir, [
        f"generate: n={ic.n} generator={cfg.generator} seed={cfg.seed}",
        f"generate: d_min={io.fmt(ic.d_min)} align_min={io.fmt(ic.align_min)}",
        f"generate: b_n={io.fmt(plan.B_N)} sigma_n={io.fmt(plan.sigma_N)} "
        f"mode={plan.mode} certified={str(plan.certified).lower()}",
    ])
    return ic, plan


def resolve_step(cfg: RunConfig, ic: InitialConfiguration, plan: ScalingPlan):
    """The (h, stride) actually used: explicit h or the default-step rule."""
    if cfg.h is not None:
        return cfg.h, cfg.stride
    b_for_step = 0.0 if not np.isfinite(plan.B_N) else plan.B_N
    h = dynamics.default_step(cfg.T, ic.d_min, ic.U, b_for_step, cfg.stride)
    return h, cfg.stride


def run_simulate(cfg: RunConfig):
    """Integrate from the stored IC; write trajectory.txt and log summaries."""
    run_dir = Path(cfg.out_dir)
    ic, plan, _ = io.read_ic(run_dir / IC_FILE)
    potential = potential_from_config(cfg)
    h, stride = resolve_step(cfg, ic, plan)
    state = dynamics.SystemState(0.0, ic.positions, ic.velocities)
    traj = dynamics.integrate(state, potential, plan.sigma_N, cfg.T, h, stride)
    traj = replace(traj, seed=cfg.seed)
    io.write_trajectory(run_dir / TRAJECTORY_FILE, traj)

    dists = dynamics.min_distance_profile(traj)
    drift = dynamics.energy_drift(traj) if potential.kind != "free" else 0.0
    steps = np.diff(dists) / dists[:-1]
    _log(run_dir, [
        f"simulate: n={traj.n} h={io.fmt(h)} stride={stride} sigma={io.fmt(traj.sigma)}",
        f"simulate: energy_drift={io.fmt(drift)}",
        "simulate: min_dist start=" + io.fmt(dists[0]) + " end=" + io.fmt(dists[-1])
        + f" worst_step={io.fmt(float(steps.min()) if steps.size else 0.0)}"
        + f" nondecreasing={str(bool((steps >= -1e-9).all())).lower()}",
    ])
    return traj


def default_grid_for(cfg: RunConfig, traj) -> GridSpec:
    return GridSpec.from_trajectory(
        traj, time_bins=cfg.time_bins, cells=cfg.space_cells, inflate=cfg.inflate
    )


def testfns_for(cfg: RunConfig, grid: GridSpec):
    return weakform.default_test_functions(
        grid.lo, grid.hi, T=float(grid.t_edges[-1]),
        count=cfg.tf_count, radius_frac=cfg.tf_radius_frac, amplitude=cfg.tf_amplitude,
    )


@dataclass
class RunAnalysis:
    """Everything the verification and sweep reports draw from one run."""

    traj: object
    plan: ScalingPlan
    fields: CoarseFields
    testfns: list
    rows: list
    min_dist: np.ndarray
    max_acc: np.ndarray
    max_speed: np.ndarray
    max_pos: np.ndarray
    energy_drift: float

    @property
    def min_dist_worst_step(self) -> float:
        steps = np.diff(self.min_dist) / self.min_dist[:-1]
        return float(steps.min()) if steps.size else 0.0

    @property
    def sup_interaction(self) -> float:
        return max(r.sup_interaction for r in self.rows)

    @property
    def limit_continuity_rms(self) -> float:
        return float(np.sqrt(np.mean([r.limit_continuity**2 for r in self.rows])))

    @property
    def limit_momentum_rms(self) -> float:
        return float(np.sqrt(np.mean([r.limit_momentum @ r.limit_momentum for r in self.rows])))


def analyze_run(traj, plan: ScalingPlan, potential: PotentialSpec, grid: GridSpec, testfns) -> RunAnalysis:
    """One pass over the samples feeding every diagnostic the reports need."""
    acc_all = weakform.sample_accelerations(traj, potential, traj.sigma)
    s = traj.n_samples
    min_dist = dynamics.min_distance_profile(traj)
    max_acc = np.array([np.sqrt(np.einsum("ij,ij->i", acc_all[k], acc_all[k])).max() for k in range(s)])
    max_speed = np.array(
        [np.sqrt(np.einsum("ij,ij->i", traj.velocities[k], traj.velocities[k])).max() for k in range(s)]
    )
    max_pos = np.array(
        [np.sqrt(np.einsum("ij,ij->i", traj.positions[k], traj.positions[k])).max() for k in range(s)]
    )
    drift = dynamics.energy_drift(traj) if potential.kind != "free" else 0.0
    flds = coarse_grain(traj, grid)
    rows = []
    for tf in testfns:
        interaction = weakform.interaction_functional(traj, potential, traj.sigma, tf, acc_all)
        rows.append(
            weakform.ResidualRow(
                tf=tf,
                disc_continuity=weakform.discrete_continuity_residual(traj, tf),
                disc_momentum=weakform.discrete_momentum_residual(traj, potential, traj.sigma, tf, acc_all),
                interaction=interaction,
                sup_interaction=weakform.sup_interaction_norm(traj, potential, traj.sigma, tf, acc_all),
                limit_continuity=weakform.limit_continuity_residual(flds, tf),
                limit_momentum=weakform.limit_momentum_residual(flds, tf),
            )
        )
    return RunAnalysis(
        traj=traj,
        plan=plan,
        fields=flds,
        testfns=testfns,
        rows=rows,
        min_dist=min_dist,
        max_acc=max_acc,
        max_speed=max_speed,
        max_pos=max_pos,
        energy_drift=drift,
    )


def run_analyze(cfg: RunConfig) -> CoarseFields:
    """Coarse-grain the stored trajectory and write fields.csv."""
    run_dir = Path(cfg.out_dir)
    traj = io.read_trajectory(run_dir / TRAJECTORY_FILE)
    grid = default_grid_for(cfg, traj)
    flds = coarse_grain(traj, grid)
    io.write_fields(run_dir / FIELDS_FILE, flds)
    _log(run_dir, [
        f"analyze: time_bins={grid.nt} cells={'x'.join(str(c) for c in grid.shape)}",
    ])
    return flds


def run_verify(cfg: RunConfig):
    """Residual report for the stored trajectory; writes residuals.csv."""
    run_dir = Path(cfg.out_dir)
    ic, plan, _ = io.read_ic(run_dir / IC_FILE)
    traj = io.read_trajectory(run_dir / TRAJECTORY_FILE)
    potential = potential_from_config(cfg)
    grid = default_grid_for(cfg, traj)
    testfns = testfns_for(cfg, grid)
    analysis = analyze_run(traj, plan, potential, grid, testfns)
    report = weakform.ResidualReport(
        rows=tuple(analysis.rows),
        h=traj.h,
        stride=traj.stride,
        grid_descriptor=f"{grid.nt}x" + "x".join(str(c) for c in grid.shape),
    )
    io.write_residuals(run_dir / RESIDUALS_FILE, report)
    _log(run_dir, [
        f"verify: testfns={len(testfns)} sup_interaction={io.fmt(analysis.sup_interaction)}",
    ])
    return analysis


def run_single(cfg: RunConfig, allow_uncertified=False) -> RunAnalysis:
    """generate + simulate + analyze + verify in one run directory."""
    run_generate(cfg, allow_uncertified=allow_uncertified)
    run_simulate(cfg)
    run_analyze(cfg)
    return run_verify(cfg)


def _sub_config(base: RunConfig, n: int, sweep_dir: Path) -> RunConfig:
    return replace(base, n=n, out_dir=str(sweep_dir / f"n_{n:05d}")).validate()


def run_sweep(sweep: SweepConfig):
    """Full N-sweep: per-N pipeline, shared-grid convergence metrics, decay slope.

    Rows are appended to sweep_report.csv as they complete; failures of a
    sub-run are recorded in its row and the sweep continues.
    """
    base = sweep.base
    sweep_dir = Path(base.out_dir)
    sweep_dir.mkdir(parents=True, exist_ok=True)
    potential = potential_from_config(base)

    trajectories = {}
    failures = {}
    for n in sweep.n_values:
        cfg = _sub_config(base, n, sweep_dir)
        try:
            run_generate(cfg)
            trajectories[n] = run_simulate(cfg)
        except Exception as exc:  # recorded, sweep continues
            failures[n] = f"{type(exc).__name__}: {exc}"

    if not trajectories:
        raise ConfigError("every sub-run of the sweep failed:\n" + "\n".join(failures.values()))

    all_pos = np.concatenate([t.positions.reshape(-1, 3) for t in trajectories.values()])
    grid = GridSpec.from_box(
        t_max=base.T,
        lo=all_pos.min(axis=0),
        hi=all_pos.max(axis=0),
        time_bins=base.time_bins,
        cells=base.space_cells,
        inflate=base.inflate,
    )
    testfns = testfns_for(base, grid)

    ref_n = max(trajectories)
    analyses = {}
    for n in sorted(trajectories):
        cfg = _sub_config(base, n, sweep_dir)
        ic, plan, _ = io.read_ic(Path(cfg.out_dir) / IC_FILE)
        analyses[n] = analyze_run(trajectories[n], plan, potential, grid, testfns)
        report = weakform.ResidualReport(
            rows=tuple(analyses[n].rows),
            h=trajectories[n].h,
            stride=trajectories[n].stride,
            grid_descriptor=f"{grid.nt}x" + "x".join(str(c) for c in grid.shape),
        )
        io.write_residuals(Path(cfg.out_dir) / RESIDUALS_FILE, report)
        io.write_fields(Path(cfg.out_dir) / FIELDS_FILE, analyses[n].fields)

    ref = analyses[ref_n]
    ref_snapshot = measures.snapshot(ref.traj, ref.traj.n_samples - 1)

    rows = []
    for n in sweep.n_values:
        if n in failures:
            rows.append([n] + [""] * (len(SWEEP_HEADER) - 2) + [f"failed: {failures[n]}"])
            continue
        a = analyses[n]
        cfg = _sub_config(base, n, sweep_dir)
        ic, plan, _ = io.read_ic(Path(cfg.out_dir) / IC_FILE)
        snap = measures.snapshot(a.traj, a.traj.n_samples - 1)
        char_d = measures.char_distance(snap, ref_snapshot)
        field_d = field_distance(a.fields, ref.fields)
        b_burst = compute_B_N(ic, plan.T, mode=BURST_CLOSED_FORM)
        rows.append([
            n, io.fmt(a.traj.h), a.traj.stride, cfg.seed,
            io.fmt(plan.B_N), io.fmt(b_burst), io.fmt(plan.sigma_N),
            io.fmt(ic.d_min), io.fmt(ic.align_min), io.fmt(ic.X), io.fmt(ic.U),
            io.fmt(a.energy_drift), io.fmt(a.min_dist_worst_step),
            io.fmt(float(a.max_acc.max() / plan.B_N)),
            io.fmt(float(a.max_speed.max() / (ic.U + plan.B_N * plan.T))),
            io.fmt(float(a.max_pos.max() / (ic.X + ic.U * plan.T + plan.B_N * plan.T**2))),
            io.fmt(a.sup_interaction),
            io.fmt(char_d), io.fmt(field_d),
            io.fmt(a.limit_continuity_rms), io.fmt(a.limit_momentum_rms),
            "ok",
        ])

    comments = {
        "ref_n": ref_n,
        "grid": f"{grid.nt}x" + "x".join(str(c) for c in grid.shape),
        "testfns": len(testfns),
    }
    io._write_csv(sweep_dir / SWEEP_REPORT_FILE, f"hydrolim sweep v{io.SWEEP_VERSION}",
                  comments, SWEEP_HEADER, rows)

    decay_pairs = [(n, analyses[n].sup_interaction) for n in sorted(analyses) if analyses[n].sup_interaction > 0]
    slope = weakform.interaction_decay(decay_pairs) if len(decay_pairs) >= 3 else float("nan")
    io._write_csv(sweep_dir / SWEEP_SLOPE_FILE, f"hydrolim sweep-slope v{io.SWEEP_VERSION}",
                  {}, ["quantity", "value"], [["interaction_decay_slope", io.fmt(slope)]])
    return analyses, slope

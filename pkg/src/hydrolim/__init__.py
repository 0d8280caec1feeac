"""Rescaled N-body simulator and hydrodynamic-limit verification harness."""

from ._backend import BACKEND_NAME, available_backends
from .dynamics import (
    SystemState,
    Trajectory,
    accelerations,
    conserved_energy,
    integrate,
    max_acceleration_norm,
    min_pair_distance,
    pair_acceleration,
    step_verlet,
    total_energy,
)
from .errors import ConfigError, DomainError
from .fields import CoarseFields, GridSpec, coarse_grain, field_distance, kinetic_decomposition
from .initcond import (
    InitialConfiguration,
    ScalingPlan,
    build_plan,
    compute_B_N,
    compute_sigma_N,
    gen_burst,
    gen_lattice_cloud,
    gen_lifted,
    gen_planar,
    verify_plan,
)
from .measures import (
    EmpiricalSnapshot,
    SpaceTimeMeasure,
    char_distance,
    char_fn,
    moment,
    spacetime_moment,
    tail_mass,
    tightness_bound,
)
from .potentials import PotentialSpec
from .weakform import (
    TestFunction,
    discrete_continuity_residual,
    discrete_momentum_residual,
    eval_bump,
    interaction_decay,
    interaction_functional,
    interaction_term,
    limit_continuity_residual,
    limit_momentum_residual,
)

__version__ = "0.1.0"

"""One-dimensional cell adhesion: nonlocal PDE, master equation and particle system."""

__version__ = "0.1.0"

from .core import DensityField, Grid, ModelKind, ModelSpec, ParticleState, SpecError, WeightKind, eval_weight, validate_spec
from .nonlocal_ops import NonlocalOperator, directional_kernel, drift_closure, nonlocal_gradient, saturation_field, windowed_mass
from .pde import InitialCondition, PdeSolver, SolverConfig, make_initial, run_pde, step_pde
from .master_eq import ProportionVector, run_master, step_master, transition_probabilities
from .particles import SdeConfig, particle_saturation, pairwise_force, run_sde, step_sde
from .analysis import Histogram, compare_fields, convergence_order, empirical_fields, histogram

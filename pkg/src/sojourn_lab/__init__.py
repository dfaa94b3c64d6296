"""Random fields with group-invariant laws and their uniform sojourn measures."""

from .param_space import Point, Space, antipode, sample_antithetic_batch, sample_mu
from .group_action import GroupSpec, apply, check_pushforward, enumerate_group, sample_nu
from .fields import (
    center_field,
    evaluate,
    gen_biased_field,
    gen_bridge_field,
    gen_kernel_field,
    gen_matrix_field,
    kernel_default,
    shift_field,
)
from .sojourn import (
    SojournEstimate,
    empirical_F,
    empirical_quantile,
    sojourn_exact_discrete,
    sojourn_grid_circle,
    sojourn_mc,
)
from .stats import UniformityReport, chi_square_uniform, histogram, ks_uniform, uniformity_report
from .oracle import OrbitLaw, circle_shift_orbit_law, enumerate_orbit_law

__version__ = "0.1.0"

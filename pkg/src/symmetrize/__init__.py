"""Rearrangements, rearrangement-invariant norms, isoperimetric capacities and
numerical checks of symmetrization inequalities."""

from .errors import (AdaptednessError, AlignmentError, ConvergenceError, DivergenceError,
                     DomainError, PreconditionError, SamplingError)
from .measure_space import (ModelSpace, SampledFunction, BorelSetApprox, get_profile,
                            sample_function, smooth_family, indicator, median,
                            half_line_set, boundary_interval_set, ball_set)
from .rearrangement import (decreasing_rearrangement, distribution, maximal_function,
                            hardy_littlewood_sup, oscillation)
from .ri_spaces import SpaceSpec, parse_space, norm, boyd_indices
from .capacity import weight_wq, cap1, capq_lower, muckenhoupt_check
from .inequalities import VerificationReport
from .interpolation import k_functional, optimal_decomposition, theta_q_norm

__version__ = "0.1.0"

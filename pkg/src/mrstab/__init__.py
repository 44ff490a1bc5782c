"""Stability regions of two-user multi-rate Gaussian MAC and BC networks."""

from .core import (ChannelFadePower, ChannelModel, ConstraintKind, DecodeOrder,
                   PowerAllocation, PowerConstraint, RateSet, RateVector,
                   bc_min_power, mac_min_powers, shannon_rate)
from .geometry import (ConvexPolygon, contains, convex_hull, hausdorff_distance,
                       minkowski_sum, scale)
from .peak import (bc_partition, bc_supported_set, mac_partition, mac_supported_set,
                   stability_region_peak)
from .avgpower import (KappaConvergenceError, bc_choice, boundary_sweep,
                       expected_rate_power, mac_choice, solve_kappa)
from .duality import (DualFamilySpec, centralized_mac_supported_set, onoff_case,
                      union_dual_mac_regions)
from .codebook import SymmetricMacSpec, max_simultaneous, optimize_R0, sum_rate

__version__ = "0.1.0"

"""Degrees-of-freedom analysis and simulation for a MIMO broadcast channel
with delayed CSI and a parallel multicast pipe."""

__version__ = "0.1.0"

from .analysis import (DoFPoint, DoFRegion2, SumDofBound, SystemConfig, bounds_tight,
                       channel_aggregation_sum_dof, dm_star, f_a, f_b, f_p, f_q,
                       full_csit_sum_dof, gamma_star, lower_bound_sum_dof, q_l_point,
                       q_o_point, two_user_region, two_user_sum_dof, upper_bound_sum_dof)
from .errors import (CausalityError, DomainError, InfeasiblePlan, MulticastOverflow,
                     SingularDecodeError)

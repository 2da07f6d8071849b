"""Average-reward control of population models on products of simplices.

Building blocks: simplex grids with barycentric interpolation and sup-norm
projection (`simplex`), logit / counterexample / raw population models
(`model`), closed-form and power-iteration steady states (`steady`), damped
relative value iteration (`rvi`), decomposable Howard policy iteration
(`howard`), Lagrangian dual optimality bounds (`duality`), the 1-D promotion
cycle toolkit (`cycles`), and closed-form eigenpair verification
(`verification`).  The command line lives in `cli`.
"""

from .simplex import (SimplexGrid, Interpolant, build_grid, hilbert_distance,
                      hilbert_diameter, contraction_coefficient,
                      metric_comparison_factor)
from .model import (MeanFieldModel, PricingModel, pricing_model,
                    single_offer_pricing, counterexample_model, raw_model,
                    logit_transition, instantaneous_logit, check_assumptions)
from .steady import (SteadyStateResult, stationary_logit, stationary_power,
                     stationary_distribution, optimal_steady_state, majorizes,
                     gain_upper_bound)
from .rvi import ErgodicSolution, GridBellman, bellman_grid, solve_rvi
from .howard import (LocalTransitionTables, PolicyGraph, build_local_tables,
                     global_successor, policy_graph, evaluate_policy,
                     policy_cycles, solve_howard, memory_report)
from .duality import power_phi, lagrangian_value, dual_bound, DualBoundResult
from .cycles import (ToyModel, CycleSpec, price_from_transition, cycle_gain,
                     sSt_trajectory, best_sSt_cycle, scan_sSt, steady_state_gain)
from .verification import (kolmogorov_coefficients, counterexample_steady_state,
                           PiecewiseAffineBias, analytic_eigenvector,
                           invariant_region, eigen_residual, eigen_residual_grid)

__version__ = "0.1.0"

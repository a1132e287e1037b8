"""Optimal infinite-variate L2-approximation under nested subspace sampling."""
from .active_set import (ActiveSet, ActiveSetSummary, brute_force_active_set,
                         count_active_set, enumerate_active_set, level_slice, max_level,
                         single_coordinate_count)
from .anova import (CoefficientFunction, TradeoffPoint, anova_rate_bounds, apply_optimal,
                    estimate_rate, exact_l2_error_sq, minimal_error_for_budget,
                    tradeoff_curve, worst_case_error)
from .cost import CostFunction, CostMode, algorithm_cost, term_cost
from .errors import (BudgetExceeded, DivergentConstant, InvalidArgument, InvalidSequence,
                     NSSApproxError, OutOfRange, TruncationUnsound)
from .non_anova import (AuxiliaryModel, build_auxiliary, certified_non_anova_approximation,
                        comparison_gap, non_anova_rate_bounds, phi_transform, witness_norm)
from .sequences import (DecreasingSequence, estimate_decay_low, estimate_decay_up,
                        partial_power_sum, power, remark_block_sequence)
from .weights import ProblemModel, Term, c_gamma_constant, term_score

__version__ = "0.1.0"

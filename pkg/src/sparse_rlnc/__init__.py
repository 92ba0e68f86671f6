"""Full-rank and delivery probabilities for sparse random linear network coding."""

from .analytic import (AooConfig, eta_bounds, full_rank_lower_bound, full_rank_prob_exact_classic,
                       full_rank_prob_stein_chen, full_rank_upper_bound, lambda_terms, pi_tilde, rho,
                       solve_aoo, stein_chen_orders)
from .coding_matrix import (DecodingMatrix, IncrementalDecoder, count_minimal_zero_sum_subsets,
                            generate_matrix, is_full_rank, rank, zero_sum_subset_exists)
from .delivery import (METHODS, OverheadDidNotConverge, average_overhead, delivery_curve,
                       delivery_probability, make_provider, max_abs_gap, mse)
from .gf import CodingDistribution, FieldSpec, field_new
from .montecarlo import (Estimate, SimConfig, estimate_delivery_curve, estimate_delivery_prob,
                         estimate_overhead, estimate_rank_prob, estimate_rank_prob_curve)

__version__ = "0.1.0"

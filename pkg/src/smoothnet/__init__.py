"""Simulation and analysis of balancing networks under random orientation perturbations."""
from .bounds import (
    BoundReport, PeriodicBound, ccc_lower_bound, ccc_product_entry, compute_lambda1,
    empirical_bounds, lambda_offones, matching_matrix, periodic_bound, product_matrix,
    theorem1_bound,
)
from .dyadic import DyadicOverflowError, DyadicVector
from .engine import (
    RunTrace, discrepancy, layer_sums, run_discrete, run_discrete_batch, run_ideal,
    unfold_deviation,
)
from .experiment import ExperimentConfig, ResultRow, emit_csv, emit_summary_svg, run_sweep
from .network import (
    Balancer, Matching, MatchingSchedule, Orientation, ScheduleError, ScheduleFormatError,
    affecting_sets, build_ccc, build_periodic, load_schedule, parse_schedule,
    random_orientation, random_perfect_round, save_schedule,
)
from .perturbation import PerturbationPlan, effective_orientation, sample_plan
from .verification import (
    OddStats, VerificationReport, verify_ccc_structure, verify_eq3_identity, verify_odd_half,
    verify_odd_independence, verify_remark2_symmetry,
)

__version__ = "0.1.0"

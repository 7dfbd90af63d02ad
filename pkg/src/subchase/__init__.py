"""Submodular objective chasing with competitive recourse."""

from .aos import (
    approximate_or_separate,
    find_witness,
    maximize_static,
    maximize_with_curvature,
    sample_threshold_set,
)
from .bench import adversarial_scenarios, brute_opt, na_test, offline_min_recourse
from .chasing import Trajectory, chase_fast, chase_slow
from .constraints import PartitionConstraint, fractional_violation, is_feasible_set, scale_into_polytope
from .dynamics import decremental_chase, incremental_chase, sliding_window_chase
from .estimators import CurvatureMaximizer, FractionalChaser, RecourseRounder, StaticMaximizer
from .exceptions import CapacityError, DomainError, InfeasibleError, InstanceError, InvariantError
from .instance import ChaseInstance, Step, load_instance
from .rounding import (
    interval_step,
    keyfitz_step,
    kfold_step,
    partition_init,
    partition_step,
    pivotal_sample,
    round_stream_replicas,
)
from .setfunc import (
    Additive,
    CappedCardinality,
    Coverage,
    ExplicitTable,
    GroundSet,
    curvature,
    curvature_decompose,
    multilinear_exact,
    multilinear_mc,
    wolsey_exact,
)

__version__ = "0.1.0"

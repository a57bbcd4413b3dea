"""Verification experiments: condition checks, barriers, exit identity and counterexamples."""

from .barriers import (BarrierParams, MomentBoundParams, barrier_coefficient, barrier_derivative_check,
                       barrier_threshold, moment_bound_params)
from .conditions import ConditionParams, check_conditions, check_moment_hypothesis
from .counterexamples import counterexample_run
from .experiments import exit_identity_experiment, qc_probe, run_exit_identity, run_moment_bound
from .partition import PartitionScheme, partition_indicator_approx

__all__ = [
    "BarrierParams", "MomentBoundParams", "barrier_coefficient", "barrier_derivative_check",
    "barrier_threshold", "moment_bound_params", "ConditionParams", "check_conditions",
    "check_moment_hypothesis", "counterexample_run", "exit_identity_experiment", "qc_probe",
    "run_exit_identity", "run_moment_bound", "PartitionScheme", "partition_indicator_approx",
]

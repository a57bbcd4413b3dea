"""Exit times of nonlinear semimartingales under volatility uncertainty, simulated."""

from .domains import Domain, domain_from_config
from .exits import NO_EXIT, exit_times
from .families import ScenarioFamily, family_controls, simulate_gbm
from .paths import GridPath, TimeGrid, path_metric
from .upper import upper_capacity, upper_expectation

__version__ = "0.1.0"

__all__ = [
    "Domain", "domain_from_config", "NO_EXIT", "exit_times", "ScenarioFamily", "family_controls",
    "simulate_gbm", "GridPath", "TimeGrid", "path_metric", "upper_capacity", "upper_expectation",
]

"""Energy-efficient power control under a long-term energy constraint.

Single-link optimal policies, free time-slot statistics and the
primary/secondary Stackelberg game, plus CSV experiment runners.
"""

from .channel import ExponentialGain, MonteCarloConfig, SampleStream, expect_1d, expect_joint
from .efficiency import Empirical, Outage, Shannon
from .single_user import LinkParams, PolicySolution
from .solvers import SolverConfig
from .stackelberg import GainRealization, StackelbergOutcome, leader_equilibrium

__all__ = [
    "Empirical",
    "ExponentialGain",
    "GainRealization",
    "LinkParams",
    "MonteCarloConfig",
    "Outage",
    "PolicySolution",
    "SampleStream",
    "Shannon",
    "SolverConfig",
    "StackelbergOutcome",
    "expect_1d",
    "expect_joint",
    "leader_equilibrium",
]

__version__ = "0.1.0"

"""Penalized non-smooth stochastic oscillators.

Simulation of Moreau-Yosida penalized elasto-plastic, friction and obstacle
oscillators under white and colored noise, numerical certification of
Foster-Lyapunov drift bounds, parabolic solvers for the integrated-observable
mean/variance functionals, and threshold-crossing probabilities with their
diffusive-limit asymptotics.
"""

__version__ = "0.1.0"

from .models import (  # noqa: F401
    ModelKind,
    ModelSpec,
    Potential,
    WhiteNoise,
    OrnsteinUhlenbeckNoise,
    HamiltonianNoise,
    kanai_tajimi,
    ou_noise,
    quadratic_potential,
    zero_potential,
)
from .simulate import SimConfig, Trajectory, simulate_path  # noqa: F401

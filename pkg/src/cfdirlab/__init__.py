"""Rank-one (C,F)-actions of Z^d and H3(Z): exact cylinder measures and directional
recurrence and rigidity evidence."""

__version__ = "0.1.0"

from .groups import H3, Abelian  # noqa: E402,F401
from .cf import CFSchedule, cylinder, intersection_measure, validate_schedule  # noqa: E402,F401
from .directions import Direction, project, theta, theta_inf, kappa  # noqa: E402,F401

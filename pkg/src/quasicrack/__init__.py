"""Quasi-static brittle crack growth in 2D anti-plane shear.

Time-discretized global energy minimization over polyline crack sets,
with a crack-conforming P1 finite-element Laplace solver, stress
intensity factor extraction at tips, and audits of the evolution's
energy balance and Griffith complementarity.
"""

from .domain import DomainSpec, regular_polygon_disk
from .geometry import CrackSet, GeometryViolation, Polyline, Tip

__all__ = [
    "CrackSet",
    "DomainSpec",
    "GeometryViolation",
    "Polyline",
    "Tip",
    "regular_polygon_disk",
]

__version__ = "0.1.0"

"""Hypoelliptic heat flow on step-2 Carnot groups and desk-scale semigroup checks."""

from subcurv.heat.grid import (
    CarnotChart,
    HeatField,
    evolve,
    gaussian_bump,
    near_delta,
    read_snapshot,
    write_snapshot,
)
from subcurv.heat.ccdist import ball_measure, cc_distance
from subcurv.heat.estimates import (
    EstimateReport,
    check_harnack,
    check_li_yau,
    check_semigroup_laws,
    check_variational,
)

__all__ = [
    "CarnotChart",
    "EstimateReport",
    "HeatField",
    "ball_measure",
    "cc_distance",
    "check_harnack",
    "check_li_yau",
    "check_semigroup_laws",
    "check_variational",
    "evolve",
    "gaussian_bump",
    "near_delta",
    "read_snapshot",
    "write_snapshot",
]

"""Residuals, an augmented Lagrangian solver and constraint-qualification checks for
time-discretized continuous-time programming problems."""

from .core import (
    CtpProblem,
    MultiplierPath,
    TimeGrid,
    Trajectory,
    feasibility,
    integrate,
    make_uniform_grid,
    objective,
)
from .alm import AlmConfig, AlmStatus, SolverTrace, export_trace, solve
from .cq import CqReport, CqThresholds, diagnose
from .problems import BuiltinProblemId, build, paper_sequence, reference_pair
from .residuals import (
    ResidualReport,
    akkt_sequence_report,
    g_minus,
    kkt_residual,
    lagrangian_gradient,
    min_kkt_stationarity,
    pw_akkt_check,
)

__version__ = "0.1.0"

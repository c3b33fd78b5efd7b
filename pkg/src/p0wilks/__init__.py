"""Degree-heterogeneity tests for the p0 directed-network model."""

from .estimation import (
    ExistenceReport,
    FitResult,
    NullHypothesis,
    check_existence,
    fit_mle,
    fit_null,
    fit_restricted_homogeneous,
    fit_restricted_specified,
)
from .estimators import DegreeHeterogeneityTest, P0Model, RestrictedP0Model, check_graph
from .exceptions import (
    DegenerateDegreeError,
    EdgeListError,
    EmptyGraphError,
    InvalidNullError,
    InvalidReferenceError,
    NonConvergenceError,
    P0Error,
)
from .graph import BiDegree, DirectedGraph, bi_degree, density, from_edge_list, read_edge_list, to_edge_list, transpose
from .inference import TestResult, chisq_cdf, chisq_sf, lrt, normal_cdf, wald
from .model import FisherInfo, Theta, conditioning, fisher_info, log_likelihood, score
from .simulation import (
    Scenario,
    SimulationReport,
    monte_carlo,
    qq_data,
    sample_graph,
    scenario_h01,
    scenario_h02,
    scenario_h02_h03,
    scenario_h03,
    scenario_power,
)

__version__ = "0.1.0"

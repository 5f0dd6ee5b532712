"""Globally optimal partial decode-and-forward rates for the Gaussian MIMO relay channel.

The rate is ``max min{R_A*(C), R_B(C, R)}`` over the innovation covariance
``C`` and the joint covariance ``R``. ``R_A*`` has a closed form through a
generalized eigendecomposition (:mod:`pdfrelay.inner`). The outer problem is
solved by a cutting-plane method with certified bounds
(:mod:`pdfrelay.driver`).
"""
from .csb import CsbPoint, CsbReport, cut_set_bound
from .driver import SolveReport, algorithm1, algorithm2, initial_anchor, project_pd_floor
from .errors import (
    InstanceParseError,
    InvalidConfigError,
    InvalidInputError,
    MasterProblemError,
    NotPositiveDefiniteError,
    NotPSDError,
    NumericalFailure,
    PdfRelayError,
    SingularSylvesterError,
)
from .gradients import Cut, grad_rate_A_star, grad_rate_B, make_A_cut, make_B_cut
from .inner import InnerSolution, solve_inner, verify_inner_identities
from .master import MasterProblem, MasterSolution, certify, solve_master
from .model import (
    LineNetworkConfig,
    RelayChannel,
    gram_matrices,
    joint_channel,
    line_network_sample,
    load_instance,
    save_instance,
)
from .rates import InnerSplit, OuterPoint, feasible_in_P_eps, objective, rate_A, rate_B

__version__ = "0.1.0"

"""Deciding clustering promise problems with random fields, and the optimal
positive definite kernels behind them."""
from .core import (DecisionReport, PointSet, PromiseParams, Verdict, load_points, normalize,
                   oracle_is_clusterable, oracle_is_far, promise_status)
from .decider import decide, success_rate
from .distsim import NodeMessage, SessionConfig, node_local_max, run_simulation
from .errors import (DegenerateCorrelation, DimError, DomainError, EmptyInput, Infeasible,
                     OracleScaleExceeded, ParseError, RFClusterError, TransportError, Unsupported)
from .exceedance import (ExceedanceEstimate, exceed_ball_rsf, exceed_equidistant_grf,
                         exceed_k1_balls, exceed_set_empirical)
from .fields import FieldDraw, FieldKind, FieldSpec, covariance, draw_field, evaluate
from .kernel1d import Kernel1D, solve_optimal_kernel_1d
from .kernelhd import E_d, KernelHD, kappa_infinity, solve_optimal_kernel_hd
from .lp import LinearProgram, LPStatus, lp_solve
from .tuner import TuneResult, gap_surface, tune

__version__ = "0.1.0"

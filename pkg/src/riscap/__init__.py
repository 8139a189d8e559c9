"""
Ergodic mutual information of MIMO links aided by spatially correlated RISs.

Large-system (replica) evaluation, Monte Carlo reference, covariance
synthesis from angular spreads and RIS phase optimization.
"""

from .channel import (ChannelSample, CovarianceSet, PhaseProfile, ScenarioConfig,
                      assemble_total_channel, draw_sample, sample_kronecker)
from .covariance import (AngularWeight, PlanarGrid, SpectralSummary, analytic_spectrum,
                         build_correlation_matrix, exact_spectrum, gaussian_weight,
                         spectral_cdf)
from .errors import ConvergenceError, DomainError, QuadratureError
from .mi_estimator import MCEstimate, ergodic_mi_mc, instantaneous_mi
from .optimizer import (OptimizationReport, alternating_optimize, closed_form_phases,
                        eigvec_phase_alignment, optimize_op2, optimize_phases)
from .replica import (AsymptoticMI, FixedPointSolution, ReplicaModel, asymptotic_mi,
                      solve_fixed_point)
from .scenario_file import ScenarioError, ScenarioFile, parse_scenario, read_scenario_file
from .scenarios import RisSpec, build_scenario, uncorrelated_baseline

__version__ = "0.1.0"

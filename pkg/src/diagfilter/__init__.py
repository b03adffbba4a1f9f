"""Data-assisted residual generators for multi-area frequency control.

The package designs causal residual filters that flag falsified tie-line
telemetry in interconnected power-system models.  The model-based core
decouples the residual from every unknown physical signal; an optional
training phase shapes the remaining freedom against the measured mismatch
between a nonlinear plant and its linear abstraction.

Layers, bottom to top:

* :mod:`~diagfilter.shiftpoly`, :mod:`~diagfilter.lti` -- polynomial-matrix
  algebra, ZOH sampling, and the stacked difference-algebraic form;
* :mod:`~diagfilter.agc` -- the multi-area frequency-control model builder;
* :mod:`~diagfilter.simulate` -- linear and nonlinear plant simulation;
* :mod:`~diagfilter.solvers` -- certified LP/QP solves;
* :mod:`~diagfilter.design` -- filter synthesis (single and coordinated
  attack hypotheses) and its training statistics;
* :mod:`~diagfilter.runtime` -- streaming residual evaluation and detection;
* :mod:`~diagfilter.matio`, :mod:`~diagfilter.pipeline`,
  :mod:`~diagfilter.cli` -- artefact formats and experiment orchestration.
"""

from .agc import (
    AreaParams,
    AttackChannel,
    AttackTopology,
    GeneratorParams,
    assemble_multiarea,
    multivariate_topology,
    three_area_default,
    univariate_topology,
)
from .design import (
    AttackModel,
    FilterDesign,
    average_q,
    design_multivariate,
    design_univariate,
    gram_matrix,
    impulse_response,
    mismatch_signature,
    pretrain_multivariate,
    q_matrix,
    steady_state_margin,
    steady_state_residual,
    worst_case_alpha,
)
from .errors import (
    ConfigError,
    DetectorInfeasibleError,
    NoFilterError,
    SimulationBlowUp,
    SolverError,
)
from .lti import (
    DaeSystem,
    LinearModel,
    StackedSystem,
    assemble_dae,
    build_stacked,
    zoh_discretize,
)
from .pipeline import ExperimentConfig, cmd_run_all, default_config, multivariate_default_config
from .runtime import Detector, ResidualFilter, calibrate_threshold, residual_energy
from .shiftpoly import PolyMatrix, pole_polynomial, shift_matrix
from .simulate import (
    AttackSpec,
    DisturbanceSpec,
    PlantConfig,
    simulate_linear,
    simulate_nonlinear,
)
from .solvers import QpProblem, Solution, solve_lp, solve_qp

__version__ = "0.1.0"

__all__ = [
    "AreaParams",
    "AttackChannel",
    "AttackModel",
    "AttackSpec",
    "AttackTopology",
    "ConfigError",
    "DaeSystem",
    "Detector",
    "DetectorInfeasibleError",
    "DisturbanceSpec",
    "ExperimentConfig",
    "FilterDesign",
    "GeneratorParams",
    "LinearModel",
    "NoFilterError",
    "PlantConfig",
    "PolyMatrix",
    "QpProblem",
    "ResidualFilter",
    "SimulationBlowUp",
    "Solution",
    "SolverError",
    "StackedSystem",
    "assemble_dae",
    "assemble_multiarea",
    "average_q",
    "build_stacked",
    "calibrate_threshold",
    "cmd_run_all",
    "default_config",
    "design_multivariate",
    "design_univariate",
    "gram_matrix",
    "impulse_response",
    "mismatch_signature",
    "multivariate_default_config",
    "multivariate_topology",
    "pole_polynomial",
    "pretrain_multivariate",
    "q_matrix",
    "residual_energy",
    "shift_matrix",
    "simulate_linear",
    "simulate_nonlinear",
    "solve_lp",
    "solve_qp",
    "steady_state_margin",
    "steady_state_residual",
    "three_area_default",
    "univariate_topology",
    "worst_case_alpha",
    "zoh_discretize",
]

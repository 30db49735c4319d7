"""Online linear optimization with hints from predictable sequences."""

from .bandit import ArmLossOracle, LossOracle, Scrible, ScribleMAB
from .errors import (
    CalibrationError, ConfigError, ContractError, DomainError, ExportError, FeedbackError,
    InvalidVector, ModeError, PredSeqError, SizeError, SolverError,
)
from .fpl import PerturbedLeader, bruteforce_minmax, l1_closed_form, simplex_closed_form, calibrate_perturbation
from .full_info import LocalExpWeights, OptimisticFTRL, OptimisticMirrorDescent, make_full_info
from .geometry import (
    Geometry, Norm, barrier_argmin, bregman, l1_geometry, l2_geometry, make_geometry, mirror_argmin,
    simplex_geometry,
)
from .harness import ExperimentConfig, RegretLedger, run_experiment
from .model_selection import ModelSet, assemble
from .predictors import make_predictor

__version__ = "0.1.0"

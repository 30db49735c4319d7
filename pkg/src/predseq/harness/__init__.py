"""Sequences, channels, accounting and orchestration for regret experiments."""

from .channels import BanditChannel, DelayedChannel, DelayedMean, FullChannel, delayed_hint, make_channel
from .doubling import DoublingWrapper, PhaseState, phase_ends
from .experiment import ALGORITHMS, ExperimentConfig, RunResult, read_config_file, run_experiment
from .ledger import COLUMNS, RegretLedger
from .sequences import (IIDSequence, NoisySequence, PhasedSequence, RandomVertexSequence,
                        ScriptedSequence, make_sequence, parse_sigma)

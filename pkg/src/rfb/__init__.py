"""Nonuniform filter banks built from paraunitary polyphase matrices.

Typical flow: :func:`plan_bank` a rational partition of [0, pi], derive
ideal modulation matrices and characterizing-filter stopbands, optimize the
paraunitary angles with :func:`optimize`, then :func:`analyze` and
:func:`synthesize_signal` signals.
"""

from .bands import BankPlan, ChannelPlan, PartitionError, parse_partition, plan_bank
from .charfilters import CharFilterSpec, ideal_spectra, modulation_shift, residue_structure, stopband
from .design import DesignProblem, OptimizationTrace, gradient, make_problem, objective, optimize
from .imm import (
    IdealModulationMatrix,
    MappingVariant,
    OmegaRegion,
    build_imm_pair,
    reflect_imm,
    swap_mapping,
    verify_mapping,
)
from .paraunitary import PolyphaseFIR, ThetaVector, eval_freq, paraunitarity_error, synthesize
from .runtime import SignalBuffer, SubbandSet, analyze, shift_invariance_check, synthesize_signal
from .spectrum import SpectrumMask

__version__ = "0.1.0"

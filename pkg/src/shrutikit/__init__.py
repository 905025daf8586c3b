"""Raga-aware correction and completion of microtonal (22-Shruti) pitch sequences."""

__version__ = "0.1.0"

from .scale import (
    DEFAULT_SCALE,
    MISSING,
    InvalidInput,
    InvalidTask,
    PitchSequence,
    ShrutiScale,
    circular_distance,
    fold_to_octave,
    nearest_shruti,
)
from .grammar import (
    Direction,
    InvalidState,
    RagaConfigError,
    RagaSpec,
    default_raga,
    default_raga_names,
    grammar_compliance,
    load_raga,
    pakad_recognition,
)
from .hmm import build_model, forward_backward, forward_backward_complete, viterbi_correct
from .fst import CostWeights, EditOp, OpKind, fst_complete, fst_correct
from .datagen import CorruptionConfig, MissingConfig, MissingPattern, apply_missing, corrupt, generate_sequence
from .estimators import ShrutiCompleter, ShrutiCorrector

__all__ = [
    "DEFAULT_SCALE", "MISSING", "InvalidInput", "InvalidTask", "PitchSequence", "ShrutiScale",
    "circular_distance", "fold_to_octave", "nearest_shruti",
    "Direction", "InvalidState", "RagaConfigError", "RagaSpec", "default_raga", "default_raga_names",
    "grammar_compliance", "load_raga", "pakad_recognition",
    "build_model", "forward_backward", "forward_backward_complete", "viterbi_correct",
    "CostWeights", "EditOp", "OpKind", "fst_complete", "fst_correct",
    "CorruptionConfig", "MissingConfig", "MissingPattern", "apply_missing", "corrupt", "generate_sequence",
    "ShrutiCompleter", "ShrutiCorrector",
]

"""scikit-learn style wrappers around the correction and completion engines.

``X`` is a list of pitch sequences (tonic-relative cents, ``None``/NaN or
``MISSING`` for gaps), not a 2-D array: sequences have different lengths.
``fit`` only resolves the raga and builds the engine, since the grammars
are fixed rather than learned; it exists so the objects compose with
``get_params``/``set_params``/``clone`` and pipelines.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .evalkit.baselines import nearest_cent_baseline, random_baseline
from .evalkit.metrics import shruti_accuracy
from .datagen import derive_seed
from .fst import CostWeights, aligned_states, fst_complete, fst_correct
from .grammar import resolve_raga
from .hmm import build_model, forward_backward_complete, viterbi_correct
from .scale import InvalidInput, PitchSequence, as_pitch_sequence

CORRECTION_ENGINES = ("fst", "hmm", "nearest", "random")
COMPLETION_ENGINES = ("fst", "hmm")


def check_sequences(X) -> list[PitchSequence]:
    """Validate ``X`` as a non-empty collection of pitch sequences."""
    if isinstance(X, (PitchSequence, str, bytes)) or np.ndim(X) == 1 and len(X) and np.isscalar(X[0]):
        raise InvalidInput("X must be a list of sequences; wrap a single sequence as [seq]")
    seqs = [as_pitch_sequence(x) for x in X]
    if not seqs:
        raise InvalidInput("X is empty")
    return seqs


def check_targets(y, seqs) -> list[list[int]]:
    y = [list(map(int, t)) for t in y]
    if len(y) != len(seqs):
        raise InvalidInput(f"{len(seqs)} sequences but {len(y)} targets")
    for s, t in zip(seqs, y):
        if len(s) != len(t):
            raise InvalidInput("each target must be as long as its sequence")
    return y


class _Base(TransformerMixin, BaseEstimator):
    engines: tuple = ()

    def fit(self, X=None, y=None):
        if self.engine not in self.engines:
            raise InvalidInput(f"engine must be one of {self.engines}, got {self.engine!r}")
        self.raga_ = resolve_raga(self.raga)
        self.weights_ = CostWeights(self.lambda_pitch, self.lambda_grammar, self.lambda_edit)
        self.model_ = build_model(self.raga_, self.sigma) if self.engine == "hmm" else None
        self.n_states_ = self.raga_.n_active
        return self

    def transform(self, X):
        """Cents of the predicted Shrutis, one float array per sequence."""
        check_is_fitted(self)
        cents = self.raga_.scale.array
        return [cents[np.asarray(p, dtype=int)] for p in self.predict(X)]


class ShrutiCorrector(_Base):
    """Map every observed note to a raga Shruti.

    Parameters
    ----------
    engine : {"fst", "hmm", "nearest", "random"}
    raga : str or RagaSpec
        Shipped raga name or a loaded RagaSpec.
    sigma : float
        Emission spread (cents) for the HMM.
    lambda_pitch, lambda_grammar, lambda_edit : float
        Arc cost weights for the FST.
    seed : int
        Seed for the random baseline; sequence ``i`` uses a seed derived
        from ``(seed, i)``.
    """

    engines = CORRECTION_ENGINES

    def __init__(self, engine="fst", raga="Yaman", sigma=25.0,
                 lambda_pitch=0.6, lambda_grammar=0.3, lambda_edit=0.1, seed=0):
        self.engine = engine
        self.raga = raga
        self.sigma = sigma
        self.lambda_pitch = lambda_pitch
        self.lambda_grammar = lambda_grammar
        self.lambda_edit = lambda_edit
        self.seed = seed

    def _one(self, seq: PitchSequence, i: int) -> list[int]:
        if self.engine == "fst":
            res = fst_correct(seq, self.raga_, self.weights_)
            return aligned_states(res.ops, len(seq), self.raga_, seq)
        if self.engine == "hmm":
            return viterbi_correct(self.model_, seq)[0]
        if self.engine == "nearest":
            return nearest_cent_baseline(seq, self.raga_.scale)
        return random_baseline(seq, self.raga_, derive_seed(self.seed, i))

    def predict(self, X) -> list[list[int]]:
        """Shruti index per input note for each sequence."""
        check_is_fitted(self)
        return [self._one(s, i) for i, s in enumerate(check_sequences(X))]

    def score(self, X, y) -> float:
        """Note-level accuracy pooled over all sequences."""
        seqs = check_sequences(X)
        y = check_targets(y, seqs)
        pred = self.predict(seqs)
        return shruti_accuracy(np.concatenate(pred), np.concatenate(y))


class ShrutiCompleter(_Base):
    """Fill MISSING notes; observed notes are snapped to the raga.

    ``score`` counts only positions that were MISSING in ``X``.
    """

    engines = COMPLETION_ENGINES

    def __init__(self, engine="hmm", raga="Yaman", sigma=25.0,
                 lambda_pitch=0.6, lambda_grammar=0.3, lambda_edit=0.1):
        self.engine = engine
        self.raga = raga
        self.sigma = sigma
        self.lambda_pitch = lambda_pitch
        self.lambda_grammar = lambda_grammar
        self.lambda_edit = lambda_edit

    def _one(self, seq: PitchSequence) -> list[int]:
        if self.engine == "hmm":
            return forward_backward_complete(self.model_, seq)[0]
        return fst_complete(seq, self.raga_, self.weights_)

    def predict(self, X) -> list[list[int]]:
        check_is_fitted(self)
        return [self._one(s) for s in check_sequences(X)]

    def score(self, X, y) -> float:
        seqs = check_sequences(X)
        y = check_targets(y, seqs)
        mask = np.concatenate([s.missing_mask() for s in seqs])
        pred = self.predict(seqs)
        return shruti_accuracy(np.concatenate(pred), np.concatenate(y), mask)

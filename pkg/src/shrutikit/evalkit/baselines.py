"""Reference correctors the models are compared against."""

from __future__ import annotations

from ..grammar import RagaSpec
from ..datagen import make_rng
from ..scale import DEFAULT_SCALE, InvalidTask, ShrutiScale, as_pitch_sequence, nearest_shruti


def nearest_cent_baseline(seq, scale: ShrutiScale = DEFAULT_SCALE) -> list[int]:
    """Snap every note to the closest entry of the full 22-Shruti table."""
    seq = as_pitch_sequence(seq)
    if seq.has_missing:
        raise InvalidTask("nearest-cent baseline cannot handle MISSING notes")
    return [nearest_shruti(scale, o)[0] for o in seq]


def random_baseline(seq, raga: RagaSpec, seed: int) -> list[int]:
    """Uniform draw over the raga's active Shrutis, ignoring the input pitch."""
    seq = as_pitch_sequence(seq)
    if seq.has_missing:
        raise InvalidTask("random baseline cannot handle MISSING notes")
    rng = make_rng(seed)
    picks = rng.integers(raga.n_active, size=len(seq))
    return [raga.active[k] for k in picks]

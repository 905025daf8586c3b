"""Per-sequence scoring of predicted Shruti sequences."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..scale import DEFAULT_SCALE, InvalidInput, ShrutiScale, circular_distance


def _pair(pred, truth, mask=None):
    pred = np.asarray(pred, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if pred.shape != truth.shape:
        raise InvalidInput(f"length mismatch: {pred.size} predicted vs {truth.size} true")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != truth.shape:
            raise InvalidInput("mask length does not match the sequences")
        pred, truth = pred[mask], truth[mask]
    if truth.size == 0:
        raise InvalidInput("nothing to score")
    return pred, truth


def shruti_accuracy(pred: Sequence[int], truth: Sequence[int], mask: Optional[Sequence[bool]] = None) -> float:
    """Fraction of positions (optionally only where ``mask``) with the right Shruti."""
    pred, truth = _pair(pred, truth, mask)
    return float(np.mean(pred == truth))


def avg_pitch_error(
    pred: Sequence[int],
    truth: Sequence[int],
    scale: ShrutiScale = DEFAULT_SCALE,
    mask: Optional[Sequence[bool]] = None,
    circular: bool = True,
) -> float:
    """Mean cent distance between predicted and true Shruti centres.

    ``circular=False`` gives the plain within-octave difference, which can
    reach 1110 cents for Sa against N2.
    """
    pred, truth = _pair(pred, truth, mask)
    a, b = scale.array[pred], scale.array[truth]
    d = circular_distance(a, b) if circular else np.abs(a - b)
    return float(np.mean(d))

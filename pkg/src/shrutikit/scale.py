"""22-Shruti scale, cent arithmetic and nearest-Shruti quantization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

OCTAVE = 1200.0

DEFAULT_CENTS = (
    0, 90, 112, 182, 204, 294, 316, 386, 408, 498, 520,
    590, 612, 702, 792, 814, 884, 906, 996, 1018, 1088, 1110,
)

# Conventional swara label for each entry of the default table.
DEFAULT_NAMES = (
    "S", "r1", "r2", "R1", "R2", "g1", "g2", "G1", "G2", "m1", "m2",
    "M1", "M2", "P", "d1", "d2", "D1", "D2", "n1", "n2", "N1", "N2",
)


class InvalidInput(ValueError):
    """Raised for malformed pitch input (non-finite cents, empty sequences...)."""


class InvalidTask(InvalidInput):
    """Input that is well-formed but unsuitable for the requested task,
    e.g. MISSING notes handed to a correction engine."""


class _Missing:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"

    def __reduce__(self):
        return (_Missing, ())


MISSING = _Missing()

Observation = Union[float, _Missing]


def is_missing(obs) -> bool:
    return obs is MISSING


def _check_finite(cents: float) -> float:
    try:
        value = float(cents)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"not a cent value: {cents!r}") from exc
    if not math.isfinite(value):
        raise InvalidInput(f"cent value must be finite, got {cents!r}")
    return value


def fold_to_octave(cents: float) -> float:
    """Fold a cent value into ``[0, 1200)``."""
    value = _check_finite(cents) % OCTAVE
    # -1e-14 % 1200 == 1200.0 in floating point
    if value >= OCTAVE:
        value = 0.0
    return value


def circular_distance(a, b):
    """Unsigned octave-wrapped distance in cents; works on scalars and arrays."""
    d = np.abs(np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), OCTAVE))
    d = np.minimum(d, OCTAVE - d)
    return float(d) if np.ndim(d) == 0 else d


def signed_circular_offset(a: float, b: float) -> float:
    """``a - b`` wrapped into ``[-600, 600)``."""
    return (a - b + OCTAVE / 2) % OCTAVE - OCTAVE / 2


@dataclass(frozen=True)
class ShrutiScale:
    """Ordered cent table plus the tonic frequency it is anchored to."""

    cents: tuple = DEFAULT_CENTS
    tonic_hz: float = 261.63
    names: tuple = field(default=DEFAULT_NAMES, compare=False)

    def __post_init__(self):
        cents = tuple(float(c) for c in self.cents)
        object.__setattr__(self, "cents", cents)
        if len(cents) < 2:
            raise InvalidInput("a scale needs at least two entries")
        if cents[0] != 0.0:
            raise InvalidInput("first scale entry must be 0 cents")
        if any(b <= a for a, b in zip(cents, cents[1:])):
            raise InvalidInput("scale cents must be strictly increasing")
        if cents[-1] >= OCTAVE:
            raise InvalidInput("scale cents must lie in [0, 1200)")
        if not (self.tonic_hz > 0 and math.isfinite(self.tonic_hz)):
            raise InvalidInput("tonic_hz must be a positive frequency")
        if len(self.names) != len(cents):
            object.__setattr__(self, "names", tuple(str(i) for i in range(len(cents))))

    def __len__(self) -> int:
        return len(self.cents)

    def __iter__(self) -> Iterator[float]:
        return iter(self.cents)

    def __getitem__(self, index: int) -> float:
        return self.cents[index]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.cents)

    def name(self, index: int) -> str:
        return self.names[index]

    def index_of(self, label) -> int:
        """Resolve an integer index or a swara label to a scale index."""
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            idx = int(label)
            if not 0 <= idx < len(self.cents):
                raise InvalidInput(f"Shruti index {idx} out of range 0..{len(self.cents) - 1}")
            return idx
        try:
            return self.names.index(str(label))
        except ValueError:
            raise InvalidInput(f"unknown Shruti label {label!r}") from None


DEFAULT_SCALE = ShrutiScale()


def nearest_shruti(scale: ShrutiScale, cents: float) -> tuple[int, float]:
    """Return ``(index, deviation)`` of the closest scale entry.

    Distance wraps around the octave, so 1195 is 5 cents below the upper Sa.
    Exact ties go to the lower index. The deviation is ``input - shruti``
    in ``[-600, 600)``.
    """
    folded = fold_to_octave(cents)
    dist = circular_distance(folded, scale.array)
    idx = int(np.argmin(dist))  # argmin returns the first (lowest) index on ties
    return idx, signed_circular_offset(folded, scale.cents[idx])


def nearest_among(scale: ShrutiScale, cents: float, candidates: Sequence[int]) -> int:
    """Nearest scale index restricted to ``candidates`` (ties -> lowest index)."""
    folded = fold_to_octave(cents)
    cand = sorted(candidates)
    dist = circular_distance(folded, scale.array[cand])
    return cand[int(np.argmin(dist))]


def min_interval(scale: ShrutiScale | Iterable[float]) -> float:
    values = np.sort(np.asarray(list(scale.cents if isinstance(scale, ShrutiScale) else scale), dtype=float))
    if values.size < 2:
        raise InvalidInput("need at least two entries")
    return float(np.min(np.diff(values)))


def cents_to_hz(scale: ShrutiScale, cents: float) -> float:
    return scale.tonic_hz * 2.0 ** (_check_finite(cents) / OCTAVE)


def hz_to_cents(scale: ShrutiScale, hz: float) -> float:
    if not hz > 0:
        raise InvalidInput(f"frequency must be positive, got {hz!r}")
    return OCTAVE * math.log2(hz / scale.tonic_hz)


def reference_to_tonic(cents_from_a4: float, tonic_hz: float, reference_hz: float = 440.0) -> float:
    """Re-reference cents measured from A4 (or another pitch) to the tonic."""
    return _check_finite(cents_from_a4) + OCTAVE * math.log2(reference_hz / tonic_hz)


class PitchSequence(Sequence):
    """Immutable list of observations: finite cent values or ``MISSING``."""

    __slots__ = ("_items", "_array")

    def __init__(self, items: Iterable):
        out = []
        for obs in items:
            if obs is MISSING or obs is None:
                out.append(MISSING)
            else:
                out.append(_check_finite(obs))
        if not out:
            raise InvalidInput("pitch sequence must be non-empty")
        self._items = tuple(out)
        self._array = np.array([np.nan if o is MISSING else o for o in out], dtype=float)
        self._array.setflags(write=False)

    def __getitem__(self, i):
        return self._items[i]

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other) -> bool:
        if isinstance(other, PitchSequence):
            return self._items == other._items
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._items)

    def __repr__(self) -> str:
        return f"PitchSequence({list(self._items)!r})"

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self._array).any())

    @property
    def all_missing(self) -> bool:
        return bool(np.isnan(self._array).all())

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self._array)

    def to_array(self) -> np.ndarray:
        """Cents as a read-only float array with NaN at missing positions."""
        return self._array

    @classmethod
    def from_ids(cls, ids: Iterable[int], scale: ShrutiScale = DEFAULT_SCALE) -> "PitchSequence":
        return cls(scale.cents[i] for i in ids)


def as_pitch_sequence(seq) -> PitchSequence:
    if isinstance(seq, PitchSequence):
        return seq
    if isinstance(seq, np.ndarray):
        return PitchSequence(MISSING if np.isnan(x) else float(x) for x in seq.ravel())
    return PitchSequence(seq)

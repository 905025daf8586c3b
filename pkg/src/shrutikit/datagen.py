"""Synthetic ground truth and controlled corruption.

Every random draw comes from numpy's PCG64 bit generator seeded explicitly,
which gives identical streams on every platform.
"""

from __future__ import annotations

import enum
import math
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grammar import Direction, RagaSpec, direction_between
from .scale import DEFAULT_SCALE, MISSING, InvalidInput, PitchSequence, ShrutiScale

PAKAD_SPLICE_PROB = 0.2


class MissingPattern(enum.Enum):
    RANDOM = "random"
    CLUSTERED = "clustered"
    STRUCTURED = "structured"


class InvalidConfig(InvalidInput):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(*keys) -> int:
    """Stable 63-bit seed from a mix of ints and strings."""
    words = [k if isinstance(k, int) else zlib.crc32(str(k).encode()) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(2, np.uint64)[0] >> np.uint64(1))


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class CorruptionConfig:
    """Substitute notes at ``substitution_rate`` with random full-scale
    Shrutis, then add uniform noise in ``[-noise_cents, noise_cents]`` to a
    ``noise_rate`` fraction of notes (all notes by default)."""

    substitution_rate: float = 0.0
    noise_cents: float = 0.0
    seed: int = 0
    noise_rate: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.substitution_rate <= 1.0:
            raise InvalidConfig(f"substitution_rate must be in [0, 1], got {self.substitution_rate}")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise InvalidConfig(f"noise_rate must be in [0, 1], got {self.noise_rate}")
        if not (self.noise_cents >= 0 and math.isfinite(self.noise_cents)):
            raise InvalidConfig(f"noise_cents must be finite and >= 0, got {self.noise_cents}")


@dataclass(frozen=True)
class MissingConfig:
    missing_rate: float = 0.0
    pattern: MissingPattern = MissingPattern.RANDOM
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pattern", MissingPattern(self.pattern))
        if not 0.0 <= self.missing_rate < 1.0:
            raise InvalidConfig(f"missing_rate must be in [0, 1), got {self.missing_rate}")


def _extreme(raga: RagaSpec, state: int, direction: Direction) -> bool:
    return state == (raga.active[-1] if direction == Direction.ASCENDING else raga.active[0])


def successors(raga: RagaSpec, state: int, direction: Direction) -> list[int]:
    """Notes reachable from ``state`` while moving in ``direction``.

    A repeat counts as ascending (the same tie rule compliance scoring
    uses), so it is offered in either walk direction but only if the ascent
    set allows it.
    """
    out = []
    for b in raga.active:
        step = direction_between(raga.scale, state, b)
        if (b == state or step == direction) and raga.allowed(state, b, step):
            out.append(b)
    return out


def next_state(raga: RagaSpec, state: int, direction: Direction, rng: np.random.Generator) -> int:
    """Draw a successor proportionally to the raga's transition weights."""
    succ = successors(raga, state, direction)
    if not succ:
        raise InvalidInput(f"no successor of {state} in direction {direction.name}")
    w = np.array([raga.transition_weight(state, b, direction_between(raga.scale, state, b)) for b in succ])
    return succ[int(rng.choice(len(succ), p=w / w.sum()))]


def generate_sequence(
    raga: RagaSpec,
    length: int,
    seed: int,
    pakad_prob: float = PAKAD_SPLICE_PROB,
    start: Optional[int] = None,
) -> list[int]:
    """Weighted random walk on the raga graph.

    The walk keeps its direction until it reaches the top (or bottom) of
    the active range, or a note with no onward edge that way, where it
    turns around. With probability
    ``pakad_prob`` per step a whole pakad motif is spliced in, provided it
    can legally follow the current note.
    """
    if length < 2:
        raise InvalidInput("length must be >= 2")
    rng = make_rng(seed)
    cur = raga.active[int(rng.integers(raga.n_active))] if start is None else start
    if cur not in raga.rank:
        raise InvalidInput(f"start Shruti {cur} is not active")
    direction = Direction(int(rng.integers(2)))
    seq = [cur]
    while len(seq) < length:
        if _extreme(raga, cur, direction) or not successors(raga, cur, direction):
            direction = Direction(1 - direction)
        if raga.pakad and rng.random() < pakad_prob:
            options = []
            for motif in raga.pakad:
                body = motif[1:] if motif[0] == cur else motif
                if raga.allowed(cur, body[0], direction_between(raga.scale, cur, body[0])):
                    options.append(body)
            if options:
                body = options[int(rng.integers(len(options)))]
                body = body[: length - len(seq)]
                seq.extend(body)
                prev = seq[-2]
                cur = seq[-1]
                if prev != cur:
                    direction = direction_between(raga.scale, prev, cur)
                continue
        cur = next_state(raga, cur, direction, rng)
        seq.append(cur)
    return seq


def corrupt(seq, cfg: CorruptionConfig, scale: ShrutiScale = DEFAULT_SCALE) -> PitchSequence:
    """Cents for ``seq`` with random substitutions and uniform pitch noise.

    Values stay tonic-relative and are not folded, so a noisy Sa may sit
    slightly below 0.
    """
    rng = make_rng(cfg.seed)
    n = len(seq)
    cents = np.array([scale.cents[s] for s in seq], dtype=float)
    sub = rng.random(n) < cfg.substitution_rate
    draws = rng.integers(len(scale), size=n)
    cents[sub] = scale.array[draws[sub]]
    if cfg.noise_cents > 0:
        noisy = rng.random(n) < cfg.noise_rate
        noise = rng.uniform(-cfg.noise_cents, cfg.noise_cents, size=n)
        cents[noisy] += noise[noisy]
    return PitchSequence(cents.tolist())


def substitution_mask(n: int, cfg: CorruptionConfig) -> np.ndarray:
    """Which positions :func:`corrupt` substitutes for a sequence of length ``n``."""
    return make_rng(cfg.seed).random(n) < cfg.substitution_rate


def missing_mask(n: int, cfg: MissingConfig) -> np.ndarray:
    rate = cfg.missing_rate
    mask = np.zeros(n, dtype=bool)
    if rate == 0 or n == 0:
        return mask
    rng = make_rng(cfg.seed)
    if cfg.pattern is MissingPattern.RANDOM:
        mask = rng.random(n) < rate
        if mask.all():
            mask[int(rng.integers(n))] = False
    elif cfg.pattern is MissingPattern.CLUSTERED:
        gap = round_half_up(rate * n)
        if gap >= n:
            raise InvalidConfig(f"a {gap}-note gap would blank a {n}-note sequence")
        start = int(rng.integers(n - gap + 1))
        mask[start:start + gap] = True
    else:
        k = round_half_up(1 / rate)
        if k <= 1:
            raise InvalidConfig(f"missing every {k} note(s) would blank the sequence")
        mask[::k] = True
    return mask


def apply_missing(seq, cfg: MissingConfig, scale: ShrutiScale = DEFAULT_SCALE) -> PitchSequence:
    """Exact cents for ``seq`` with positions blanked per ``cfg.pattern``.

    RANDOM drops each note independently; CLUSTERED drops one contiguous
    run of ``round(rate * T)`` notes; STRUCTURED drops every
    ``round(1 / rate)``-th note starting at position 0.
    """
    mask = missing_mask(len(seq), cfg)
    return PitchSequence(MISSING if m else scale.cents[s] for s, m in zip(seq, mask))

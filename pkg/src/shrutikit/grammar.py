"""Raga grammars: direction-split transition graphs over Shruti positions.

A raga is loaded from a small YAML document (see ``ragas/*.yaml`` and the
README for the schema). Edge weights follow

    weight(i, j) = [edge allowed] * exp(-alpha * steps(i, j)) * bonus(i, j)

where ``steps`` counts positions in the raga's sorted active set and
``bonus`` is ``pakad_bonus`` when ``(i, j)`` is a bigram of a pakad motif.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterable, Sequence

import numpy as np
import yaml

from .scale import DEFAULT_SCALE, InvalidInput, ShrutiScale

SCHEMA_VERSION = 1


class Direction(enum.IntEnum):
    ASCENDING = 0
    DESCENDING = 1


class InvalidState(ValueError):
    """A Shruti that is not part of the raga's active set."""


class RagaConfigError(ValueError):
    """A raga config document that fails schema or invariant checks."""


def direction_between(scale: ShrutiScale, prev: int, cur: int) -> Direction:
    """Melodic direction of a step between two scale positions (ties ascend)."""
    return Direction.ASCENDING if scale.cents[cur] >= scale.cents[prev] else Direction.DESCENDING


@dataclass(frozen=True, eq=False)
class RagaSpec:
    name: str
    active: tuple
    ascent_edges: frozenset
    descent_edges: frozenset
    pakad: tuple = ()
    vadi: int = 0
    samvadi: int = 0
    alpha: float = 0.1
    pakad_bonus_factor: float = 1.5
    scale: ShrutiScale = field(default=DEFAULT_SCALE, repr=False)

    def __post_init__(self):
        scale = self.scale
        active = tuple(sorted(set(int(a) for a in self.active), key=lambda i: scale.cents[i]))
        object.__setattr__(self, "active", active)
        ascent = {(int(a), int(b)) for a, b in self.ascent_edges}
        descent = {(int(a), int(b)) for a, b in self.descent_edges}
        # a repeated note has no melodic direction: a repeat listed in either
        # set is allowed in both
        repeats = {(a, b) for a, b in ascent | descent if a == b}
        object.__setattr__(self, "ascent_edges", frozenset(ascent | repeats))
        object.__setattr__(self, "descent_edges", frozenset(descent | repeats))
        object.__setattr__(self, "pakad", tuple(tuple(int(s) for s in m) for m in self.pakad))
        self._validate()

    def _validate(self):
        n = len(self.scale)
        if not self.active:
            raise RagaConfigError("raga has no active Shrutis")
        for idx in self.active:
            if not 0 <= idx < n:
                raise RagaConfigError(f"Shruti index {idx} outside 0..{n - 1}")
        members = set(self.active)
        for direction, edges in ((Direction.ASCENDING, self.ascent_edges), (Direction.DESCENDING, self.descent_edges)):
            label = direction.name.lower()
            for a, b in edges:
                if a not in members or b not in members:
                    raise RagaConfigError(f"{label} edge ({a}, {b}) references a non-active Shruti")
                # repeats are legal in both sets; anything else must move the stated way
                if a != b and direction_between(self.scale, a, b) != direction:
                    raise RagaConfigError(f"{label} edge ({a}, {b}) moves the wrong way in pitch")
            sources = {a for a, _ in edges}
            targets = {b for _, b in edges}
            for idx in self.active:
                if idx not in sources or idx not in targets:
                    raise RagaConfigError(
                        f"degenerate {label} graph: Shruti {idx} lacks an incoming or outgoing edge"
                    )
        for motif in self.pakad:
            if not 3 <= len(motif) <= 6:
                raise RagaConfigError(f"pakad motif {motif} must have 3..6 notes")
            for a, b in zip(motif, motif[1:]):
                if a not in members or b not in members:
                    raise RagaConfigError(f"pakad motif {motif} uses a non-active Shruti")
                if not self.allowed(a, b, direction_between(self.scale, a, b)):
                    raise RagaConfigError(f"pakad motif {motif} contains forbidden step ({a}, {b})")
        if self.vadi not in members or self.samvadi not in members:
            raise RagaConfigError("vadi and samvadi must be active Shrutis")
        if self.vadi == self.samvadi:
            raise RagaConfigError("vadi and samvadi must differ")
        if not self.alpha >= 0:
            raise RagaConfigError("alpha must be non-negative")
        if not self.pakad_bonus_factor >= 1:
            raise RagaConfigError("pakad_bonus must be >= 1")

    @property
    def n_active(self) -> int:
        return len(self.active)

    @cached_property
    def rank(self) -> dict:
        """Scale index -> position in the sorted active set."""
        return {s: k for k, s in enumerate(self.active)}

    @cached_property
    def active_cents(self) -> np.ndarray:
        return np.array([self.scale.cents[s] for s in self.active])

    @cached_property
    def pakad_bigrams(self) -> frozenset:
        return frozenset((a, b) for m in self.pakad for a, b in zip(m, m[1:]))

    def edges(self, direction: Direction) -> frozenset:
        return self.ascent_edges if direction == Direction.ASCENDING else self.descent_edges

    def _check(self, *ids):
        for s in ids:
            if s not in self.rank:
                raise InvalidState(f"Shruti {s} is not active in raga {self.name}")

    def allowed(self, src: int, dst: int, direction: Direction) -> bool:
        self._check(src, dst)
        return (src, dst) in self.edges(direction)

    def step_distance(self, src: int, dst: int) -> int:
        self._check(src, dst)
        return abs(self.rank[src] - self.rank[dst])

    def transition_weight(self, src: int, dst: int, direction: Direction) -> float:
        if not self.allowed(src, dst, direction):
            return 0.0
        bonus = self.pakad_bonus_factor if (src, dst) in self.pakad_bigrams else 1.0
        return math.exp(-self.alpha * self.step_distance(src, dst)) * bonus

    def weight_matrix(self, direction: Direction) -> np.ndarray:
        """Unnormalized weights over active states, rows = source."""
        n = self.n_active
        w = np.zeros((n, n))
        for a, b in self.edges(direction):
            w[self.rank[a], self.rank[b]] = self.transition_weight(a, b, direction)
        return w

    @cached_property
    def log_transition(self) -> np.ndarray:
        """``(2, N, N)`` log row-normalized transition probabilities.

        Rows with no allowed successor become a certain self-loop.
        """
        out = np.full((2, self.n_active, self.n_active), -np.inf)
        for d in Direction:
            w = self.weight_matrix(d)
            z = w.sum(axis=1)
            for i in range(self.n_active):
                if z[i] > 0:
                    with np.errstate(divide="ignore"):
                        out[d, i] = np.log(w[i] / z[i])
                else:
                    out[d, i, i] = 0.0
        out.setflags(write=False)
        return out

    def transition_prob(self, src: int, dst: int, direction: Direction) -> float:
        self._check(src, dst)
        return float(np.exp(self.log_transition[direction, self.rank[src], self.rank[dst]]))

    def label(self, idx: int) -> str:
        return self.scale.name(idx)


def grammar_compliance(seq: Sequence[int], raga: RagaSpec) -> float:
    """Fraction of consecutive steps the grammar allows.

    The direction of each step is read from the pitches of the two states.
    Non-active ids count as violations. Sequences shorter than two notes
    have nothing to violate and score 1.0.
    """
    seq = list(seq)
    if len(seq) < 2:
        return 1.0
    ok = 0
    for a, b in zip(seq, seq[1:]):
        if a in raga.rank and b in raga.rank and raga.allowed(a, b, direction_between(raga.scale, a, b)):
            ok += 1
    return ok / (len(seq) - 1)


def _contains(seq: Sequence[int], motif: Sequence[int]) -> bool:
    k = len(motif)
    motif = tuple(motif)
    return any(tuple(seq[i:i + k]) == motif for i in range(len(seq) - k + 1))


def pakad_recognition(seq: Sequence[int], raga: RagaSpec) -> float:
    """Share of the raga's pakad motifs found verbatim in ``seq``."""
    seq = list(seq)
    if not seq:
        raise InvalidInput("sequence must be non-empty")
    if not raga.pakad:
        return 1.0
    return sum(_contains(seq, m) for m in raga.pakad) / len(raga.pakad)


# --- config loading -------------------------------------------------------

_KNOWN_KEYS = {
    "schema_version", "name", "active", "vadi", "samvadi", "alpha", "pakad_bonus",
    "repeats", "leaps", "pakad", "ascent_edges", "descent_edges", "description",
}


def _pairs(raw, what: str) -> list:
    if raw is None:
        return []
    if not isinstance(raw, list) or not all(isinstance(p, list) and len(p) == 2 for p in raw):
        raise RagaConfigError(f"{what} must be a list of [from, to] pairs")
    return raw


def raga_from_dict(doc: dict, scale: ShrutiScale = DEFAULT_SCALE) -> RagaSpec:
    if not isinstance(doc, dict):
        raise RagaConfigError("raga config must be a mapping")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise RagaConfigError(f"unknown raga config keys: {sorted(unknown)}")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise RagaConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    for key in ("name", "active", "vadi", "samvadi"):
        if key not in doc:
            raise RagaConfigError(f"missing required key {key!r}")

    def idx(label):
        try:
            return scale.index_of(label)
        except InvalidInput as exc:
            raise RagaConfigError(str(exc)) from None

    if not isinstance(doc["active"], list):
        raise RagaConfigError("active must be a list of Shrutis")
    active = [idx(a) for a in doc["active"]]
    if len(set(active)) != len(active):
        raise RagaConfigError("duplicate Shruti in active set")
    ordered = sorted(active, key=lambda i: scale.cents[i])
    rank = {s: k for k, s in enumerate(ordered)}

    if "ascent_edges" in doc or "descent_edges" in doc:
        ascent = {(idx(a), idx(b)) for a, b in _pairs(doc.get("ascent_edges"), "ascent_edges")}
        descent = {(idx(a), idx(b)) for a, b in _pairs(doc.get("descent_edges"), "descent_edges")}
    else:
        ascent = {(ordered[k], ordered[k + 1]) for k in range(len(ordered) - 1)}
        descent = {(ordered[k + 1], ordered[k]) for k in range(len(ordered) - 1)}
        leaps = doc.get("leaps") or {}
        if not isinstance(leaps, dict) or set(leaps) - {"ascent", "descent"}:
            raise RagaConfigError("leaps must be a mapping with 'ascent' and/or 'descent' lists")
        ascent |= {(idx(a), idx(b)) for a, b in _pairs(leaps.get("ascent"), "leaps.ascent")}
        descent |= {(idx(a), idx(b)) for a, b in _pairs(leaps.get("descent"), "leaps.descent")}
        if doc.get("repeats", True):
            ascent |= {(s, s) for s in ordered}
            descent |= {(s, s) for s in ordered}
    for a, b in ascent | descent:
        if a not in rank or b not in rank:
            raise RagaConfigError(f"edge ({scale.name(a)}, {scale.name(b)}) uses a non-active Shruti")

    pakad = doc.get("pakad") or []
    if not isinstance(pakad, list) or not all(isinstance(m, list) for m in pakad):
        raise RagaConfigError("pakad must be a list of motifs")
    try:
        return RagaSpec(
            name=str(doc["name"]),
            active=tuple(active),
            ascent_edges=frozenset(ascent),
            descent_edges=frozenset(descent),
            pakad=tuple(tuple(idx(s) for s in m) for m in pakad),
            vadi=idx(doc["vadi"]),
            samvadi=idx(doc["samvadi"]),
            alpha=float(doc.get("alpha", 0.1)),
            pakad_bonus_factor=float(doc.get("pakad_bonus", 1.5)),
            scale=scale,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, RagaConfigError):
            raise
        raise RagaConfigError(str(exc)) from exc


def load_raga(source: str, scale: ShrutiScale = DEFAULT_SCALE) -> RagaSpec:
    """Parse a raga config from YAML text."""
    try:
        doc = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise RagaConfigError(f"malformed raga config: {exc}") from exc
    return raga_from_dict(doc, scale)


def default_raga_names() -> list[str]:
    files = resources.files("shrutikit").joinpath("ragas")
    return sorted(p.name[:-5].capitalize() for p in files.iterdir() if p.name.endswith(".yaml"))


def default_raga(name: str, scale: ShrutiScale = DEFAULT_SCALE) -> RagaSpec:
    """Load one of the shipped raga definitions by (case-insensitive) name."""
    path = resources.files("shrutikit").joinpath("ragas", f"{name.lower()}.yaml")
    if not path.is_file():
        raise KeyError(f"unknown raga {name!r}; available: {', '.join(default_raga_names())}")
    return load_raga(path.read_text(), scale)


def resolve_raga(raga, scale: ShrutiScale = DEFAULT_SCALE) -> RagaSpec:
    if isinstance(raga, RagaSpec):
        return raga
    return default_raga(str(raga), scale)


def iter_default_ragas(scale: ShrutiScale = DEFAULT_SCALE) -> Iterable[RagaSpec]:
    for name in default_raga_names():
        yield default_raga(name, scale)

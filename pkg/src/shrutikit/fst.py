"""Shruti-aware weighted transducer for correction and completion.

Correction searches an edit lattice over the observations. Every arc is
scored (higher is better) as

    lambda_pitch * c_pitch + lambda_grammar * c_grammar + lambda_edit * c_edit

with ``c_pitch = -|o - mu_s| / 50`` (octave-wrapped), ``c_grammar`` the log
of the raga's normalized transition probability and ``c_edit`` equal to
-1 for every operation except a direct match. Grammar-forbidden arcs are
never built, so every output is grammar-compliant.

Lattice columns are the raga's active states plus one epsilon column that
stands for "nothing emitted yet". The search is a Viterbi pass over
``(time, column)`` using precomputed insertion bridges, ``O(T M^2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numba
import numpy as np

from .grammar import Direction, RagaSpec, direction_between
from .scale import MISSING, InvalidInput, InvalidTask, as_pitch_sequence, circular_distance, nearest_among

PITCH_SCALE = 50.0
EDIT_PENALTY = -1.0
# A deleted observation is scored against a uniform background pitch,
# whose expected octave-wrapped distance to any centre is 300 cents.
BACKGROUND_DISTANCE = 300.0
MAX_INSERTS = 2

DEFAULT_TALA_CYCLE = 16
DEFAULT_POSITION_BONUS = 0.5
DEFAULT_PAKAD_BONUS = 1.0


@dataclass(frozen=True)
class CostWeights:
    lambda_pitch: float = 0.6
    lambda_grammar: float = 0.3
    lambda_edit: float = 0.1

    def __post_init__(self):
        for name in ("lambda_pitch", "lambda_grammar", "lambda_edit"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise InvalidInput(f"{name} must be a finite non-negative number, got {value!r}")


class OpKind(enum.Enum):
    MATCH = "match"
    INSERT = "insert"
    DELETE = "delete"
    SUBSTITUTE = "substitute"


_OP_SHAPE = {
    OpKind.MATCH: (True, True),
    OpKind.SUBSTITUTE: (True, True),
    OpKind.INSERT: (False, True),
    OpKind.DELETE: (True, False),
}


class EditOp(NamedTuple):
    kind: OpKind
    obs_index: Optional[int] = None
    state: Optional[int] = None

    @classmethod
    def make(cls, kind, obs_index=None, state=None) -> "EditOp":
        """Validated constructor."""
        op = cls(OpKind(kind), obs_index, state)
        op.check()
        return op

    def check(self) -> None:
        expected = _OP_SHAPE[self.kind]
        if (self.obs_index is not None, self.state is not None) != expected:
            raise InvalidInput(f"{self.kind.name} op needs obs_index={expected[0]}, state={expected[1]}")


def pitch_cost(obs: float, centre: float) -> float:
    return -circular_distance(obs, centre) / PITCH_SCALE


def op_cost(
    op: EditOp,
    obs: Optional[float],
    prev_state: Optional[int],
    raga: RagaSpec,
    weights: CostWeights = CostWeights(),
    direction: Optional[Direction] = None,
) -> float:
    """Score of a single lattice arc; ``-inf`` marks a grammar-forbidden arc.

    ``direction`` defaults to the pitch direction from ``prev_state`` to the
    emitted state. DELETE carries no grammar term and its pitch term is the
    background cost.
    """
    if op.kind in (OpKind.MATCH, OpKind.SUBSTITUTE, OpKind.DELETE) and (obs is None or obs is MISSING):
        raise InvalidInput(f"{op.kind.name} op needs an observed pitch")
    if op.kind is OpKind.DELETE:
        return weights.lambda_pitch * (-BACKGROUND_DISTANCE / PITCH_SCALE) + weights.lambda_edit * EDIT_PENALTY

    state = op.state
    if state not in raga.rank:
        raise InvalidInput(f"Shruti {state} is not active in raga {raga.name}")
    if op.kind is OpKind.MATCH and nearest_among(raga.scale, obs, raga.active) != state:
        raise InvalidInput("MATCH must map the observation to its nearest active Shruti")
    if op.kind is OpKind.SUBSTITUTE and nearest_among(raga.scale, obs, raga.active) == state:
        raise InvalidInput("SUBSTITUTE must not target the nearest active Shruti")

    c_pitch = 0.0 if op.kind is OpKind.INSERT else pitch_cost(obs, raga.scale.cents[state])
    if prev_state is None:
        c_grammar = 0.0
    else:
        if direction is None:
            direction = direction_between(raga.scale, prev_state, state)
        if not raga.allowed(prev_state, state, direction):
            return -math.inf
        c_grammar = float(raga.log_transition[direction, raga.rank[prev_state], raga.rank[state]])
    c_edit = 0.0 if op.kind is OpKind.MATCH else EDIT_PENALTY
    return weights.lambda_pitch * c_pitch + weights.lambda_grammar * c_grammar + weights.lambda_edit * c_edit


def grammar_table(raga: RagaSpec) -> np.ndarray:
    """``(N, N)`` log transition probability with direction read from the states."""
    n = raga.n_active
    out = np.empty((n, n))
    for i, a in enumerate(raga.active):
        for j, b in enumerate(raga.active):
            out[i, j] = raga.log_transition[direction_between(raga.scale, a, b), i, j]
    return out


@dataclass(frozen=True, eq=False)
class Lattice:
    """Arc scores for one input: emissions per (time, state) plus bridges.

    ``bridge[p, s]`` is the best score for going from ``p`` to ``s`` with up to
    ``MAX_INSERTS`` inserted states (final grammar arc included);
    ``bridge_len`` / ``bridge_via`` record how.
    """

    raga: RagaSpec
    emit: np.ndarray  # (T, N)
    nearest: np.ndarray  # (T,) rank of nearest active state
    delete: np.ndarray  # (T,)
    bridge: np.ndarray  # (N, N)
    bridge_len: np.ndarray  # (N, N) number of inserts
    bridge_via: np.ndarray  # (N, N, MAX_INSERTS) ranks of inserted states

    @property
    def n_columns(self) -> int:
        return self.emit.shape[1] + 1


_BRIDGE_CACHE: dict = {}


def _bridges(raga: RagaSpec, weights: CostWeights):
    key = (id(raga), weights)
    hit = _BRIDGE_CACHE.get(key)
    if hit is not None and hit[0] is raga:
        return hit[1]
    table = grammar_table(raga)
    finite = np.isfinite(table)
    # forbidden arcs stay forbidden even when lambda_grammar == 0
    g = np.where(finite, weights.lambda_grammar * np.where(finite, table, 0.0), -np.inf)
    ins = weights.lambda_edit * EDIT_PENALTY
    n = raga.n_active
    best = g.copy()
    length = np.zeros((n, n), dtype=np.int64)
    via = np.full((n, n, MAX_INSERTS), -1, dtype=np.int64)
    # one insert: p -> i -> s
    one = g[:, :, None] + ins + g[None, :, :]  # (p, i, s)
    one_arg = np.argmax(one, axis=1)
    one_best = np.take_along_axis(one, one_arg[:, None, :], axis=1)[:, 0, :]
    # two inserts: p -> i -> (best one-insert bridge i -> s)
    two = g[:, :, None] + ins + one_best[None, :, :]
    two_arg = np.argmax(two, axis=1)
    two_best = np.take_along_axis(two, two_arg[:, None, :], axis=1)[:, 0, :]
    for p in range(n):
        for s in range(n):
            if one_best[p, s] > best[p, s]:
                best[p, s] = one_best[p, s]
                length[p, s] = 1
                via[p, s, 0] = one_arg[p, s]
            if two_best[p, s] > best[p, s]:
                i = two_arg[p, s]
                best[p, s] = two_best[p, s]
                length[p, s] = 2
                via[p, s, 0] = i
                via[p, s, 1] = one_arg[i, s]
    out = (best, length, via)
    _BRIDGE_CACHE[key] = (raga, out)
    return out


def build_lattice(seq, raga: RagaSpec, weights: CostWeights = CostWeights()) -> Lattice:
    seq = as_pitch_sequence(seq)
    if seq.has_missing:
        raise InvalidTask("sequence has MISSING notes; use completion instead of correction")
    bridge, length, via = _bridges(raga, weights)
    emit, nearest, delete = _arc_scores(
        seq.to_array(), raga.active_cents, weights.lambda_pitch, weights.lambda_edit
    )
    return Lattice(raga, emit, nearest, delete, bridge, length, via)


@numba.njit(cache=True)
def _arc_scores(x, mu, lam_pitch, lam_edit):
    T, N = x.shape[0], mu.shape[0]
    emit = np.empty((T, N))
    nearest = np.empty(T, dtype=np.int64)
    delete = np.empty(T)
    for t in range(T):
        best = np.inf
        for s in range(N):
            d = abs(x[t] - mu[s]) % 1200.0
            d = min(d, 1200.0 - d)
            if d < best:
                best = d
                nearest[t] = s
            emit[t, s] = lam_pitch * (-d / PITCH_SCALE) + lam_edit * EDIT_PENALTY
        emit[t, nearest[t]] -= lam_edit * EDIT_PENALTY
        delete[t] = lam_pitch * (-BACKGROUND_DISTANCE / PITCH_SCALE) + lam_edit * EDIT_PENALTY
    return emit, nearest, delete


# traceback op codes
_MATCH, _SUBSTITUTE, _INSERT, _DELETE = 0, 1, 2, 3
_OP_CODES = (OpKind.MATCH, OpKind.SUBSTITUTE, OpKind.INSERT, OpKind.DELETE)


@numba.njit(cache=True)
def _search(emit, nearest, delete, bridge, bridge_len, bridge_via):
    """Viterbi over (time, column); column N is epsilon (nothing emitted yet).

    Returns the best score and the op path as parallel arrays
    ``(code, obs_index, state_rank)``.
    """
    T, N = emit.shape
    eps = N
    score = np.full((T, N + 1), -np.inf)
    back = np.full((T, N + 1), -1, dtype=np.int64)
    hold = np.zeros((T, N + 1), dtype=np.bool_)
    for s in range(N):
        score[0, s] = emit[0, s]
    score[0, eps] = delete[0]
    hold[0, eps] = True
    for t in range(1, T):
        for s in range(N):
            best = -np.inf
            arg = -1
            for p in range(N):
                prev = score[t - 1, p]
                if prev == -np.inf or bridge[p, s] == -np.inf:
                    continue
                v = prev + bridge[p, s] + emit[t, s]
                if v > best:
                    best = v
                    arg = p
            v = score[t - 1, eps] + emit[t, s]
            if v > best:
                best = v
                arg = eps
            v = score[t - 1, s] + delete[t]
            is_hold = False
            if v > best:
                best = v
                arg = s
                is_hold = True
            score[t, s] = best
            back[t, s] = arg
            hold[t, s] = is_hold
        score[t, eps] = score[t - 1, eps] + delete[t]
        back[t, eps] = eps
        hold[t, eps] = True

    col = 0
    for c in range(1, N + 1):
        if score[T - 1, c] > score[T - 1, col]:
            col = c
    total = score[T - 1, col]
    cap = T * (1 + bridge_via.shape[2])
    code = np.empty(cap, dtype=np.int64)
    obs = np.empty(cap, dtype=np.int64)
    state = np.empty(cap, dtype=np.int64)
    n = 0
    for t in range(T - 1, -1, -1):
        prev = back[t, col]
        if hold[t, col]:
            code[n] = _DELETE
            obs[n] = t
            state[n] = -1
            n += 1
        else:
            code[n] = _MATCH if col == nearest[t] else _SUBSTITUTE
            obs[n] = t
            state[n] = col
            n += 1
            if t > 0 and prev != eps:
                for i in range(bridge_len[prev, col] - 1, -1, -1):
                    code[n] = _INSERT
                    obs[n] = -1
                    state[n] = bridge_via[prev, col, i]
                    n += 1
        col = prev
    return total, code[:n][::-1].copy(), obs[:n][::-1].copy(), state[:n][::-1].copy()


class FstResult(NamedTuple):
    states: list
    ops: list
    score: float


def search(lattice: Lattice) -> FstResult:
    total, code, obs, rank = _search(
        lattice.emit, lattice.nearest, lattice.delete,
        lattice.bridge, lattice.bridge_len, lattice.bridge_via,
    )
    active = lattice.raga.active
    ops = [
        EditOp(_OP_CODES[c], None if o < 0 else o, None if r < 0 else active[r])
        for c, o, r in zip(code.tolist(), obs.tolist(), rank.tolist())
    ]
    states = [active[r] for r in rank.tolist() if r >= 0]
    return FstResult(states, ops, float(total))


def fst_correct(seq, raga: RagaSpec, weights: CostWeights = CostWeights()) -> FstResult:
    """Best-scoring edit path; returns emitted Shrutis, the ops and the score."""
    return search(build_lattice(seq, raga, weights))


def path_score(seq, ops: Sequence[EditOp], raga: RagaSpec, weights: CostWeights = CostWeights()) -> float:
    """Re-score an op path arc by arc with :func:`op_cost`."""
    seq = as_pitch_sequence(seq)
    total = 0.0
    prev = None
    for op in ops:
        obs = seq[op.obs_index] if op.obs_index is not None else None
        total += op_cost(op, obs, prev, raga, weights)
        if op.kind is not OpKind.DELETE:
            prev = op.state
    return total


def aligned_states(ops: Sequence[EditOp], length: int, raga: RagaSpec, seq=None) -> list[int]:
    """One Shruti per input position.

    Matched or substituted observations give their state; a deleted
    observation reads as the state held at that point (or the next
    emitted one when nothing has been emitted yet).
    """
    out: list = [None] * length
    held = None
    pending = []
    for op in ops:
        if op.kind is OpKind.INSERT:
            held = op.state
        elif op.kind is OpKind.DELETE:
            if held is None:
                pending.append(op.obs_index)
            else:
                out[op.obs_index] = held
        else:
            held = op.state
            out[op.obs_index] = op.state
            for t in pending:
                out[t] = op.state
            pending = []
    for t in range(length):
        if out[t] is None:
            if seq is None:
                raise InvalidInput("no emitted state to align against")
            out[t] = nearest_among(raga.scale, as_pitch_sequence(seq)[t], raga.active)
    return out


# --- completion -----------------------------------------------------------

def _is_strong_beat(position: int, tala_cycle: int) -> bool:
    step = max(tala_cycle // 4, 1)
    return position % tala_cycle % step == 0


def candidate_score(
    candidate: int,
    context: dict,
    raga: RagaSpec,
    position: int,
    tala_cycle: int = DEFAULT_TALA_CYCLE,
    pakad_bonus: float = DEFAULT_PAKAD_BONUS,
    position_bonus: float = DEFAULT_POSITION_BONUS,
) -> float:
    """Score a candidate for a missing note from its resolved neighbours.

    ``context`` maps relative offsets (-2, -1, +1) to resolved Shrutis; absent
    keys are unresolved. The score adds a base term for raga membership,
    the transition probabilities to and from the neighbours (forbidden
    transitions contribute nothing), a pakad bonus when the candidate
    extends a motif bigram or trigram, and a positional bonus for vadi or
    samvadi on a strong beat. Both bonuses require every available
    neighbour transition to be allowed.
    """
    if candidate not in raga.rank:
        raise InvalidInput(f"Shruti {candidate} is not active in raga {raga.name}")
    score = 1.0
    prev, nxt, prev2 = context.get(-1), context.get(1), context.get(-2)
    grammatical = True
    for a, b in ((prev, candidate), (candidate, nxt)):
        if a is None or b is None:
            continue
        d = direction_between(raga.scale, a, b)
        if raga.allowed(a, b, d):
            score += raga.transition_prob(a, b, d)
        else:
            grammatical = False
    if not grammatical:
        # bonuses never rescue a candidate that breaks the grammar
        return score

    grams = []
    if prev is not None:
        grams.append((prev, candidate))
        if prev2 is not None:
            grams.append((prev2, prev, candidate))
    if nxt is not None:
        grams.append((candidate, nxt))
        if prev is not None:
            grams.append((prev, candidate, nxt))
    if any(_in_motif(g, m) for g in grams for m in raga.pakad):
        score += pakad_bonus

    if candidate in (raga.vadi, raga.samvadi) and _is_strong_beat(position, tala_cycle):
        score += position_bonus
    return score


def _in_motif(gram: tuple, motif: tuple) -> bool:
    k = len(gram)
    return any(motif[i:i + k] == gram for i in range(len(motif) - k + 1))


def fst_complete(
    seq,
    raga: RagaSpec,
    weights: CostWeights = CostWeights(),
    tala_cycle: int = DEFAULT_TALA_CYCLE,
    pakad_bonus: float = DEFAULT_PAKAD_BONUS,
    position_bonus: float = DEFAULT_POSITION_BONUS,
    max_sweeps: int = 3,
) -> list[int]:
    """Fill MISSING notes by context scoring; observed notes are quantized.

    ``weights`` is accepted for interface symmetry with :func:`fst_correct`;
    context scoring does not use the arc blend.
    """
    seq = as_pitch_sequence(seq)
    if seq.all_missing:
        raise InvalidTask("every note is MISSING; nothing to anchor the completion")
    if tala_cycle < 1:
        raise InvalidInput("tala_cycle must be positive")
    out: list = [None if o is MISSING else nearest_among(raga.scale, o, raga.active) for o in seq]
    gaps = [t for t, o in enumerate(seq) if o is MISSING]
    T = len(out)
    for sweep in range(max_sweeps):
        order = gaps if sweep % 2 == 0 else gaps[::-1]
        changed = False
        for t in order:
            context = {}
            for off in (-2, -1, 1):
                if 0 <= t + off < T and out[t + off] is not None:
                    context[off] = out[t + off]
            best, best_score = None, -math.inf
            for cand in raga.active:
                sc = candidate_score(cand, context, raga, t, tala_cycle, pakad_bonus, position_bonus)
                if sc > best_score:
                    best, best_score = cand, sc
            if out[t] != best:
                out[t] = best
                changed = True
        if not changed:
            break
    return out

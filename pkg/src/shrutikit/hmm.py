"""Grammar-constrained Shruti HMM.

States are the raga's active Shrutis. Emissions are Gaussian in (octave
wrapped) cents around each Shruti; transitions are the raga's normalized
edge weights, with separate matrices for ascending and descending steps.
The direction used at step ``t`` is read from the observed pitch gradient.

All recursions run in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .grammar import Direction, RagaSpec
from .scale import MISSING, InvalidInput, InvalidTask, PitchSequence, as_pitch_sequence, circular_distance


@dataclass(frozen=True, eq=False)
class HmmModel:
    raga: RagaSpec
    mu: np.ndarray
    sigma: float
    log_A: np.ndarray  # (2, N, N): [ASCENDING, DESCENDING]
    log_pi: np.ndarray
    log_A_any: np.ndarray  # (N, N): either direction, for steps whose gradient is unobserved

    @property
    def states(self) -> tuple:
        return self.raga.active

    @property
    def n_states(self) -> int:
        return len(self.mu)

    @property
    def A_up(self) -> np.ndarray:
        return np.exp(self.log_A[Direction.ASCENDING])

    @property
    def A_down(self) -> np.ndarray:
        return np.exp(self.log_A[Direction.DESCENDING])

    @property
    def pi(self) -> np.ndarray:
        return np.exp(self.log_pi)


def build_model(raga: RagaSpec, sigma: float = 25.0) -> HmmModel:
    if not sigma > 0:
        raise InvalidInput("sigma must be positive")
    n = raga.n_active
    return HmmModel(
        raga=raga,
        mu=raga.active_cents.copy(),
        sigma=float(sigma),
        log_A=raga.log_transition,
        log_pi=np.full(n, -math.log(n)),
        log_A_any=_either_direction(raga),
    )


def _either_direction(raga: RagaSpec) -> np.ndarray:
    w = np.maximum(raga.weight_matrix(Direction.ASCENDING), raga.weight_matrix(Direction.DESCENDING))
    z = w.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(z > 0, np.log(w / np.where(z > 0, z, 1.0)), -np.inf)
    for i in np.flatnonzero(z[:, 0] == 0):
        out[i, i] = 0.0
    return out


def step_matrices(model: HmmModel, seq: PitchSequence) -> list:
    """Log transition matrix for each step ``t-1 -> t`` (entry 0 unused).

    Steps next to a MISSING note have no observable gradient and use the
    either-direction matrix; the rest follow :func:`infer_direction`.
    """
    dirs = infer_direction(seq)
    mats = [None]
    for t in range(1, len(seq)):
        if seq[t] is MISSING or seq[t - 1] is MISSING:
            mats.append(model.log_A_any)
        else:
            mats.append(model.log_A[dirs[t]])
    return mats


def emission_logprob(model: HmmModel, obs: float, state: int) -> float:
    """Gaussian log-density of ``obs`` for a Shruti given by scale index."""
    k = model.raga.rank.get(state)
    if k is None:
        raise InvalidInput(f"Shruti {state} is not a state of this model")
    d = circular_distance(obs, model.mu[k])
    return -0.5 * math.log(2 * math.pi * model.sigma**2) - d * d / (2 * model.sigma**2)


def emission_matrix(model: HmmModel, seq: PitchSequence) -> np.ndarray:
    """``(T, N)`` emission log-likelihoods; rows for MISSING notes are 0 (density 1)."""
    x = seq.to_array()
    d = circular_distance(np.nan_to_num(x)[:, None], model.mu[None, :])
    e = -0.5 * math.log(2 * math.pi * model.sigma**2) - d * d / (2 * model.sigma**2)
    e[np.isnan(x)] = 0.0
    return e


def infer_direction(seq) -> list[Direction]:
    """Direction per position from the pitch gradient.

    Position 0 ascends by convention, repeated pitches count as ascending,
    and a MISSING note keeps the previous direction. After a gap the
    gradient is taken against the last observed pitch.
    """
    seq = as_pitch_sequence(seq)
    dirs = [Direction.ASCENDING]
    last = seq[0]
    for obs in seq[1:]:
        if obs is MISSING or last is MISSING:
            dirs.append(dirs[-1])
        else:
            dirs.append(Direction.ASCENDING if obs >= last else Direction.DESCENDING)
        if obs is not MISSING:
            last = obs
    return dirs


def viterbi_correct(model: HmmModel, seq) -> tuple[list[int], float]:
    """Most probable Shruti path for a fully observed sequence.

    Returns scale indices and the joint log-likelihood of that path.
    """
    seq = as_pitch_sequence(seq)
    if seq.has_missing:
        raise InvalidTask("sequence has MISSING notes; use completion instead of correction")
    e = emission_matrix(model, seq)
    dirs = infer_direction(seq)
    T, N = e.shape
    back = np.zeros((T, N), dtype=np.intp)
    delta = model.log_pi + e[0]
    for t in range(1, T):
        cand = delta[:, None] + model.log_A[dirs[t]]
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(N)] + e[t]
    path = [int(np.argmax(delta))]
    loglik = float(delta[path[0]])
    for t in range(T - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return [model.states[k] for k in path], loglik


def path_loglik(model: HmmModel, seq, path: list[int]) -> float:
    """Joint log-likelihood of a given state path (scale indices)."""
    seq = as_pitch_sequence(seq)
    e = emission_matrix(model, seq)
    mats = step_matrices(model, seq)
    ranks = [model.raga.rank[s] for s in path]
    total = model.log_pi[ranks[0]] + e[0, ranks[0]]
    for t in range(1, len(ranks)):
        total += mats[t][ranks[t - 1], ranks[t]] + e[t, ranks[t]]
    return float(total)


def forward_backward(model: HmmModel, seq) -> tuple[np.ndarray, float]:
    """Posterior state marginals ``(T, N)`` and the sequence log-likelihood."""
    seq = as_pitch_sequence(seq)
    if seq.all_missing:
        raise InvalidTask("every note is MISSING; nothing to anchor the completion")
    e = emission_matrix(model, seq)
    mats = step_matrices(model, seq)
    T, N = e.shape
    log_alpha = np.empty((T, N))
    log_beta = np.zeros((T, N))
    log_alpha[0] = model.log_pi + e[0]
    for t in range(1, T):
        log_alpha[t] = logsumexp(log_alpha[t - 1][:, None] + mats[t], axis=0) + e[t]
    for t in range(T - 2, -1, -1):
        log_beta[t] = logsumexp(mats[t + 1] + (e[t + 1] + log_beta[t + 1])[None, :], axis=1)
    log_gamma = log_alpha + log_beta
    log_gamma -= logsumexp(log_gamma, axis=1, keepdims=True)
    return np.exp(log_gamma), float(logsumexp(log_alpha[-1]))


def forward_backward_complete(model: HmmModel, seq) -> tuple[list[int], np.ndarray]:
    """Fill every position with its maximum-posterior Shruti.

    Missing notes get a flat emission, so they are inferred from the
    grammar and the observed neighbours alone.
    """
    gamma, _ = forward_backward(model, seq)
    return [model.states[k] for k in np.argmax(gamma, axis=1)], gamma

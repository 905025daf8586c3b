"""Brute-force reference implementations used to check the fast decoders.

Everything here is written from the model definitions directly and shares
no code with the decoders beyond ``op_cost`` (the arc scorer, itself
checked against hand-computed values in test_fst.py).
"""

import itertools
import math

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from shrutikit.fst import EditOp, OpKind, op_cost
from shrutikit.scale import MISSING


def circ(a, b):
    d = abs(a - b) % 1200.0
    return min(d, 1200.0 - d)


def transition_logprob(raga):
    """(2, N, N) from the weight formula, normalized row by row."""
    n = raga.n_active
    out = np.full((2, n, n), -np.inf)
    bigrams = {(a, b) for m in raga.pakad for a, b in zip(m, m[1:])}
    for d, edges in enumerate((raga.ascent_edges, raga.descent_edges)):
        w = np.zeros((n, n))
        for i, a in enumerate(raga.active):
            for j, b in enumerate(raga.active):
                if (a, b) in edges:
                    w[i, j] = math.exp(-raga.alpha * abs(i - j)) * (raga.pakad_bonus_factor if (a, b) in bigrams else 1.0)
        for i in range(n):
            if w[i].sum() == 0:
                out[d, i, i] = 0.0
            else:
                with np.errstate(divide="ignore"):
                    out[d, i] = np.log(w[i] / w[i].sum())
    return out


def either_logprob(raga):
    n = raga.n_active
    w = np.zeros((n, n))
    # an edge allowed in either set keeps its (direction-free) weight
    bigrams = {(a, b) for m in raga.pakad for a, b in zip(m, m[1:])}
    for i, a in enumerate(raga.active):
        for j, b in enumerate(raga.active):
            if (a, b) in raga.ascent_edges or (a, b) in raga.descent_edges:
                w[i, j] = math.exp(-raga.alpha * abs(i - j)) * (raga.pakad_bonus_factor if (a, b) in bigrams else 1.0)
    out = np.full((n, n), -np.inf)
    for i in range(n):
        if w[i].sum() == 0:
            out[i, i] = 0.0
        else:
            with np.errstate(divide="ignore"):
                out[i] = np.log(w[i] / w[i].sum())
    return out


def directions(obs):
    """0 = ascending, 1 = descending, per step t (index 0 unused)."""
    dirs = [0]
    last = obs[0]
    for o in obs[1:]:
        if o is MISSING or last is MISSING:
            dirs.append(dirs[-1])
        else:
            dirs.append(0 if o >= last else 1)
        if o is not MISSING:
            last = o
    return dirs


def _hmm_tables(raga, obs, sigma):
    n = raga.n_active
    mu = [raga.scale.cents[s] for s in raga.active]
    E = np.zeros((len(obs), n))
    for t, o in enumerate(obs):
        if o is not MISSING:
            E[t] = [norm.logpdf(circ(o, m), scale=sigma) for m in mu]
    logA = transition_logprob(raga)
    anyA = either_logprob(raga)
    dirs = directions(obs)
    steps = [None]
    for t in range(1, len(obs)):
        steps.append(anyA if (obs[t] is MISSING or obs[t - 1] is MISSING) else logA[dirs[t]])
    return E, steps


def all_path_scores(raga, obs, sigma=25.0):
    """Joint log-likelihood of every state path, shape (N**T,), plus the paths."""
    n = raga.n_active
    T = len(obs)
    E, steps = _hmm_tables(raga, obs, sigma)
    paths = np.array(list(itertools.product(range(n), repeat=T)), dtype=int)
    score = -math.log(n) + E[0, paths[:, 0]]
    for t in range(1, T):
        score = score + steps[t][paths[:, t - 1], paths[:, t]] + E[t, paths[:, t]]
    return score, paths


def brute_viterbi(raga, obs, sigma=25.0):
    score, paths = all_path_scores(raga, obs, sigma)
    k = int(np.argmax(score))
    return [raga.active[r] for r in paths[k]], float(score[k])


def brute_marginals(raga, obs, sigma=25.0):
    score, paths = all_path_scores(raga, obs, sigma)
    total = logsumexp(score)
    post = np.exp(score - total)
    gamma = np.zeros((len(obs), raga.n_active))
    for t in range(len(obs)):
        np.add.at(gamma[t], paths[:, t], post)
    return gamma, float(total)


def brute_fst(raga, obs, weights, max_inserts=2):
    """Best op-path score by enumeration.

    Every observation is either deleted or emitted as some active state.
    Between two consecutive emissions up to ``max_inserts`` inserted states
    are tried exhaustively. Inserts before the first or after the last
    emission only add negative terms, so they are left out.
    """
    n = raga.n_active
    act = raga.active
    T = len(obs)
    emit = np.empty((T, n))
    for t, o in enumerate(obs):
        for k, s in enumerate(act):
            near = min(act, key=lambda a: (circ(o, raga.scale.cents[a]), a))
            kind = OpKind.MATCH if s == near else OpKind.SUBSTITUTE
            emit[t, k] = op_cost(EditOp(kind, t, s), o, None, raga, weights)
    delete = np.array([op_cost(EditOp(OpKind.DELETE, t, None), o, None, raga, weights) for t, o in enumerate(obs)])

    def ins(s, prev):
        return op_cost(EditOp(OpKind.INSERT, None, s), None, prev, raga, weights)

    # grammar part of arriving at s from prev
    G = np.array([[ins(b, a) - ins(b, None) for b in act] for a in act])
    ins0 = np.array([ins(b, None) for b in act])
    B = G.copy()
    for m in range(1, max_inserts + 1):
        for mids in itertools.product(range(n), repeat=m):
            chain = ins0[mids[0]] + sum(ins0[mids[i]] + G[mids[i - 1], mids[i]] for i in range(1, m))
            for p in range(n):
                B[p] = np.maximum(B[p], G[p, mids[0]] + chain + G[mids[-1]])

    choices = np.array(list(itertools.product(range(n + 1), repeat=T)), dtype=int)  # n == delete
    total = np.zeros(len(choices))
    last = np.full(len(choices), -1)
    for t in range(T):
        c = choices[:, t]
        is_del = c == n
        cc = np.where(is_del, 0, c)
        arc = emit[t, cc] + np.where(last < 0, 0.0, B[np.maximum(last, 0), cc])
        total += np.where(is_del, delete[t], arc)
        last = np.where(is_del, last, c)
    return float(total.max())

"""Aggregation of evaluation records: means, 95% intervals, Cohen's d, ANOVA F."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from ..datagen import make_rng

Z95 = 1.96
METRICS = (
    "shruti_accuracy", "mean_pitch_error", "linear_pitch_error",
    "grammar_compliance", "pakad_recognition", "wall_time",
)


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float
    ci95_halfwidth: float
    n: int


@dataclass
class AggregateStats:
    """Per-group summaries plus between-model comparisons.

    ``groups`` maps a group key (model name by default) to ``{metric: Summary}``;
    ``cohens_d`` maps ``(model_a, model_b)`` to the accuracy effect size and
    ``anova_f`` is the one-way F statistic of accuracy across models.
    """

    groups: dict = field(default_factory=dict)
    cohens_d: dict = field(default_factory=dict)
    anova_f: float = float("nan")
    anova_p: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "groups": {
                "/".join(map(str, k)) if isinstance(k, tuple) else str(k): {
                    m: vars(s) for m, s in v.items()
                }
                for k, v in self.groups.items()
            },
            "cohens_d": {f"{a} vs {b}": d for (a, b), d in self.cohens_d.items()},
            "anova_f": self.anova_f,
            "anova_p": self.anova_p,
        }


def summarize(values: Sequence[float], ci: str = "normal", n_boot: int = 2000, seed: int = 0) -> Summary:
    """Mean, sample std and the 95% half-width (normal approximation or bootstrap)."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two values to summarize")
    mean = float(x.mean())
    std = float(x.std(ddof=1))
    if ci == "normal":
        half = Z95 * std / math.sqrt(x.size)
    elif ci == "bootstrap":
        rng = make_rng(seed)
        means = x[rng.integers(x.size, size=(n_boot, x.size))].mean(axis=1)
        lo, hi = np.percentile(means, [2.5, 97.5])
        half = float(hi - lo) / 2
    else:
        raise ValueError(f"unknown ci method {ci!r}")
    return Summary(mean, std, half, int(x.size))


def pooled_std(a: Sequence[float], b: Sequence[float]) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    na, nb = a.size, b.size
    return math.sqrt(((na - 1) * a.var(ddof=1) + (nb - 1) * b.var(ddof=1)) / (na + nb - 2))


def cohens_d(a: Sequence[float], b: Sequence[float]) -> float:
    diff = float(np.mean(a) - np.mean(b))
    s = pooled_std(a, b)
    if s == 0:
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return diff / s


def anova_f(groups: Sequence[Sequence[float]]) -> tuple[float, float]:
    """One-way ANOVA ``(F, p)``. Identical groups give ``F = 0``."""
    from scipy.stats import f as f_dist

    arrays = [np.asarray(g, float) for g in groups]
    k = len(arrays)
    n = sum(a.size for a in arrays)
    if k < 2 or n <= k:
        raise ValueError("need at least two groups and more observations than groups")
    grand = np.concatenate(arrays).mean()
    ss_between = sum(a.size * (a.mean() - grand) ** 2 for a in arrays)
    ss_within = sum(((a - a.mean()) ** 2).sum() for a in arrays)
    if ss_between <= 1e-24 * max(1.0, ss_within):
        return 0.0, 1.0
    if ss_within == 0:
        return math.inf, 0.0
    f = (ss_between / (k - 1)) / (ss_within / (n - k))
    return float(f), float(f_dist.sf(f, k - 1, n - k))


def aggregate_stats(
    records: Iterable,
    by: Sequence[str] = ("model",),
    metrics: Sequence[str] = METRICS,
    ci: str = "normal",
    compare_metric: str = "shruti_accuracy",
    model_order: Optional[Sequence[str]] = None,
) -> AggregateStats:
    """Group records and summarize each metric.

    Cohen's d and the ANOVA F compare models on ``compare_metric``.
    """
    records = list(records)
    grouped: dict = {}
    for r in records:
        key = tuple(getattr(r, b) for b in by)
        grouped.setdefault(key[0] if len(key) == 1 else key, []).append(r)
    out = AggregateStats()
    for key, rs in grouped.items():
        if len(rs) < 2:
            raise ValueError(f"group {key!r} has fewer than two records")
        out.groups[key] = {m: summarize([getattr(r, m) for r in rs], ci=ci) for m in metrics}

    by_model: dict = {}
    for r in records:
        by_model.setdefault(r.model, []).append(getattr(r, compare_metric))
    names = list(model_order) if model_order else list(by_model)
    names = [m for m in names if m in by_model]
    for a, b in combinations(names, 2):
        if len(by_model[a]) >= 2 and len(by_model[b]) >= 2:
            out.cohens_d[(a, b)] = cohens_d(by_model[a], by_model[b])
    if len(names) >= 2:
        out.anova_f, out.anova_p = anova_f([by_model[m] for m in names])
    return out

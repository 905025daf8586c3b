"""Benchmark orchestration: datagen -> model -> metrics over a config grid.

A grid cell is one (raga, rate, noise, pattern) combination. Each cell
generates ``n_runs`` ground-truth sequences (lengths cycle through
``lengths``) and runs every model on the same corrupted input, so models
are compared on identical data. Seeds are derived from the config seed and
the cell coordinates, never from execution order, which keeps results
identical whether cells run serially or in parallel.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from itertools import product
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import yaml

from ..datagen import (
    CorruptionConfig,
    InvalidConfig,
    MissingConfig,
    MissingPattern,
    apply_missing,
    corrupt,
    derive_seed,
    generate_sequence,
)
from ..fst import CostWeights, aligned_states, fst_complete, fst_correct
from ..grammar import grammar_compliance, pakad_recognition, resolve_raga
from ..hmm import build_model, forward_backward_complete, viterbi_correct
from .baselines import nearest_cent_baseline, random_baseline
from .metrics import avg_pitch_error, shruti_accuracy
from .stats import AggregateStats, aggregate_stats

CORRECTION = "correction"
COMPLETION = "completion"
MODELS = {CORRECTION: ("fst", "hmm", "nearest", "random"), COMPLETION: ("fst", "hmm")}
DISPLAY = {"fst": "FST", "hmm": "HMM", "nearest": "NearestCent", "random": "Random"}


@dataclass(frozen=True)
class EvalRecord:
    """Scores of one model on one generated sequence.

    For completion every metric except compliance and pakad is computed
    at the originally-MISSING positions only.
    """

    model: str
    raga: str
    task: str
    rate: float
    shruti_accuracy: float
    mean_pitch_error: float
    linear_pitch_error: float
    grammar_compliance: float
    pakad_recognition: float
    wall_time: float  # ms, decode call only
    length: int
    run: int
    seed: int
    noise_cents: float = 0.0
    pattern: Optional[str] = None

    def __post_init__(self):
        for name in ("shruti_accuracy", "grammar_compliance", "pakad_recognition"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name in ("mean_pitch_error", "linear_pitch_error", "wall_time"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def key(self) -> tuple:
        return (self.task, self.raga, self.rate, self.noise_cents, self.pattern or "", self.run, self.model)

    def to_json(self, timing: bool = False) -> str:
        d = asdict(self)
        if not timing:
            del d["wall_time"]
        return json.dumps(d, sort_keys=True)


@dataclass(frozen=True)
class RunFailure:
    model: str
    raga: str
    rate: float
    run: int
    error: str


@dataclass(frozen=True)
class BenchmarkConfig:
    name: str = "custom"
    task: str = CORRECTION
    models: tuple = ("fst", "hmm", "nearest", "random")
    ragas: tuple = ("Yaman",)
    rates: tuple = (0.4,)
    noise_cents: tuple = (0.0,)
    noise_rate: float = 1.0
    patterns: tuple = ("random",)
    lengths: tuple = (30, 50, 100)
    n_runs: int = 10
    seed: int = 0
    sigma: float = 25.0
    lambda_pitch: float = 0.6
    lambda_grammar: float = 0.3
    lambda_edit: float = 0.1
    n_jobs: int = 1

    def __post_init__(self):
        for name in ("models", "ragas", "rates", "noise_cents", "patterns", "lengths"):
            value = getattr(self, name)
            if isinstance(value, (str, int, float)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        if self.task not in MODELS:
            raise InvalidConfig(f"task must be one of {sorted(MODELS)}, got {self.task!r}")
        bad = [m for m in self.models if m not in MODELS[self.task]]
        if bad:
            raise InvalidConfig(f"unknown {self.task} model(s) {bad}; choose from {MODELS[self.task]}")
        if not (self.models and self.ragas and self.rates and self.lengths and self.n_runs > 0):
            raise InvalidConfig("empty benchmark grid")
        if any(not 0 <= r < 1 for r in self.rates):
            raise InvalidConfig("rates must lie in [0, 1)")
        if any(n < 0 for n in self.noise_cents):
            raise InvalidConfig("noise_cents must be >= 0")
        if any(L < 2 for L in self.lengths):
            raise InvalidConfig("lengths must be >= 2")
        for p in self.patterns:
            MissingPattern(p)
        CostWeights(self.lambda_pitch, self.lambda_grammar, self.lambda_edit)

    @property
    def weights(self) -> CostWeights:
        return CostWeights(self.lambda_pitch, self.lambda_grammar, self.lambda_edit)

    def cells(self) -> list[tuple]:
        patterns = self.patterns if self.task == COMPLETION else (None,)
        noises = self.noise_cents if self.task == CORRECTION else (0.0,)
        return list(product(self.ragas, self.rates, noises, patterns))

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchmarkConfig":
        if not isinstance(doc, dict):
            raise InvalidConfig("benchmark config must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known - {"description"}
        if unknown:
            raise InvalidConfig(f"unknown benchmark config keys: {sorted(unknown)}")
        try:
            return cls(**{k: v for k, v in doc.items() if k in known})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidConfig):
                raise
            raise InvalidConfig(str(exc)) from exc


def load_config(path_or_preset: str) -> BenchmarkConfig:
    """Read a YAML config file, or a shipped preset by name (``table1``...)."""
    path = Path(path_or_preset)
    if path.is_file():
        text = path.read_text()
    else:
        res = resources.files("shrutikit").joinpath("presets", f"{path_or_preset}.yaml")
        if not res.is_file():
            raise InvalidConfig(f"no config file or preset named {path_or_preset!r}")
        text = res.read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidConfig(f"malformed benchmark config: {exc}") from exc
    return BenchmarkConfig.from_dict(doc)


def preset_names() -> list[str]:
    files = resources.files("shrutikit").joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


@dataclass
class BenchmarkResult:
    config: BenchmarkConfig
    records: list
    failures: list = field(default_factory=list)
    stats: Optional[AggregateStats] = None

    def group_keys(self) -> tuple:
        """Record fields that vary in this grid, in addition to the model."""
        keys = ["model"]
        c = self.config
        if len(c.ragas) > 1:
            keys.append("raga")
        if len(c.rates) > 1:
            keys.append("rate")
        if c.task == CORRECTION and len(c.noise_cents) > 1:
            keys.append("noise_cents")
        if c.task == COMPLETION:
            keys.append("pattern")
        return tuple(keys)


def _timed(fn: Callable):
    t0 = time.perf_counter()
    out = fn()
    return out, (time.perf_counter() - t0) * 1e3


def _run_cell(cfg: BenchmarkConfig, cell: tuple) -> tuple[list, list]:
    raga_name, rate, noise, pattern = cell
    raga = resolve_raga(raga_name)
    hmm = build_model(raga, cfg.sigma) if "hmm" in cfg.models else None
    weights = cfg.weights
    if "fst" in cfg.models:
        # compile the search kernels before anything is timed
        fst_correct([0.0, 0.0], raga, weights)
    records, failures = [], []
    for run in range(cfg.n_runs):
        length = cfg.lengths[run % len(cfg.lengths)]
        coords = (cfg.seed, cfg.task, raga.name, repr(rate), repr(noise), pattern or "", run)
        seed = derive_seed(*coords, "truth")
        truth = generate_sequence(raga, length, seed)
        if cfg.task == CORRECTION:
            obs = corrupt(truth, CorruptionConfig(rate, noise, derive_seed(*coords, "corrupt"), cfg.noise_rate))
            mask = None
        else:
            mcfg = MissingConfig(rate, pattern, derive_seed(*coords, "missing"))
            obs = apply_missing(truth, mcfg)
            mask = obs.missing_mask()
            if not mask.any():
                failures.append(RunFailure("*", raga.name, rate, run, "no MISSING positions to score"))
                continue
        for model in cfg.models:
            try:
                if cfg.task == CORRECTION:
                    if model == "fst":
                        res, ms = _timed(lambda: fst_correct(obs, raga, weights))
                        pred = aligned_states(res.ops, length, raga, obs)
                        emitted = res.states
                    elif model == "hmm":
                        (pred, _), ms = _timed(lambda: viterbi_correct(hmm, obs))
                        emitted = pred
                    elif model == "nearest":
                        pred, ms = _timed(lambda: nearest_cent_baseline(obs, raga.scale))
                        emitted = pred
                    else:
                        rseed = derive_seed(*coords, "random")
                        pred, ms = _timed(lambda: random_baseline(obs, raga, rseed))
                        emitted = pred
                else:
                    if model == "fst":
                        pred, ms = _timed(lambda: fst_complete(obs, raga, weights))
                    else:
                        (pred, _), ms = _timed(lambda: forward_backward_complete(hmm, obs))
                    emitted = pred
                records.append(EvalRecord(
                    model=model,
                    raga=raga.name,
                    task=cfg.task,
                    rate=float(rate),
                    shruti_accuracy=shruti_accuracy(pred, truth, mask),
                    mean_pitch_error=avg_pitch_error(pred, truth, raga.scale, mask),
                    linear_pitch_error=avg_pitch_error(pred, truth, raga.scale, mask, circular=False),
                    grammar_compliance=grammar_compliance(emitted, raga),
                    pakad_recognition=pakad_recognition(emitted, raga),
                    wall_time=ms,
                    length=length,
                    run=run,
                    seed=seed,
                    noise_cents=float(noise),
                    pattern=pattern,
                ))
            except Exception as exc:  # one bad run must not sink the sweep
                failures.append(RunFailure(model, raga.name, rate, run, f"{type(exc).__name__}: {exc}"))
    return records, failures


def run_benchmark(cfg: BenchmarkConfig, n_jobs: Optional[int] = None, aggregate: bool = True) -> BenchmarkResult:
    """Run every cell of ``cfg`` and (optionally) aggregate the records."""
    n_jobs = cfg.n_jobs if n_jobs is None else n_jobs
    cells = cfg.cells()
    if n_jobs == 1:
        parts = [_run_cell(cfg, c) for c in cells]
    else:
        from joblib import Parallel, delayed

        parts = Parallel(n_jobs=n_jobs)(delayed(_run_cell)(cfg, c) for c in cells)
    records = [r for recs, _ in parts for r in recs]
    failures = [f for _, fails in parts for f in fails]
    records.sort(key=lambda r: (r.key()[:-1], cfg.models.index(r.model)))
    result = BenchmarkResult(cfg, records, failures)
    if aggregate and records:
        try:
            result.stats = aggregate_stats(records, by=result.group_keys(), model_order=cfg.models)
        except ValueError:
            # too few runs per group for a spread; keep the raw records
            result.stats = None
    return result


# --- output ---------------------------------------------------------------

def records_jsonl(records: Sequence[EvalRecord]) -> str:
    """Records as JSON lines without wall time, so equal runs give equal bytes."""
    return "".join(r.to_json() + "\n" for r in records)


def summary_table(result: BenchmarkResult) -> str:
    """Plain-text table with one row per group (model, or pattern x model)."""
    stats = result.stats
    if stats is None:
        return "(not enough records to aggregate)\n"
    keys = result.group_keys()
    head = [k.replace("_", " ").title() for k in keys[1:]] + [
        "Model", "Shruti Acc. (%)", "Mean Error (cents)", "Linear Error (cents)",
        "Compliance", "Pakad", "Time (ms)",
    ]
    rows = []
    for gkey, summ in stats.groups.items():
        gkey = gkey if isinstance(gkey, tuple) else (gkey,)
        acc = summ["shruti_accuracy"]
        rows.append([str(v) for v in gkey[1:]] + [
            DISPLAY.get(gkey[0], gkey[0]),
            f"{100 * acc.mean:.1f} ± {100 * acc.ci95_halfwidth:.1f}",
            f"{summ['mean_pitch_error'].mean:.1f}",
            f"{summ['linear_pitch_error'].mean:.1f}",
            f"{summ['grammar_compliance'].mean:.3f}",
            f"{summ['pakad_recognition'].mean:.3f}",
            f"{summ['wall_time'].mean:.3f}",
        ])
    if len(keys) > 1:
        rows.sort(key=lambda r: r[: len(keys) - 1])
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(head)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [f"# {result.config.name} ({result.config.task}, n={result.config.n_runs} per cell)", line(head),
           line(["-" * w for w in widths])]
    out += [line(r) for r in rows]
    if stats.cohens_d:
        out.append("")
        out.append(f"one-way ANOVA F (accuracy across models) = {stats.anova_f:.2f}, p = {stats.anova_p:.3g}")
        for (a, b), d in stats.cohens_d.items():
            out.append(f"Cohen's d {DISPLAY.get(a, a)} vs {DISPLAY.get(b, b)} = {d:.2f}")
    if result.failures:
        out.append("")
        out.append(f"{len(result.failures)} run(s) failed; see failures.jsonl")
    return "\n".join(out) + "\n"


def robustness_csv(result: BenchmarkResult) -> str:
    """Mean accuracy per (model, raga, rate, noise, pattern) cell."""
    cells: dict = {}
    for r in result.records:
        cells.setdefault((r.model, r.raga, r.rate, r.noise_cents, r.pattern or ""), []).append(r)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "raga", "rate", "noise_cents", "pattern", "n", "accuracy", "ci95", "mean_pitch_error"])
    for key in sorted(cells):
        acc = np.array([r.shruti_accuracy for r in cells[key]])
        err = np.mean([r.mean_pitch_error for r in cells[key]])
        ci = 1.96 * acc.std(ddof=1) / math.sqrt(acc.size) if acc.size > 1 else 0.0
        w.writerow([*key[:2], f"{key[2]:g}", f"{key[3]:g}", key[4], acc.size, f"{acc.mean():.6f}", f"{ci:.6f}", f"{err:.4f}"])
    return buf.getvalue()


def write_outputs(result: BenchmarkResult, outdir) -> dict:
    """Write records, timings, failures, summary and CSV; return the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "records": outdir / "records.jsonl",
        "timings": outdir / "timings.jsonl",
        "summary": outdir / "summary.txt",
        "stats": outdir / "stats.json",
        "robustness": outdir / "robustness.csv",
        "failures": outdir / "failures.jsonl",
    }
    paths["records"].write_text(records_jsonl(result.records))
    paths["timings"].write_text("".join(
        json.dumps({"key": list(r.key()), "wall_time": r.wall_time}) + "\n" for r in result.records))
    paths["summary"].write_text(summary_table(result))
    paths["stats"].write_text(json.dumps(result.stats.to_dict() if result.stats else None, indent=2, sort_keys=True) + "\n")
    paths["robustness"].write_text(robustness_csv(result))
    paths["failures"].write_text("".join(json.dumps(asdict(f), sort_keys=True) + "\n" for f in result.failures))
    return paths

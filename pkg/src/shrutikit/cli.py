"""Command-line entry point.

Exit codes: 0 success, 2 usage or configuration error (bad flags, unparseable
files, unknown raga, bad benchmark config), 3 the input is valid but does
not suit the task (MISSING notes given to a correction engine, nothing
observed for a completion, MISSING notes given to the synthesizer).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .datagen import (
    CorruptionConfig,
    InvalidConfig,
    MissingConfig,
    MissingPattern,
    apply_missing,
    corrupt,
    derive_seed,
    generate_sequence,
)
from .evalkit.baselines import nearest_cent_baseline, random_baseline
from .evalkit.bench import load_config, run_benchmark, summary_table, write_outputs
from .evalkit.metrics import avg_pitch_error, shruti_accuracy
from .fst import CostWeights, aligned_states, fst_complete, fst_correct
from .grammar import RagaConfigError, RagaSpec, default_raga, grammar_compliance, pakad_recognition
from .hmm import build_model, forward_backward_complete, viterbi_correct
from .io import ParseError, SequenceFile, read_sequence, synthesize, write_sequence
from .scale import InvalidInput, InvalidTask, PitchSequence, nearest_among, nearest_shruti

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TASK = 3
SUPPORTED_MAX_RATE = 0.5


class UsageError(Exception):
    pass


def _raga(name: str, sf: Optional[SequenceFile] = None) -> RagaSpec:
    if name is None:
        name = sf.raga if sf is not None else None
    if not name:
        raise UsageError("no raga given (use --raga or a 'raga' header line)")
    try:
        return default_raga(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _load(path: str, tonic_hz: Optional[float]) -> tuple[SequenceFile, PitchSequence]:
    try:
        sf = read_sequence(path)
    except FileNotFoundError:
        raise UsageError(f"{path}: no such file") from None
    if tonic_hz is not None:
        sf = SequenceFile(sf.values, tonic_hz, sf.raga, sf.reference_hz)
    return sf, sf.observations()


def _weights(args) -> CostWeights:
    return CostWeights(args.lambda_pitch, args.lambda_grammar, args.lambda_edit)


def _truth_ids(path: str, tonic_hz: Optional[float], scale) -> list[int]:
    _, truth = _load(path, tonic_hz)
    if truth.has_missing:
        raise UsageError("--truth file must not contain MISSING")
    return [nearest_shruti(scale, v)[0] for v in truth]


def _write_result(args, sf, raga: RagaSpec, states: list[int], report: dict, mask=None, emitted=None) -> None:
    """Write the output file and its ``.report.json`` sidecar.

    Compliance and pakad are measured on ``emitted`` when the engine's own
    state path differs from the per-position alignment (FST inserts).
    """
    emitted = states if emitted is None else emitted
    out = SequenceFile(tuple(raga.scale.cents[s] for s in states), sf.tonic_hz, raga.name)
    write_sequence(args.out, out)
    report.update({
        "raga": raga.name,
        "engine": args.engine,
        "n_notes": len(states),
        "states": [raga.label(s) for s in states],
        "grammar_compliance": grammar_compliance(emitted, raga),
        "pakad_recognition": pakad_recognition(emitted, raga),
    })
    if args.truth:
        truth = _truth_ids(args.truth, args.tonic_hz, raga.scale)
        if len(truth) != len(states):
            raise UsageError(f"--truth has {len(truth)} notes, output has {len(states)}")
        if mask is not None and not any(mask):
            mask = None
        report["metrics"] = {
            "shruti_accuracy": shruti_accuracy(states, truth, mask),
            "mean_pitch_error": avg_pitch_error(states, truth, raga.scale, mask),
            "scored_positions": "missing" if mask is not None else "all",
        }
    Path(str(args.out) + ".report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def cmd_correct(args) -> int:
    sf, seq = _load(args.input, args.tonic_hz)
    raga = _raga(args.raga, sf)
    if seq.has_missing:
        print("error: input has MISSING notes; use complete", file=sys.stderr)
        return EXIT_TASK
    report: dict = {"command": "correct"}
    emitted = None
    if args.engine == "fst":
        res = fst_correct(seq, raga, _weights(args))
        states = aligned_states(res.ops, len(seq), raga, seq)
        report["score"] = res.score
        report["ops"] = [
            [op.kind.value, op.obs_index, None if op.state is None else raga.label(op.state)] for op in res.ops
        ]
        emitted = res.states
        report["emitted"] = [raga.label(s) for s in emitted]
    elif args.engine == "hmm":
        states, loglik = viterbi_correct(build_model(raga, args.sigma), seq)
        report["loglik"] = loglik
    elif args.engine == "nearest":
        states = nearest_cent_baseline(seq, raga.scale)
    else:
        states = random_baseline(seq, raga, args.seed)
        report["seed"] = args.seed
    _write_result(args, sf, raga, states, report, emitted=emitted)
    return EXIT_OK


def cmd_complete(args) -> int:
    sf, seq = _load(args.input, args.tonic_hz)
    raga = _raga(args.raga, sf)
    if seq.all_missing:
        print("error: every note is MISSING; nothing to complete from", file=sys.stderr)
        return EXIT_TASK
    report: dict = {"command": "complete"}
    mask = seq.missing_mask().tolist()
    if not any(mask):
        print("warning: no MISSING notes; snapping observed notes to the raga", file=sys.stderr)
        states = [nearest_among(raga.scale, v, raga.active) for v in seq]
    elif args.engine == "hmm":
        states, gamma = forward_backward_complete(build_model(raga, args.sigma), seq)
        report["posterior_max"] = [round(float(g.max()), 6) for g in gamma]
    else:
        states = fst_complete(seq, raga, _weights(args))
    report["filled_positions"] = [t for t, m in enumerate(mask) if m]
    _write_result(args, sf, raga, states, report, mask)
    return EXIT_OK


def cmd_generate(args) -> int:
    raga = _raga(args.raga)
    for flag, rate in (("--corruption", args.corruption), ("--missing", args.missing)):
        if not 0 <= rate < 1:
            raise UsageError(f"{flag} must be in [0, 1)")
        if rate > SUPPORTED_MAX_RATE and not args.force:
            raise UsageError(f"{flag} {rate} is outside the supported range [0, {SUPPORTED_MAX_RATE}]; pass --force")
    if args.length < 2 or args.count < 1:
        raise UsageError("--length must be >= 2 and --count >= 1")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tonic = args.tonic_hz if args.tonic_hz is not None else raga.scale.tonic_hz
    manifest = [
        "# shruti sequence set",
        f"raga: {raga.name}",
        f"length: {args.length}",
        f"count: {args.count}",
        f"seed: {args.seed}",
        f"corruption: {args.corruption}",
        f"noise_cents: {args.noise_cents}",
        f"missing: {args.missing}",
        f"pattern: {args.pattern}",
        f"tonic_hz: {tonic}",
        "files:",
    ]
    for i in range(args.count):
        seed = derive_seed(args.seed, raga.name, i)
        truth = generate_sequence(raga, args.length, seed)
        obs = corrupt(truth, CorruptionConfig(args.corruption, args.noise_cents, derive_seed(seed, "corrupt")))
        if args.missing > 0:
            m = apply_missing(truth, MissingConfig(args.missing, args.pattern, derive_seed(seed, "missing"))).missing_mask()
            obs = PitchSequence(None if gap else v for v, gap in zip(obs, m))
        name = f"seq_{i:04d}"
        write_sequence(outdir / f"{name}.txt", SequenceFile(tuple(obs), tonic, raga.name))
        write_sequence(outdir / f"{name}.truth.txt", SequenceFile.from_sequence(PitchSequence.from_ids(truth, raga.scale), tonic, raga.name))
        manifest.append(f"  - {name}.txt {name}.truth.txt seed={seed}")
    (outdir / "manifest.txt").write_text("\n".join(manifest) + "\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    sf, seq = _load(args.input, args.tonic_hz)
    if seq.has_missing:
        print("error: input has MISSING notes; complete it before synthesizing", file=sys.stderr)
        return EXIT_TASK
    frames = synthesize(seq, args.out, sf.tonic_hz, fade=not args.no_fade)
    print(f"wrote {args.out}: {frames} frames, {frames / 44100:.2f} s")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    result = run_benchmark(cfg, n_jobs=args.n_jobs)
    if not result.records:
        raise UsageError("benchmark produced no records")
    paths = write_outputs(result, args.outdir)
    sys.stdout.write(summary_table(result))
    print(f"records: {paths['records']}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, engines: tuple, default: str) -> None:
    p.add_argument("input", help="sequence file")
    p.add_argument("-o", "--out", required=True, help="output sequence file")
    p.add_argument("--raga", help="raga name (default: the file's raga header)")
    p.add_argument("--engine", choices=engines, default=default)
    p.add_argument("--tonic-hz", type=float, help="override the file's tonic")
    p.add_argument("--sigma", type=float, default=25.0, help="HMM emission spread in cents")
    p.add_argument("--lambda-pitch", type=float, default=0.6)
    p.add_argument("--lambda-grammar", type=float, default=0.3)
    p.add_argument("--lambda-edit", type=float, default=0.1)
    p.add_argument("--truth", help="ground-truth sequence file; adds metrics to the report")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shrutikit", description="Raga-aware Shruti correction and completion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correct", help="snap every note to a grammatical Shruti sequence")
    _add_common(p, ("fst", "hmm", "nearest", "random"), "fst")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("complete", help="fill MISSING notes")
    _add_common(p, ("fst", "hmm"), "hmm")
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("generate", help="write synthetic sequences and a manifest")
    p.add_argument("--raga", required=True)
    p.add_argument("--length", type=int, default=50)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--corruption", type=float, default=0.0, help="substitution rate")
    p.add_argument("--noise-cents", type=float, default=0.0)
    p.add_argument("--missing", type=float, default=0.0, help="missing rate")
    p.add_argument("--pattern", choices=[m.value for m in MissingPattern], default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tonic-hz", type=float)
    p.add_argument("--outdir", required=True)
    p.add_argument("--force", action="store_true", help=f"allow rates above {SUPPORTED_MAX_RATE}")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("synth", help="render a sequence as a 44.1 kHz stereo WAV")
    p.add_argument("input")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--tonic-hz", type=float)
    p.add_argument("--no-fade", action="store_true", help="butt-join notes without the 5 ms ramps")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="run a benchmark config or shipped preset")
    p.add_argument("config", help="YAML file or preset name (table1, table2, robustness, noise)")
    p.add_argument("--outdir", default="bench_out")
    p.add_argument("--n-jobs", type=int, default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidTask as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TASK
    except (UsageError, ParseError, InvalidConfig, RagaConfigError, InvalidInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

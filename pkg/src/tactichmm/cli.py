"""Command-line interface.

Exit codes: 0 success, 1 runtime or model error, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict

from . import __version__, ingest, modelfile, report, selection
from .errors import TacticHMMError
from .hmm import train, viterbi
from .model import ActionAlphabet, TrainConfig
from .simulate import PLANTED_NOTES, PlantedSpec, paper_planted_model, sample

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _common(include_train=True):
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--format", choices=ingest.FORMATS, default=None, help="log format (default: from extension)")
    p.add_argument("--alphabet", default=None, help="comma separated action list, e.g. Q,V,S,W,T")
    p.add_argument("--unknown", choices=ingest.UNKNOWN_MODES, default="strict")
    if include_train:
        p.add_argument("--restarts", type=int, default=10)
        p.add_argument("--max-iters", type=int, default=500)
        p.add_argument("--tol", type=float, default=1e-6)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tactichmm", description="Discover search tactics in session logs with HMMs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    p = sub.add_parser("train", parents=[common], help="fit an HMM with a fixed number of tactics")
    p.add_argument("log")
    p.add_argument("-M", "--states", type=int, required=True)
    p.add_argument("-o", "--out", required=True, help="model file to write")

    p = sub.add_parser("select", parents=[common], help="BIC sweep over the number of tactics")
    p.add_argument("log")
    p.add_argument("--m-range", default="1..8", help="inclusive range such as 2..8")
    p.add_argument("--sample-size-mode", choices=selection.SAMPLE_SIZE_MODES, default="events")
    p.add_argument("--json", dest="json_out", default=None, help="write the BIC curve as JSON")
    p.add_argument("--table", default=None, help="write the two-column (M, BIC) table")

    p = sub.add_parser("decode", parents=[_common(False)], help="Viterbi tactic path per session (JSONL)")
    p.add_argument("model")
    p.add_argument("log")
    p.add_argument("-o", "--out", default=None, help="output file (default stdout)")

    p = sub.add_parser("simulate", help="sample a synthetic log from a planted model")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--paper-model", action="store_true", help="use the built-in five-tactic model")
    src.add_argument("--model", help="model file to sample from")
    p.add_argument("--n", type=int, default=200, help="number of sessions")
    p.add_argument("--len", type=int, default=100, help="fixed session length")
    p.add_argument("--len-range", type=int, nargs=2, metavar=("LOW", "HIGH"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True, help="CSV log to write")
    p.add_argument("--sidecar", default=None, help="JSON with planted model and hidden paths")

    p = sub.add_parser("report", help="emission table, transition heatmap and dominant path")
    p.add_argument("model")
    p.add_argument("--threshold", type=float, default=report.DEFAULT_THRESHOLD)
    p.add_argument("--heatmap", default=None, help="SVG heatmap path")
    p.add_argument("--json", dest="json_out", default=None)
    p.add_argument("--text", default=None, help="also write the text report here")

    p = sub.add_parser("validate", help="check a model file against the schema")
    p.add_argument("model")
    return parser


def _config(args) -> TrainConfig:
    try:
        return TrainConfig(restarts=args.restarts, max_iters=args.max_iters, tol=args.tol, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _corpus(args):
    alphabet = ActionAlphabet.parse(args.alphabet) if args.alphabet else None
    return ingest.load_corpus(args.log, args.format, alphabet, args.unknown)


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_train(args):
    config = _config(args)
    if args.states < 1:
        raise UsageError("--states must be >= 1")
    corpus = _corpus(args)
    fit = train(corpus, args.states, config)
    provenance = {
        "command": "train",
        "config": asdict(config),
        "corpus_sha256": modelfile.corpus_digest(corpus),
        "n_sequences": len(corpus),
        "total_events": corpus.total_events,
        "log_likelihood": fit.log_likelihood,
        "iterations": fit.n_iter,
    }
    modelfile.save(fit.model, args.out, provenance)
    print(f"log_likelihood = {fit.log_likelihood:.6f}")
    print(f"iterations = {fit.n_iter}")
    return EXIT_OK


def cmd_select(args):
    config = _config(args)
    try:
        m_range = selection.parse_range(args.m_range)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    corpus = _corpus(args)
    curve = selection.sweep(corpus, m_range, config, args.sample_size_mode)
    print(f"{'M':>3} {'log_likelihood':>16} {'NP':>5} {'S':>7} {'BIC':>14}")
    for p in curve.points:
        print(f"{p.M:>3} {p.log_likelihood:>16.4f} {p.n_params:>5} {p.sample_size:>7} {p.bic:>14.4f}")
    print(f"best_M = {curve.best_M}")
    if args.json_out:
        _write(args.json_out, curve.to_json())
    if args.table:
        _write(args.table, curve.as_table())
    return EXIT_OK


def cmd_decode(args):
    model, _ = modelfile.load(args.model)
    events = ingest.read_log(args.log, args.format)
    corpus = ingest.encode(events, model.alphabet, args.unknown)
    lines = []
    for seq in corpus.sequences:
        path, logp = viterbi(model, seq)
        rec = {
            "session_id": seq.session_id,
            "actions": model.alphabet.decode(seq.observations),
            "tactics": [int(i) for i in path],
            "log_prob": logp,
        }
        lines.append(json.dumps(rec))
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_simulate(args):
    if args.paper_model:
        model, notes = paper_planted_model(), PLANTED_NOTES
    else:
        model, notes = modelfile.load(args.model)[0], {}
    length = tuple(args.len_range) if args.len_range else args.len
    try:
        spec = PlantedSpec(model, args.n, length, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    corpus, paths = sample(spec)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        ingest.write_csv(corpus, fh)
    if args.sidecar:
        sidecar = {
            "model": json.loads(modelfile.dumps(model)),
            "notes": notes,
            "seed": args.seed,
            "n_sequences": args.n,
            "length": list(length) if isinstance(length, tuple) else length,
            "hidden_paths": {s.session_id: [int(x) for x in p] for s, p in zip(corpus.sequences, paths)},
        }
        _write(args.sidecar, json.dumps(sidecar, indent=1) + "\n")
    print(f"wrote {len(corpus)} sessions, {corpus.total_events} events to {args.out}")
    return EXIT_OK


def cmd_report(args):
    try:
        report._check_threshold(args.threshold)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    model, _ = modelfile.load(args.model)
    rep = report.build_report(model, args.threshold)
    text = rep.to_text()
    sys.stdout.write(text)
    if args.text:
        _write(args.text, text)
    if args.json_out:
        _write(args.json_out, rep.to_json())
    if args.heatmap:
        report.render_heatmap(model.transition, args.heatmap, "svg")
    return EXIT_OK


def cmd_validate(args):
    model, _ = modelfile.load(args.model)
    print(f"{args.model}: ok (M={model.n_states}, alphabet={','.join(model.alphabet.symbols)})")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "select": cmd_select,
    "decode": cmd_decode,
    "simulate": cmd_simulate,
    "report": cmd_report,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"tactichmm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"tactichmm: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"tactichmm: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TacticHMMError as exc:
        print(f"tactichmm {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

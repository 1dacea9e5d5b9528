"""Command-line interface.

Subcommands: group, sot-gen, score, count-speakers, simulate. Reports and
data files are byte-deterministic for fixed inputs and flags; warnings go
to stderr, never into reports. Exit code 0 iff no errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .core import DEFAULT_SC_SYMBOL, MtasError, validate_session
from .grouping import OverlapPolicy, build_groups, group_record, parse_groups_jsonl
from .ingest import (
    NormalizationConfig,
    dumps_jsonl,
    parse_hypothesis_jsonl,
    parse_session_jsonl,
    parse_stm,
)
from .metrics import confusion
from .mixsim import (
    DEFAULT_DELAY_MAX,
    DEFAULT_DELAY_MIN,
    parse_manifest_jsonl,
    run_simulation,
    write_simulation_outputs,
)
from .report import (
    build_report,
    render_confusion_csv,
    render_confusion_json,
    render_confusion_md,
    render_report_csv,
    render_report_json,
    render_report_md,
)
from .sot import estimate_speaker_count, parse_reference_jsonl, reference_record


def _default_sc_token() -> str:
    return os.environ.get("MTAS_SC_TOKEN", DEFAULT_SC_SYMBOL)


def _add_sc_token(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--sc-token",
        default=_default_sc_token(),
        help="speaker-change symbol (default '$'; env MTAS_SC_TOKEN overrides the default)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtas",
        description="Multi-talker transcript grouping, SOT generation, scoring, and mixture simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_group = sub.add_parser("group", help="partition sessions into utterance groups")
    p_group.add_argument("--ref", required=True, help="session JSONL or STM file")
    p_group.add_argument("--out", required=True, help="output groups JSONL")
    p_group.add_argument(
        "--min-overlap",
        type=float,
        default=0.0,
        help="minimum intersection (s) for two segments to overlap (default 0.0, strict)",
    )
    _add_sc_token(p_group)

    p_sot = sub.add_parser("sot-gen", help="serialize groups into SOT references")
    p_sot.add_argument("--ref", required=True, help="groups JSONL from 'group'")
    p_sot.add_argument("--out", required=True, help="output reference JSONL")
    _add_sc_token(p_sot)

    p_score = sub.add_parser("score", help="score hypotheses against SOT references")
    p_score.add_argument("--ref", required=True, help="reference JSONL from 'sot-gen'")
    p_score.add_argument("--hyp", required=True, help="hypothesis JSONL")
    p_score.add_argument("--out", help="report file (default: stdout)")
    p_score.add_argument("--metric", choices=("wer", "cpwer", "both"), default="both")
    p_score.add_argument("--format", choices=("json", "csv", "md"), default="json")
    p_score.add_argument(
        "--include-sc",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="score the speaker-change symbol as a token in direct WER (default on)",
    )
    p_score.add_argument("--jobs", type=int, default=1, help="parallel scoring jobs")
    _add_sc_token(p_score)

    p_count = sub.add_parser("count-speakers", help="speaker-counting confusion matrix")
    p_count.add_argument("--ref", required=True, help="reference JSONL from 'sot-gen'")
    p_count.add_argument("--hyp", required=True, help="hypothesis JSONL")
    p_count.add_argument("--out", help="report file (default: stdout)")
    p_count.add_argument("--format", choices=("json", "csv", "md"), default="json")
    _add_sc_token(p_count)

    p_sim = sub.add_parser("simulate", help="simulate delayed-overlap mixtures")
    p_sim.add_argument("--ref", required=True, help="mixture manifest JSONL")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--seed", type=int, default=0, help="global seed (default 0)")
    p_sim.add_argument("--delay-min", type=float, default=DEFAULT_DELAY_MIN)
    p_sim.add_argument("--delay-max", type=float, default=DEFAULT_DELAY_MAX)
    p_sim.add_argument("--jobs", type=int, default=1, help="parallel mixture jobs")
    _add_sc_token(p_sim)

    return parser


def _read_lines(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as f:
        return f.readlines()


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)


def _warn(message: str) -> None:
    print(f"mtas: warning: {message}", file=sys.stderr)


def _parse_sessions(path: str, cfg: NormalizationConfig):
    lines = _read_lines(path)
    if path.endswith(".stm"):
        return parse_stm(lines, cfg)
    return parse_session_jsonl(lines, cfg)


def _cmd_group(args: argparse.Namespace) -> int:
    cfg = NormalizationConfig(sc_symbol=args.sc_token)
    sessions = _parse_sessions(args.ref, cfg)
    problems = []
    for session in sessions:
        for violation in validate_session(session, args.sc_token):
            problems.append(f"session {session.session_id}: {violation}")
    if problems:
        for p in problems:
            print(f"mtas: error: {p}", file=sys.stderr)
        return 1
    policy = OverlapPolicy(min_overlap=args.min_overlap)
    records = []
    for session in sessions:
        for group in build_groups(session, policy):
            records.append(group_record(group))
    _write_text(args.out, dumps_jsonl(records))
    return 0


def _cmd_sot_gen(args: argparse.Namespace) -> int:
    cfg = NormalizationConfig(sc_symbol=args.sc_token)
    groups = parse_groups_jsonl(_read_lines(args.ref), cfg)
    records = [reference_record(group, args.sc_token) for group in groups]
    _write_text(args.out, dumps_jsonl(records))
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    cfg = NormalizationConfig(sc_symbol=args.sc_token)
    refs = parse_reference_jsonl(_read_lines(args.ref))
    hyps = parse_hypothesis_jsonl(_read_lines(args.hyp))
    metrics = ("wer", "cpwer") if args.metric == "both" else (args.metric,)
    report, warnings = build_report(
        refs,
        hyps,
        metrics=metrics,
        include_sc=args.include_sc,
        sc_symbol=args.sc_token,
        cfg=cfg,
        jobs=args.jobs,
    )
    for w in warnings:
        _warn(w)
    renderer = {
        "json": render_report_json,
        "csv": render_report_csv,
        "md": render_report_md,
    }[args.format]
    _write_text(args.out, renderer(report))
    return 0


def _cmd_count_speakers(args: argparse.Namespace) -> int:
    cfg = NormalizationConfig(sc_symbol=args.sc_token)
    refs = parse_reference_jsonl(_read_lines(args.ref))
    hyps = parse_hypothesis_jsonl(_read_lines(args.hyp))
    hyp_map = {(h.session_id, h.group_id): h.sot for h in hyps}
    known = {(r.session_id, r.group_id) for r in refs}
    unknown = sorted(k for k in hyp_map if k not in known)
    if unknown:
        names = ", ".join(f"{s}/{g}" for s, g in unknown)
        raise MtasError(f"hypotheses for unknown groups: {names}")
    pairs = []
    for ref in refs:
        if ref.num_speakers < 1:
            _warn(
                f"skipping {ref.session_id}/{ref.group_id}: reference has no speakers"
            )
            continue
        key = (ref.session_id, ref.group_id)
        if key not in hyp_map:
            _warn(f"no hypothesis for {ref.session_id}/{ref.group_id}; counting as empty")
        estimated = estimate_speaker_count(hyp_map.get(key, ""), args.sc_token, cfg)
        pairs.append((ref.num_speakers, estimated))
    matrix = confusion(pairs)
    renderer = {
        "json": render_confusion_json,
        "csv": render_confusion_csv,
        "md": render_confusion_md,
    }[args.format]
    _write_text(args.out, renderer(matrix))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = NormalizationConfig(sc_symbol=args.sc_token)
    manifest_path = Path(args.ref)
    entries = parse_manifest_jsonl(_read_lines(args.ref))
    results = run_simulation(
        entries,
        out_dir=Path(args.out),
        base_dir=manifest_path.resolve().parent,
        global_seed=args.seed,
        delay_min=args.delay_min,
        delay_max=args.delay_max,
        sc_symbol=args.sc_token,
        cfg=cfg,
        jobs=args.jobs,
    )
    write_simulation_outputs(results, Path(args.out))
    return 0


_COMMANDS = {
    "group": _cmd_group,
    "sot-gen": _cmd_sot_gen,
    "score": _cmd_score,
    "count-speakers": _cmd_count_speakers,
    "simulate": _cmd_simulate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except MtasError as exc:
        print(f"mtas: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"mtas: error: {exc}", file=sys.stderr)
        return 1
    except UnicodeDecodeError as exc:
        print(f"mtas: error: input is not valid UTF-8 ({exc})", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"mtas: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

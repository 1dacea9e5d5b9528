"""Score-report assembly and deterministic rendering (json / csv / md).

Groups are scored independently (optionally in parallel) and reduced in
input order, so a report is byte-identical for fixed inputs and flags no
matter the parallelism degree. Aggregates are micro-averaged: errors and
reference words are pooled before dividing.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import AlignmentCounts, MtasError
from .ingest import DEFAULT_NORMALIZATION, Hypothesis, NormalizationConfig
from .metrics import ConfusionMatrix, cpwer, sot_wer
from .sot import ReferenceRecord, estimate_speaker_count, parse_sot, split_sot

TALKER_BUCKETS = ("1", "2", "3", "4", "5+")
METRIC_CHOICES = ("wer", "cpwer")


def talker_bucket(num_speakers: int) -> Optional[str]:
    """AMI-style talker-count bucket key, or None for zero-speaker refs."""
    if num_speakers < 1:
        return None
    return str(num_speakers) if num_speakers <= 4 else "5+"


@dataclass(frozen=True)
class GroupScore:
    """Scores of one (reference group, hypothesis) pair."""

    session_id: str
    group_id: str
    num_speakers_ref: int
    num_speakers_hyp: int
    missing_hyp: bool
    wer: Optional[AlignmentCounts] = None
    cpwer: Optional[AlignmentCounts] = None
    assignment: Optional[tuple[Optional[int], ...]] = None

    def max_ref_len(self) -> int:
        lens = [c.ref_len for c in (self.wer, self.cpwer) if c is not None]
        return max(lens) if lens else 0


def score_group(
    ref: ReferenceRecord,
    hyp_sot: Optional[str],
    metrics: Sequence[str] = METRIC_CHOICES,
    include_sc: bool = True,
    sc_symbol: str = "$",
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> GroupScore:
    """Score one group; a missing hypothesis scores as an empty one."""
    hyp_text = hyp_sot if hyp_sot is not None else ""
    wer_counts = None
    cpwer_counts = None
    assignment = None
    if "wer" in metrics:
        ref_transcript = parse_sot(ref.sot, sc_symbol, cfg)
        hyp_transcript = parse_sot(hyp_text, sc_symbol, cfg)
        wer_counts = sot_wer(ref_transcript, hyp_transcript, include_sc)
    if "cpwer" in metrics:
        ref_streams = {spk: ref.per_speaker[spk].split() for spk in ref.speaker_order}
        hyp_streams = [list(s.tokens) for s in split_sot(hyp_text, sc_symbol, cfg)]
        cpwer_counts, assign = cpwer(ref_streams, hyp_streams)
        assignment = tuple(assign)
    return GroupScore(
        session_id=ref.session_id,
        group_id=ref.group_id,
        num_speakers_ref=ref.num_speakers,
        num_speakers_hyp=estimate_speaker_count(hyp_text, sc_symbol, cfg),
        missing_hyp=hyp_sot is None,
        wer=wer_counts,
        cpwer=cpwer_counts,
        assignment=assignment,
    )


def match_hypotheses(
    refs: Sequence[ReferenceRecord], hypotheses: Sequence[Hypothesis]
) -> tuple[dict[tuple[str, str], str], list[str]]:
    """Pair hypotheses with references.

    A hypothesis without a matching reference is an error; a reference
    without a hypothesis yields a warning and scores against empty output.
    """
    hyp_map = {(h.session_id, h.group_id): h.sot for h in hypotheses}
    known = {(r.session_id, r.group_id) for r in refs}
    unknown = sorted(k for k in hyp_map if k not in known)
    if unknown:
        names = ", ".join(f"{s}/{g}" for s, g in unknown)
        raise MtasError(f"hypotheses for unknown groups: {names}")
    warnings = [
        f"no hypothesis for {r.session_id}/{r.group_id}; scoring as empty"
        for r in refs
        if (r.session_id, r.group_id) not in hyp_map
    ]
    return hyp_map, warnings


def _counts_block(counts: AlignmentCounts) -> dict:
    return {
        "S": counts.substitutions,
        "D": counts.deletions,
        "I": counts.insertions,
        "ref_len": counts.ref_len,
        "rate": round(counts.rate(), 6),
    }


def build_report(
    refs: Sequence[ReferenceRecord],
    hypotheses: Sequence[Hypothesis],
    metrics: Sequence[str] = METRIC_CHOICES,
    include_sc: bool = True,
    sc_symbol: str = "$",
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
    jobs: int = 1,
) -> tuple[dict, list[str]]:
    """Score every reference and assemble the report structure.

    Returns (report, warnings). Groups whose reference is empty are kept
    out of the per-group listing (their rate is undefined) but still
    contribute to the pooled aggregates.
    """
    for metric in metrics:
        if metric not in METRIC_CHOICES:
            raise ValueError(f"unknown metric {metric!r}")
    hyp_map, warnings = match_hypotheses(refs, hypotheses)

    def score_one(ref: ReferenceRecord) -> GroupScore:
        return score_group(
            ref,
            hyp_map.get((ref.session_id, ref.group_id)),
            metrics=metrics,
            include_sc=include_sc,
            sc_symbol=sc_symbol,
            cfg=cfg,
        )

    if jobs > 1 and len(refs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(score_one, refs))
    else:
        scores = [score_one(ref) for ref in refs]

    group_records = []
    for score in scores:
        if score.max_ref_len() == 0:
            continue
        record: dict = {
            "session_id": score.session_id,
            "group_id": score.group_id,
            "num_speakers_ref": score.num_speakers_ref,
            "num_speakers_hyp": score.num_speakers_hyp,
        }
        if score.wer is not None:
            record["wer"] = _counts_block(score.wer)
        if score.cpwer is not None:
            record["cpwer"] = _counts_block(score.cpwer)
            record["cpwer"]["assignment"] = list(score.assignment or ())
        group_records.append(record)

    def pooled(selected: list[GroupScore]) -> dict:
        entry: dict = {"num_groups": len(selected)}
        if "wer" in metrics:
            total = AlignmentCounts()
            for s in selected:
                if s.wer is not None:
                    total = total + s.wer
            entry["wer"] = _counts_block(total)
        if "cpwer" in metrics:
            total = AlignmentCounts()
            for s in selected:
                if s.cpwer is not None:
                    total = total + s.cpwer
            entry["cpwer"] = _counts_block(total)
        return entry

    aggregate = {"avg": pooled(scores)}
    for bucket in TALKER_BUCKETS:
        aggregate[bucket] = pooled(
            [s for s in scores if talker_bucket(s.num_speakers_ref) == bucket]
        )

    return {"groups": group_records, "aggregate": aggregate}, warnings


def render_report_json(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


_CSV_FIELDS = [
    "kind",
    "key",
    "session_id",
    "group_id",
    "num_speakers_ref",
    "num_speakers_hyp",
    "num_groups",
    "metric",
    "S",
    "D",
    "I",
    "ref_len",
    "rate",
    "assignment",
]


def _format_assignment(assignment: Sequence[Optional[int]]) -> str:
    return ";".join("-" if a is None else str(a) for a in assignment)


def render_report_csv(report: dict) -> str:
    """Long-format CSV: one row per (group, metric) plus aggregate rows."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rec in report["groups"]:
        for metric in METRIC_CHOICES:
            if metric not in rec:
                continue
            block = rec[metric]
            writer.writerow(
                {
                    "kind": "group",
                    "key": "",
                    "session_id": rec["session_id"],
                    "group_id": rec["group_id"],
                    "num_speakers_ref": rec["num_speakers_ref"],
                    "num_speakers_hyp": rec["num_speakers_hyp"],
                    "num_groups": "",
                    "metric": metric,
                    "S": block["S"],
                    "D": block["D"],
                    "I": block["I"],
                    "ref_len": block["ref_len"],
                    "rate": f"{block['rate']:.6f}",
                    "assignment": _format_assignment(block.get("assignment", [])),
                }
            )
    for key in ("avg",) + TALKER_BUCKETS:
        entry = report["aggregate"][key]
        for metric in METRIC_CHOICES:
            if metric not in entry:
                continue
            block = entry[metric]
            writer.writerow(
                {
                    "kind": "aggregate",
                    "key": key,
                    "session_id": "",
                    "group_id": "",
                    "num_speakers_ref": "",
                    "num_speakers_hyp": "",
                    "num_groups": entry["num_groups"],
                    "metric": metric,
                    "S": block["S"],
                    "D": block["D"],
                    "I": block["I"],
                    "ref_len": block["ref_len"],
                    "rate": f"{block['rate']:.6f}",
                    "assignment": "",
                }
            )
    return buf.getvalue()


def render_report_md(report: dict) -> str:
    """Markdown summary: one table of percentages per talker-count column."""
    keys = ("avg",) + TALKER_BUCKETS
    lines = ["# Multi-talker score report", ""]
    lines.append(f"{len(report['groups'])} groups listed; aggregates pool all scored groups.")
    lines.append("")
    lines.append("| metric | " + " | ".join(keys) + " |")
    lines.append("|" + "---|" * (len(keys) + 1))
    for metric, label in (("wer", "WER (%)"), ("cpwer", "cpWER (%)")):
        if metric not in report["aggregate"]["avg"]:
            continue
        cells = []
        for key in keys:
            entry = report["aggregate"][key]
            if entry["num_groups"] == 0:
                cells.append("-")
            else:
                cells.append(f"{100.0 * entry[metric]['rate']:.1f}")
        lines.append(f"| {label} | " + " | ".join(cells) + " |")
    counts = [str(report["aggregate"][key]["num_groups"]) for key in keys]
    lines.append("| groups | " + " | ".join(counts) + " |")
    lines.append("")
    return "\n".join(lines)


def confusion_report(matrix: ConfusionMatrix) -> dict:
    """JSON structure for a speaker-counting confusion matrix."""
    labels = matrix.column_labels()
    rows = []
    for i, actual in enumerate(matrix.actual_counts):
        rows.append(
            {
                "actual": actual,
                "num_groups": matrix.row_totals[i],
                "estimated": {
                    label: round(pct, 4)
                    for label, pct in zip(labels, matrix.percentages[i])
                },
            }
        )
    return {"cap": matrix.cap, "rows": rows}


def render_confusion_json(matrix: ConfusionMatrix) -> str:
    return json.dumps(confusion_report(matrix), indent=2, ensure_ascii=False) + "\n"


def render_confusion_csv(matrix: ConfusionMatrix) -> str:
    labels = matrix.column_labels()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["actual", "num_groups", *labels])
    for i, actual in enumerate(matrix.actual_counts):
        writer.writerow(
            [actual, matrix.row_totals[i]]
            + [f"{pct:.4f}" for pct in matrix.percentages[i]]
        )
    return buf.getvalue()


def render_confusion_md(matrix: ConfusionMatrix) -> str:
    labels = list(matrix.column_labels())
    labels[-1] = f"≥{matrix.cap}"  # display the bucket as ">= cap"
    lines = ["# Speaker counting accuracy (%)", ""]
    lines.append("| actual \\ estimated | " + " | ".join(labels) + " |")
    lines.append("|" + "---|" * (len(labels) + 1))
    for i, actual in enumerate(matrix.actual_counts):
        cells = [f"{pct:.1f}" for pct in matrix.percentages[i]]
        lines.append(f"| {actual} | " + " | ".join(cells) + " |")
    lines.append("")
    return "\n".join(lines)

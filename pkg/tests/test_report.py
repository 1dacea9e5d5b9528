import csv
import io
import json

import pytest

from mtas.core import MtasError
from mtas.ingest import Hypothesis
from mtas.metrics import confusion
from mtas.report import (
    build_report,
    render_confusion_csv,
    render_confusion_json,
    render_confusion_md,
    render_report_csv,
    render_report_json,
    render_report_md,
    talker_bucket,
)
from mtas.sot import ReferenceRecord


def ref(session_id, group_id, per_speaker, sot=None):
    order = tuple(per_speaker)
    if sot is None:
        sot = " $ ".join(per_speaker[s] for s in order)
    return ReferenceRecord(session_id, group_id, len(order), sot, order, dict(per_speaker))


REFS = [
    ref("s1", "g0", {"A": "hello there", "B": "good morning"}),
    ref("s1", "g1", {"A": "see you later"}),
    ref("s2", "g0", {"X": "one two three", "Y": "four", "Z": "five six"}),
]


def hyp(session_id, group_id, sot):
    return Hypothesis(session_id, group_id, sot)


def test_perfect_hypotheses_score_zero():
    hyps = [hyp(r.session_id, r.group_id, r.sot) for r in REFS]
    report, warnings = build_report(REFS, hyps)
    assert warnings == []
    assert report["aggregate"]["avg"]["wer"]["rate"] == 0.0
    assert report["aggregate"]["avg"]["cpwer"]["rate"] == 0.0
    assert len(report["groups"]) == 3


def test_missing_hypothesis_scores_as_deletions_with_warning():
    hyps = [hyp("s1", "g0", "hello there $ good morning")]
    report, warnings = build_report(REFS, hyps)
    assert len(warnings) == 2
    assert all("no hypothesis" in w for w in warnings)
    by_id = {(g["session_id"], g["group_id"]): g for g in report["groups"]}
    missing = by_id[("s1", "g1")]
    assert missing["wer"]["D"] == missing["wer"]["ref_len"] == 3
    assert missing["cpwer"]["D"] == 3
    assert missing["num_speakers_hyp"] == 0


def test_unknown_hypothesis_raises():
    hyps = [hyp("s9", "g0", "whatever")]
    with pytest.raises(MtasError, match="unknown groups: s9/g0"):
        build_report(REFS, hyps)


def test_empty_reference_pooled_but_not_listed():
    refs = [
        ref("s1", "g0", {"A": "one"}),
        ReferenceRecord("s1", "g1", 0, "", (), {}),
    ]
    hyps = [hyp("s1", "g0", "one"), hyp("s1", "g1", "ghost words")]
    report, _ = build_report(refs, hyps)
    assert [(g["session_id"], g["group_id"]) for g in report["groups"]] == [("s1", "g0")]
    # the empty-reference group still contributes its insertions to the pool
    assert report["aggregate"]["avg"]["wer"]["I"] == 2
    assert report["aggregate"]["avg"]["num_groups"] == 2


def test_talker_buckets():
    assert talker_bucket(1) == "1"
    assert talker_bucket(4) == "4"
    assert talker_bucket(5) == "5+"
    assert talker_bucket(9) == "5+"
    assert talker_bucket(0) is None


def test_aggregate_buckets_populated():
    hyps = [hyp(r.session_id, r.group_id, r.sot) for r in REFS]
    report, _ = build_report(REFS, hyps)
    agg = report["aggregate"]
    assert set(agg) == {"avg", "1", "2", "3", "4", "5+"}
    assert agg["1"]["num_groups"] == 1
    assert agg["2"]["num_groups"] == 1
    assert agg["3"]["num_groups"] == 1
    assert agg["4"]["num_groups"] == 0
    assert agg["5+"]["num_groups"] == 0


def test_metric_selection():
    hyps = [hyp(r.session_id, r.group_id, r.sot) for r in REFS]
    report, _ = build_report(REFS, hyps, metrics=("wer",))
    assert "cpwer" not in report["groups"][0]
    assert "cpwer" not in report["aggregate"]["avg"]
    with pytest.raises(ValueError):
        build_report(REFS, hyps, metrics=("der",))


def test_report_deterministic_across_jobs():
    hyps = [
        hyp("s1", "g0", "hello their $ morning"),
        hyp("s2", "g0", "one two $ four $ five six"),
    ]
    serial, _ = build_report(REFS, hyps, jobs=1)
    parallel, _ = build_report(REFS, hyps, jobs=4)
    assert render_report_json(serial) == render_report_json(parallel)


def test_render_json_ends_with_newline():
    report, _ = build_report(REFS, [hyp(r.session_id, r.group_id, r.sot) for r in REFS])
    text = render_report_json(report)
    assert text.endswith("\n")
    assert json.loads(text)["aggregate"]["avg"]["wer"]["S"] == 0


def test_render_csv_parses_back():
    hyps = [hyp(r.session_id, r.group_id, r.sot) for r in REFS]
    report, _ = build_report(REFS, hyps)
    rows = list(csv.DictReader(io.StringIO(render_report_csv(report))))
    group_rows = [r for r in rows if r["kind"] == "group"]
    agg_rows = [r for r in rows if r["kind"] == "aggregate"]
    assert len(group_rows) == 3 * 2  # wer + cpwer per group
    assert len(agg_rows) == 6 * 2
    assert group_rows[0]["rate"] == "0.000000"
    avg_wer = next(r for r in agg_rows if r["key"] == "avg" and r["metric"] == "wer")
    assert avg_wer["num_groups"] == "3"


def test_render_md_layout():
    hyps = [hyp(r.session_id, r.group_id, r.sot) for r in REFS]
    report, _ = build_report(REFS, hyps)
    text = render_report_md(report)
    lines = text.splitlines()
    header = next(l for l in lines if l.startswith("| metric"))
    assert header == "| metric | avg | 1 | 2 | 3 | 4 | 5+ |"
    wer_row = next(l for l in lines if l.startswith("| WER"))
    assert "0.0" in wer_row
    assert wer_row.rstrip().endswith("- |")  # empty buckets render as dashes


def test_confusion_renderers():
    matrix = confusion([(1, 1), (1, 1), (1, 2), (1, 1), (2, 2)])
    payload = json.loads(render_confusion_json(matrix))
    assert payload["cap"] == 5
    row1 = payload["rows"][0]
    assert row1["actual"] == 1
    assert row1["estimated"]["1"] == 75.0
    csv_text = render_confusion_csv(matrix)
    rows = list(csv.reader(io.StringIO(csv_text)))
    assert rows[0] == ["actual", "num_groups", "0", "1", "2", "3", "4", "5+"]
    assert rows[1][0] == "1" and rows[1][1] == "4"
    md_text = render_confusion_md(matrix)
    assert "≥5" in md_text
    assert "| 1 | 0.0 | 75.0 | 25.0 | 0.0 | 0.0 | 0.0 |" in md_text

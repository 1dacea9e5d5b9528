"""Transcript ingestion: JSONL / STM parsing and text normalization.

Input files are UTF-8 only; callers opening files should use strict
decoding so corrupt bytes fail loudly instead of silently mangling the
scoring reference.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from typing import Iterable

from .core import (
    DEFAULT_SC_SYMBOL,
    MtasError,
    Segment,
    Session,
    segment_sort_key,
)


class ParseError(MtasError):
    """Malformed input; the message carries the line number when known."""


@dataclass(frozen=True)
class NormalizationConfig:
    """Text-normalization switches shared by ingestion and SOT parsing."""

    lowercase: bool = True
    strip_nonword: bool = True
    sc_symbol: str = DEFAULT_SC_SYMBOL


DEFAULT_NORMALIZATION = NormalizationConfig()


def normalize_text(raw: str, cfg: NormalizationConfig = DEFAULT_NORMALIZATION) -> list[str]:
    """Normalize raw transcript text into scoring tokens.

    Pipeline: Unicode NFC, lowercase (if enabled), replace every character
    that is not a letter, digit, or apostrophe with a space (if enabled),
    split on whitespace runs. Apostrophes stay inside tokens so
    contractions score as single words; hyphens split.

    SOT separators must be split out *before* calling this: the
    speaker-change symbol is ordinary punctuation here and would be
    stripped.
    """
    text = unicodedata.normalize("NFC", raw)
    if cfg.lowercase:
        text = text.lower()
    if cfg.strip_nonword:
        text = "".join(c if c.isalnum() or c == "'" else " " for c in text)
    return text.split()


def _require(obj: dict, key: str, lineno: int, where: str = "") -> object:
    if key not in obj:
        ctx = f" in {where}" if where else ""
        raise ParseError(f"line {lineno}: missing required key {key!r}{ctx}")
    return obj[key]


def _require_str(obj: dict, key: str, lineno: int, where: str = "") -> str:
    value = _require(obj, key, lineno, where)
    if not isinstance(value, str):
        ctx = f" in {where}" if where else ""
        raise ParseError(f"line {lineno}: key {key!r}{ctx} must be a string")
    return value


def _require_number(obj: dict, key: str, lineno: int, where: str = "") -> float:
    value = _require(obj, key, lineno, where)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        ctx = f" in {where}" if where else ""
        raise ParseError(f"line {lineno}: key {key!r}{ctx} must be a number")
    return float(value)


def _load_json_line(line: str, lineno: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"line {lineno}: expected a JSON object")
    return obj


def parse_session_jsonl(
    lines: Iterable[str], cfg: NormalizationConfig = DEFAULT_NORMALIZATION
) -> list[Session]:
    """Parse session JSONL: one session object per non-empty line.

    Required keys: ``session_id`` (string) and ``segments`` (array of
    objects with ``speaker``, ``start``, ``end``, ``text``). An optional
    ``audio`` key carries an audio path. Unknown keys are ignored. Segment
    text is tokenized with ``normalize_text``; segments are sorted by
    (start, end, speaker).
    """
    sessions: list[Session] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        obj = _load_json_line(line, lineno)
        session_id = _require_str(obj, "session_id", lineno)
        if session_id in seen:
            raise ParseError(f"line {lineno}: duplicate session_id {session_id!r}")
        seen.add(session_id)
        raw_segments = _require(obj, "segments", lineno)
        if not isinstance(raw_segments, list):
            raise ParseError(f"line {lineno}: key 'segments' must be an array")
        segments = []
        for k, raw in enumerate(raw_segments):
            where = f"segment {k}"
            if not isinstance(raw, dict):
                raise ParseError(f"line {lineno}: {where} must be an object")
            speaker = _require_str(raw, "speaker", lineno, where)
            start = _require_number(raw, "start", lineno, where)
            end = _require_number(raw, "end", lineno, where)
            text = _require_str(raw, "text", lineno, where)
            segments.append(Segment(speaker, start, end, tuple(normalize_text(text, cfg))))
        audio = obj.get("audio")
        if audio is not None and not isinstance(audio, str):
            raise ParseError(f"line {lineno}: key 'audio' must be a string")
        segments.sort(key=segment_sort_key)
        sessions.append(Session(session_id, tuple(segments), audio))
    return sessions


def parse_stm(
    lines: Iterable[str], cfg: NormalizationConfig = DEFAULT_NORMALIZATION
) -> list[Session]:
    """Parse STM lines into sessions keyed by filename.

    Each line: ``filename channel speaker begin end [<label>] transcript``.
    Lines starting with ``;;`` are comments. The optional ``<...>`` label
    token is recognized and discarded. A ``begin >= end`` line parses fine;
    the broken interval surfaces later through ``validate_session``.
    """
    per_file: dict[str, list[Segment]] = {}
    order: list[str] = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(";;"):
            continue
        fields = stripped.split()
        if len(fields) < 5:
            raise ParseError(
                f"line {lineno}: STM needs at least 5 fields, got {len(fields)}"
            )
        filename, _channel, speaker = fields[0], fields[1], fields[2]
        try:
            begin = float(fields[3])
            end = float(fields[4])
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric begin/end") from None
        rest = fields[5:]
        if rest and rest[0].startswith("<") and rest[0].endswith(">"):
            rest = rest[1:]
        tokens = tuple(normalize_text(" ".join(rest), cfg))
        if filename not in per_file:
            per_file[filename] = []
            order.append(filename)
        per_file[filename].append(Segment(speaker, begin, end, tokens))
    sessions = []
    for filename in order:
        segments = sorted(per_file[filename], key=segment_sort_key)
        sessions.append(Session(filename, tuple(segments)))
    return sessions


def segment_record(segment: Segment) -> dict:
    return {
        "speaker": segment.speaker_id,
        "start": segment.start,
        "end": segment.end,
        "text": " ".join(segment.tokens),
    }


def session_record(session: Session) -> dict:
    rec: dict = {
        "session_id": session.session_id,
        "segments": [segment_record(s) for s in session.segments],
    }
    if session.audio_path is not None:
        rec["audio"] = session.audio_path
    return rec


@dataclass(frozen=True)
class Hypothesis:
    """One model output: a flat SOT string for a (session, group) pair."""

    session_id: str
    group_id: str
    sot: str


def parse_hypothesis_jsonl(lines: Iterable[str]) -> list[Hypothesis]:
    """Parse hypothesis JSONL: ``session_id``, ``group_id``, ``sot`` per line."""
    hyps: list[Hypothesis] = []
    seen: set[tuple[str, str]] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        obj = _load_json_line(line, lineno)
        session_id = _require_str(obj, "session_id", lineno)
        group_id = _require_str(obj, "group_id", lineno)
        sot = _require_str(obj, "sot", lineno)
        key = (session_id, group_id)
        if key in seen:
            raise ParseError(
                f"line {lineno}: duplicate hypothesis for {session_id}/{group_id}"
            )
        seen.add(key)
        hyps.append(Hypothesis(session_id, group_id, sot))
    return hyps


def dumps_jsonl(records: Iterable[dict]) -> str:
    """Render records as JSONL text, one compact object per line."""
    return "".join(json.dumps(rec, ensure_ascii=False) + "\n" for rec in records)

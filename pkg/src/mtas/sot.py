"""SOT transcript serialization and parsing.

Serialization follows speaker-wise first-in-first-out: speakers are
ordered by the start time of their earliest segment, and each speaker's
tokens are emitted as one contiguous block, blocks joined by a single
speaker-change separator. Splitting goes the other way: cut the flat
string on every separator occurrence *first*, then normalize each piece.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .core import DEFAULT_SC_SYMBOL, SotTranscript, UtteranceGroup
from .ingest import (
    DEFAULT_NORMALIZATION,
    NormalizationConfig,
    ParseError,
    _load_json_line,
    _require,
    _require_str,
    normalize_text,
)


@dataclass(frozen=True)
class SpeakerStream:
    """One speaker's concatenated tokens, in SOT emission order.

    ``speaker_id`` is known for reference streams and absent for anonymous
    hypothesis streams recovered from model output.
    """

    index: int
    tokens: tuple[str, ...]
    speaker_id: Optional[str] = None


def speaker_streams(group: UtteranceGroup) -> list[SpeakerStream]:
    """Per-speaker token streams of a group in FIFO order.

    Speakers are ordered by their earliest segment start (ties broken
    lexicographically by speaker id); within a speaker, segments
    concatenate in start order with ties by end, then input order. A
    speaker whose segments carry no tokens at all is omitted: an empty
    block would only create adjacent separators.
    """
    first_start: dict[str, float] = {}
    tokens: dict[str, list[str]] = {}
    for seg in sorted(group.segments, key=lambda s: (s.start, s.end)):
        if seg.speaker_id not in first_start:
            first_start[seg.speaker_id] = seg.start
            tokens[seg.speaker_id] = []
        tokens[seg.speaker_id].extend(seg.tokens)
    order = sorted(first_start, key=lambda spk: (first_start[spk], spk))
    streams = []
    for spk in order:
        if tokens[spk]:
            streams.append(SpeakerStream(len(streams), tuple(tokens[spk]), spk))
    return streams


def serialize_group(
    group: UtteranceGroup, sc_symbol: str = DEFAULT_SC_SYMBOL
) -> tuple[SotTranscript, list[SpeakerStream]]:
    """Serialize a group into an SOT transcript plus its speaker order.

    The returned streams record which reference speaker produced each
    block, which the permutation-scored metric needs on the reference
    side. The transcript never has leading, trailing, or adjacent
    separators.
    """
    streams = speaker_streams(group)
    items: list[str] = []
    for k, stream in enumerate(streams):
        if k:
            items.append(sc_symbol)
        items.extend(stream.tokens)
    return SotTranscript(tuple(items), sc_symbol), streams


def parse_sot(
    flat: str,
    sc_symbol: str = DEFAULT_SC_SYMBOL,
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> SotTranscript:
    """Parse a flat SOT string, keeping every separator occurrence.

    Empty pieces between separators stay as adjacent separator items, so
    direct WER sees exactly the separators the model emitted.
    """
    if not sc_symbol:
        raise ValueError("sc_symbol must be non-empty")
    items: list[str] = []
    for k, piece in enumerate(flat.split(sc_symbol)):
        if k:
            items.append(sc_symbol)
        items.extend(normalize_text(piece, cfg))
    return SotTranscript(tuple(items), sc_symbol)


def split_sot(
    flat: str,
    sc_symbol: str = DEFAULT_SC_SYMBOL,
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> list[SpeakerStream]:
    """Split a flat SOT string into anonymous per-speaker streams.

    The string is cut on every separator occurrence first, each piece is
    normalized, and pieces that normalize to nothing are dropped. Stream
    indices follow the original piece order.
    """
    if not sc_symbol:
        raise ValueError("sc_symbol must be non-empty")
    streams: list[SpeakerStream] = []
    for piece in flat.split(sc_symbol):
        tokens = normalize_text(piece, cfg)
        if tokens:
            streams.append(SpeakerStream(len(streams), tuple(tokens)))
    return streams


def estimate_speaker_count(
    flat: str,
    sc_symbol: str = DEFAULT_SC_SYMBOL,
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> int:
    """Estimated talker count: the number of non-empty separator-delimited pieces."""
    return len(split_sot(flat, sc_symbol, cfg))


@dataclass(frozen=True)
class ReferenceRecord:
    """One reference-side scoring unit as stored in reference JSONL."""

    session_id: str
    group_id: str
    num_speakers: int
    sot: str
    speaker_order: tuple[str, ...]
    per_speaker: dict[str, str]


def reference_record(group: UtteranceGroup, sc_symbol: str = DEFAULT_SC_SYMBOL) -> dict:
    """Build the reference JSONL record for one group.

    ``num_speakers`` counts emitted streams, so a speaker whose text
    normalized away entirely does not inflate the talker count.
    """
    transcript, streams = serialize_group(group, sc_symbol)
    return {
        "session_id": group.session_id,
        "group_id": group.group_id,
        "num_speakers": len(streams),
        "sot": transcript.render(),
        "speaker_order": [s.speaker_id for s in streams],
        "per_speaker": {s.speaker_id: " ".join(s.tokens) for s in streams},
    }


def parse_reference_jsonl(lines: Iterable[str]) -> list[ReferenceRecord]:
    """Parse reference JSONL as emitted by ``reference_record``."""
    records: list[ReferenceRecord] = []
    seen: set[tuple[str, str]] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        obj = _load_json_line(line, lineno)
        session_id = _require_str(obj, "session_id", lineno)
        group_id = _require_str(obj, "group_id", lineno)
        num_speakers = _require(obj, "num_speakers", lineno)
        if isinstance(num_speakers, bool) or not isinstance(num_speakers, int):
            raise ParseError(f"line {lineno}: key 'num_speakers' must be an integer")
        sot = _require_str(obj, "sot", lineno)
        speaker_order = _require(obj, "speaker_order", lineno)
        per_speaker = _require(obj, "per_speaker", lineno)
        if not isinstance(speaker_order, list) or not all(
            isinstance(s, str) for s in speaker_order
        ):
            raise ParseError(f"line {lineno}: key 'speaker_order' must be an array of strings")
        if not isinstance(per_speaker, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in per_speaker.items()
        ):
            raise ParseError(f"line {lineno}: key 'per_speaker' must map speakers to strings")
        if sorted(per_speaker) != sorted(speaker_order):
            raise ParseError(
                f"line {lineno}: per_speaker keys do not match speaker_order"
            )
        key = (session_id, group_id)
        if key in seen:
            raise ParseError(f"line {lineno}: duplicate reference for {session_id}/{group_id}")
        seen.add(key)
        records.append(
            ReferenceRecord(
                session_id,
                group_id,
                num_speakers,
                sot,
                tuple(speaker_order),
                dict(per_speaker),
            )
        )
    return records

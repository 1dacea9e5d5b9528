"""Shared domain types for multi-talker transcripts and scoring.

All types here are frozen dataclasses: immutable after construction and
safe to share across threads. Construction never validates business
invariants; ``validate_session`` reports them as data instead, so that
broken inputs can be surfaced with context rather than aborting mid-parse.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

DEFAULT_SC_SYMBOL = "$"


class MtasError(Exception):
    """Base class for errors raised by this package."""


@dataclass(frozen=True)
class Segment:
    """One speaker's time-stamped utterance within a session.

    ``tokens`` holds normalized words: no whitespace inside a token and no
    occurrence of the configured speaker-change symbol. A segment may carry
    zero tokens (timestamp without usable text); it still participates in
    overlap computations but contributes no words to scoring.
    """

    speaker_id: str
    start: float
    end: float
    tokens: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def duration(self) -> float:
        return self.end - self.start


def segment_sort_key(segment: Segment) -> tuple[float, float, str]:
    """Canonical ordering of segments within a session."""
    return (segment.start, segment.end, segment.speaker_id)


@dataclass(frozen=True)
class Session:
    """A recording with its time-stamped per-speaker segments."""

    session_id: str
    segments: tuple[Segment, ...] = ()
    audio_path: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))


@dataclass(frozen=True)
class UtteranceGroup:
    """A maximal set of segments connected by speaker overlap.

    This is the unit multi-talker metrics are computed over. ``group_id``
    is deterministic: ``"g"`` plus the zero-based rank of the group when
    groups of a session are ordered by earliest segment start.
    """

    group_id: str
    session_id: str
    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def num_speakers(self) -> int:
        return len({s.speaker_id for s in self.segments})

    @property
    def start(self) -> float:
        return min(s.start for s in self.segments)


@dataclass(frozen=True)
class SotTranscript:
    """A flat token sequence with speaker-change separators.

    An item equal to ``sc_symbol`` is a separator; every other item is a
    word. Words never contain the separator, so the encoding is
    unambiguous. Serialization never produces adjacent separators, but
    parsed hypotheses may contain them (models emit arbitrary text).
    """

    items: tuple[str, ...] = ()
    sc_symbol: str = DEFAULT_SC_SYMBOL

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))

    def render(self) -> str:
        """Flat string form: items joined with single spaces."""
        return " ".join(self.items)

    def words(self) -> tuple[str, ...]:
        """Items with the separators removed."""
        return tuple(t for t in self.items if t != self.sc_symbol)

    def num_separators(self) -> int:
        return sum(1 for t in self.items if t == self.sc_symbol)


@dataclass(frozen=True)
class AlignmentCounts:
    """Substitution/deletion/insertion counts from one alignment.

    Counts are additive: pooling disjoint scoring units is fieldwise
    addition, which is what makes micro-averaged rates and assignment-based
    cpWER exact.
    """

    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    ref_len: int = 0

    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def rate(self) -> float:
        """Errors per reference word; 0.0 for an empty reference."""
        if self.ref_len == 0:
            return 0.0
        return self.errors() / self.ref_len

    def __add__(self, other: "AlignmentCounts") -> "AlignmentCounts":
        return AlignmentCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.ref_len + other.ref_len,
        )


@dataclass(frozen=True)
class Violation:
    """One invariant failure found by ``validate_session``."""

    rule: str
    segment_index: Optional[int] = None
    detail: str = ""

    def __str__(self) -> str:
        where = "session" if self.segment_index is None else f"segment {self.segment_index}"
        msg = f"{where}: {self.rule}"
        return f"{msg} ({self.detail})" if self.detail else msg


def validate_session(session: Session, sc_symbol: str = DEFAULT_SC_SYMBOL) -> list[Violation]:
    """Check every session and segment invariant; never raises.

    Returns an empty list iff the session is well formed. Each violation
    names the offending segment index (or the session itself) and the rule.
    """
    violations: list[Violation] = []
    if not session.session_id:
        violations.append(Violation("session_id non-empty"))
    previous_key = None
    for idx, seg in enumerate(session.segments):
        if not seg.speaker_id:
            violations.append(Violation("speaker_id non-empty", idx))
        if not seg.start >= 0:
            violations.append(Violation("start >= 0", idx, f"start={seg.start!r}"))
        if not seg.end > seg.start:
            violations.append(
                Violation("end > start", idx, f"start={seg.start!r} end={seg.end!r}")
            )
        for tok in seg.tokens:
            if any(c.isspace() for c in tok):
                violations.append(Violation("no whitespace in token", idx, repr(tok)))
            if sc_symbol and sc_symbol in tok:
                violations.append(Violation("reserved symbol in token", idx, repr(tok)))
        key = segment_sort_key(seg)
        if previous_key is not None and key < previous_key:
            violations.append(Violation("segments sorted by (start, end, speaker)", idx))
        previous_key = key
    return violations

"""Utterance-group construction.

Groups are the connected components of the speaker-overlap graph: vertices
are segments, and two segments of *different* speakers are joined when
their time intersection exceeds the policy threshold. Candidate edges are
found with a start-ordered sweep so a session with thousands of segments
stays near O(n log n + E); a union-find merges them.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable

from .core import Segment, Session, UtteranceGroup, segment_sort_key
from .ingest import (
    DEFAULT_NORMALIZATION,
    NormalizationConfig,
    ParseError,
    _load_json_line,
    _require,
    _require_number,
    _require_str,
    normalize_text,
    segment_record,
)


@dataclass(frozen=True)
class OverlapPolicy:
    """How much intersection two segments need to count as overlapping.

    With the default ``min_overlap = 0.0`` a strictly positive intersection
    is required, so back-to-back turns never merge.
    """

    min_overlap: float = 0.0

    def __post_init__(self) -> None:
        if self.min_overlap < 0:
            raise ValueError(f"min_overlap must be >= 0, got {self.min_overlap}")


DEFAULT_POLICY = OverlapPolicy()


def overlaps(a: Segment, b: Segment, policy: OverlapPolicy = DEFAULT_POLICY) -> bool:
    """True iff the segments belong to different speakers and intersect.

    Same-speaker segments never overlap for grouping purposes, whatever
    their times.
    """
    if a.speaker_id == b.speaker_id:
        return False
    return min(a.end, b.end) - max(a.start, b.start) > policy.min_overlap


class UnionFind:
    """Array-based disjoint sets with path halving and union by size."""

    __slots__ = ("parent", "size")

    def __init__(self, n: int) -> None:
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def build_groups(
    session: Session, policy: OverlapPolicy = DEFAULT_POLICY
) -> list[UtteranceGroup]:
    """Partition a session's segments into utterance groups.

    Every segment lands in exactly one group. Groups are ordered by their
    earliest segment (ties broken by the canonical segment sort key) and
    get deterministic ids ``g0``, ``g1``, ... in that order. Segments with
    no overlaps form singleton groups.
    """
    segments = session.segments
    n = len(segments)
    if n == 0:
        return []
    order = sorted(range(n), key=lambda i: segment_sort_key(segments[i]))
    uf = UnionFind(n)
    active: list[tuple[float, int]] = []  # (end, index) heap of sweep candidates
    for j in order:
        sj = segments[j]
        threshold = sj.start + policy.min_overlap
        while active and active[0][0] <= threshold:
            heapq.heappop(active)
        for _end, i in active:
            si = segments[i]
            if si.speaker_id != sj.speaker_id and min(si.end, sj.end) - sj.start > policy.min_overlap:
                uf.union(i, j)
        heapq.heappush(active, (sj.end, j))

    components: dict[int, list[int]] = {}
    for i in range(n):
        components.setdefault(uf.find(i), []).append(i)
    ordered = sorted(
        components.values(),
        key=lambda idxs: min(segment_sort_key(segments[i]) for i in idxs),
    )
    groups = []
    for rank, idxs in enumerate(ordered):
        members = tuple(segments[i] for i in sorted(idxs))
        groups.append(UtteranceGroup(f"g{rank}", session.session_id, members))
    return groups


def group_record(group: UtteranceGroup) -> dict:
    return {
        "session_id": group.session_id,
        "group_id": group.group_id,
        "num_speakers": group.num_speakers,
        "segments": [segment_record(s) for s in group.segments],
    }


def parse_groups_jsonl(
    lines: Iterable[str], cfg: NormalizationConfig = DEFAULT_NORMALIZATION
) -> list[UtteranceGroup]:
    """Parse groups JSONL as emitted by ``group_record``."""
    groups: list[UtteranceGroup] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        obj = _load_json_line(line, lineno)
        session_id = _require_str(obj, "session_id", lineno)
        group_id = _require_str(obj, "group_id", lineno)
        num_speakers = _require(obj, "num_speakers", lineno)
        raw_segments = _require(obj, "segments", lineno)
        if not isinstance(raw_segments, list) or not raw_segments:
            raise ParseError(f"line {lineno}: key 'segments' must be a non-empty array")
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
        group = UtteranceGroup(group_id, session_id, tuple(segments))
        if group.num_speakers != num_speakers:
            raise ParseError(
                f"line {lineno}: num_speakers is {num_speakers} but segments "
                f"cover {group.num_speakers} speakers"
            )
        groups.append(group)
    return groups

"""Independent brute-force oracles and random-instance generators.

These deliberately avoid the library's own algorithms: the recursion has
no memoization, and the component search re-states the overlap predicate
inline so the oracle does not share code with the path it checks.
"""

from __future__ import annotations

import random

from mtas.core import Segment, Session, UtteranceGroup, segment_sort_key


def levenshtein_recursive(ref, hyp) -> int:
    """Naive exponential edit-distance recursion (no memoization)."""

    def go(i: int, j: int) -> int:
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        if ref[i] == hyp[j]:
            return go(i + 1, j + 1)
        return 1 + min(go(i + 1, j + 1), go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def overlap_components(segments, min_overlap: float = 0.0) -> set[frozenset[int]]:
    """O(n^2) BFS over the pairwise overlap matrix; returns index sets."""
    n = len(segments)
    adjacent = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            a, b = segments[i], segments[j]
            if (
                a.speaker_id != b.speaker_id
                and min(a.end, b.end) - max(a.start, b.start) > min_overlap
            ):
                adjacent[i][j] = adjacent[j][i] = True
    seen = [False] * n
    parts: set[frozenset[int]] = set()
    for s in range(n):
        if seen[s]:
            continue
        component = []
        stack = [s]
        seen[s] = True
        while stack:
            u = stack.pop()
            component.append(u)
            for v in range(n):
                if adjacent[u][v] and not seen[v]:
                    seen[v] = True
                    stack.append(v)
        parts.add(frozenset(component))
    return parts


def groups_partition(session: Session, groups) -> set[frozenset[int]]:
    """Partition (as segment-index sets) induced by a grouping result."""
    index_of = {id(seg): i for i, seg in enumerate(session.segments)}
    return {frozenset(index_of[id(s)] for s in g.segments) for g in groups}


WORDS = [
    "a", "b", "c", "the", "and", "to", "of", "in", "yes", "no",
    "well", "so", "right", "okay", "think", "mean", "know", "just",
]


def random_session(rng: random.Random, max_segments: int = 50) -> Session:
    """A random multi-speaker session with plausible interval structure."""
    n = rng.randint(0, max_segments)
    segments = []
    for _ in range(n):
        speaker = f"spk{rng.randint(0, 5)}"
        start = round(rng.uniform(0.0, 30.0), 3)
        end = round(start + rng.uniform(0.05, 5.0), 3)
        tokens = tuple(rng.choice(WORDS) for _ in range(rng.randint(0, 4)))
        segments.append(Segment(speaker, start, end, tokens))
    segments.sort(key=segment_sort_key)
    return Session("rand", tuple(segments))


def random_group(rng: random.Random, session_id: str = "rand") -> UtteranceGroup:
    """A random utterance group (any segment set works for serialization)."""
    num_speakers = rng.randint(1, 5)
    segments = []
    for k in range(num_speakers):
        speaker = f"spk{k}"
        for _ in range(rng.randint(1, 3)):
            start = round(rng.uniform(0.0, 10.0), 3)
            end = round(start + rng.uniform(0.1, 3.0), 3)
            tokens = tuple(rng.choice(WORDS) for _ in range(rng.randint(0, 4)))
            segments.append(Segment(speaker, start, end, tokens))
    segments.sort(key=segment_sort_key)
    return UtteranceGroup("g0", session_id, tuple(segments))


def random_cpwer_instance(
    rng: random.Random, max_streams: int = 5, max_len: int = 12, alphabet_size: int = 10
):
    """Random (ref_streams, hyp_streams) for permutation-metric checks."""
    alphabet = [f"w{i}" for i in range(alphabet_size)]
    num_ref = rng.randint(0, max_streams)
    num_hyp = rng.randint(0, max_streams)
    ref_streams = {
        f"spk{i}": [rng.choice(alphabet) for _ in range(rng.randint(0, max_len))]
        for i in range(num_ref)
    }
    hyp_streams = [
        [rng.choice(alphabet) for _ in range(rng.randint(0, max_len))]
        for _ in range(num_hyp)
    ]
    return ref_streams, hyp_streams

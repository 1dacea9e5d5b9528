"""Scoring: token alignment, direct SOT WER, cpWER, speaker-count confusion.

cpWER pools per-pair alignment counts under the error-minimizing
assignment of hypothesis streams to reference speakers. Because counts
are additive across pairs, solving it as a linear assignment problem is
exact; a factorial enumeration of every permutation is kept as an
independent oracle for the assignment step.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .alignment import encode_pair, levenshtein_counts
from .core import AlignmentCounts, MtasError, SotTranscript

MAX_BRUTEFORCE_STREAMS = 8


def align(ref: Sequence[str], hyp: Sequence[str]) -> AlignmentCounts:
    """Minimum-edit alignment counts between token sequences, unit costs.

    S + D + I equals the Levenshtein distance. Among minimal alignments the
    decomposition is deterministic: match, then substitution, deletion,
    insertion on ties.
    """
    ref = list(ref)
    hyp = list(hyp)
    if not ref:
        return AlignmentCounts(0, 0, len(hyp), 0)
    if not hyp:
        return AlignmentCounts(0, len(ref), 0, len(ref))
    ref_ids, hyp_ids = encode_pair(ref, hyp)
    subs, dels, ins = levenshtein_counts(ref_ids, hyp_ids)
    return AlignmentCounts(subs, dels, ins, len(ref))


def sot_wer(
    ref: SotTranscript, hyp: SotTranscript, include_sc: bool = True
) -> AlignmentCounts:
    """Direct WER between two flat SOT transcripts.

    With ``include_sc`` (the default) the speaker-change separator is
    scored as an ordinary token; otherwise separators are removed from
    both sides first.
    """
    if ref.sc_symbol != hyp.sc_symbol:
        raise MtasError(
            f"mismatched speaker-change symbols: {ref.sc_symbol!r} vs {hyp.sc_symbol!r}"
        )
    if include_sc:
        return align(ref.items, hyp.items)
    return align(ref.words(), hyp.words())


@dataclass(frozen=True)
class CostMatrix:
    """Pairwise alignment counts between padded ref and hyp streams.

    Rows are reference speakers, columns hypothesis streams; the shorter
    side is padded with empty streams until the matrix is square. A cell
    against an empty hypothesis is pure deletions; a padded reference row
    is pure insertions.
    """

    cells: tuple[tuple[AlignmentCounts, ...], ...]
    ref_speakers: tuple[Optional[str], ...]
    num_real_refs: int
    num_real_hyps: int

    @property
    def size(self) -> int:
        return len(self.cells)


def _padded_streams(
    ref_streams: Mapping[str, Sequence[str]],
    hyp_streams: Sequence[Sequence[str]],
) -> tuple[list[tuple[Optional[str], tuple[str, ...]]], list[tuple[str, ...]]]:
    refs: list[tuple[Optional[str], tuple[str, ...]]] = [
        (spk, tuple(toks)) for spk, toks in ref_streams.items()
    ]
    hyps: list[tuple[str, ...]] = [tuple(toks) for toks in hyp_streams]
    size = max(len(refs), len(hyps))
    refs.extend([(None, ())] * (size - len(refs)))
    hyps.extend([()] * (size - len(hyps)))
    return refs, hyps


def build_cost_matrix(
    ref_streams: Mapping[str, Sequence[str]],
    hyp_streams: Sequence[Sequence[str]],
) -> CostMatrix:
    refs, hyps = _padded_streams(ref_streams, hyp_streams)
    cells = tuple(
        tuple(align(ref_tokens, hyp_tokens) for hyp_tokens in hyps)
        for _spk, ref_tokens in refs
    )
    return CostMatrix(
        cells=cells,
        ref_speakers=tuple(spk for spk, _ in refs),
        num_real_refs=len(ref_streams),
        num_real_hyps=len(hyp_streams),
    )


def cpwer(
    ref_streams: Mapping[str, Sequence[str]],
    hyp_streams: Sequence[Sequence[str]],
) -> tuple[AlignmentCounts, list[Optional[int]]]:
    """Concatenated minimum-permutation WER counts plus the assignment.

    Returns the pooled counts of the assignment minimizing total errors
    and, per real reference speaker (in ``ref_streams`` order), the index
    of the hypothesis stream it was matched to, or None when the speaker
    fell to an empty padding stream. The rate denominator is the total
    reference word count.
    """
    matrix = build_cost_matrix(ref_streams, hyp_streams)
    if matrix.size == 0:
        return AlignmentCounts(), []
    errors = np.array(
        [[cell.errors() for cell in row] for row in matrix.cells], dtype=np.int64
    )
    row_idx, col_idx = linear_sum_assignment(errors)
    total = AlignmentCounts()
    assignment: list[Optional[int]] = [None] * matrix.num_real_refs
    for r, c in zip(row_idx, col_idx):
        total = total + matrix.cells[r][c]
        if r < matrix.num_real_refs:
            assignment[r] = int(c) if c < matrix.num_real_hyps else None
    return total, assignment


def cpwer_bruteforce(
    ref_streams: Mapping[str, Sequence[str]],
    hyp_streams: Sequence[Sequence[str]],
) -> AlignmentCounts:
    """Literal enumeration over every speaker permutation.

    The oracle counterpart of ``cpwer``: O(k!) in the padded stream count,
    so it refuses anything above MAX_BRUTEFORCE_STREAMS streams.
    """
    refs, hyps = _padded_streams(ref_streams, hyp_streams)
    size = len(refs)
    if size > MAX_BRUTEFORCE_STREAMS:
        raise MtasError(
            f"brute-force cpWER limited to {MAX_BRUTEFORCE_STREAMS} padded streams, got {size}"
        )
    if size == 0:
        return AlignmentCounts()
    cells = [
        [align(ref_tokens, hyp_tokens) for hyp_tokens in hyps]
        for _spk, ref_tokens in refs
    ]
    best: Optional[AlignmentCounts] = None
    for perm in permutations(range(size)):
        pooled = AlignmentCounts()
        for r, c in enumerate(perm):
            pooled = pooled + cells[r][c]
        if best is None or pooled.errors() < best.errors():
            best = pooled
    assert best is not None
    return best


@dataclass(frozen=True)
class ConfusionMatrix:
    """Row-normalized speaker-counting confusion.

    One row per actual talker count present in the data (ascending);
    estimated counts occupy columns 0 .. cap-1 plus a final bucket for
    anything >= cap. Percentages are exact (unrounded), so every row sums
    to 100 up to float error; rendering rounds for display.
    """

    cap: int
    actual_counts: tuple[int, ...]
    percentages: tuple[tuple[float, ...], ...]
    row_totals: tuple[int, ...]

    def column_labels(self) -> tuple[str, ...]:
        return tuple(str(c) for c in range(self.cap)) + (f"{self.cap}+",)

    def row(self, actual: int) -> dict[str, float]:
        """Column label -> percentage for one actual talker count."""
        i = self.actual_counts.index(actual)
        return dict(zip(self.column_labels(), self.percentages[i]))


def confusion(pairs: Sequence[tuple[int, int]], cap: int = 5) -> ConfusionMatrix:
    """Build a speaker-counting confusion matrix from (actual, estimated) pairs.

    Estimated counts at or above ``cap`` land in the final bucket,
    mirroring a ">= cap" table column.
    """
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    counts: dict[int, list[int]] = {}
    for actual, estimated in pairs:
        if actual < 1:
            raise ValueError(f"actual talker count must be >= 1, got {actual}")
        if estimated < 0:
            raise ValueError(f"estimated talker count must be >= 0, got {estimated}")
        row = counts.setdefault(actual, [0] * (cap + 1))
        row[min(estimated, cap)] += 1
    actual_counts = tuple(sorted(counts))
    percentages = []
    row_totals = []
    for actual in actual_counts:
        row = counts[actual]
        total = sum(row)
        row_totals.append(total)
        percentages.append(tuple(100.0 * c / total for c in row))
    return ConfusionMatrix(cap, actual_counts, tuple(percentages), tuple(row_totals))

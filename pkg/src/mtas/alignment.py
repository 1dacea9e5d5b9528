"""Levenshtein alignment kernels.

The token-level edit-distance DP is the hot loop of every scoring run:
concatenated speaker streams from long recordings reach thousands of
tokens, and permutation scoring aligns every reference stream against
every hypothesis stream. The default kernel is numba-jitted; a pure-numpy
row-sweep fallback produces identical counts.

Backend selection (resolved once at import):

    MTAS_BACKEND=auto    use numba when importable, else numpy (default)
    MTAS_BACKEND=numba   require numba, fail if unavailable
    MTAS_BACKEND=numpy   force the pure-numpy path

Both kernels return the (substitutions, deletions, insertions)
decomposition of one minimum-edit alignment. Ties are broken the same way
in both: prefer a match, then substitution, then deletion, then insertion,
walking the DP matrix back from the corner. Totals always equal the
Levenshtein distance; the fixed preference makes the decomposition
deterministic too.
"""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np

__all__ = [
    "BACKEND",
    "HAS_NUMBA",
    "encode_pair",
    "levenshtein_counts",
    "levenshtein_counts_numba",
    "levenshtein_counts_numpy",
]

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

_requested = os.environ.get("MTAS_BACKEND", "auto").strip().lower() or "auto"
if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"MTAS_BACKEND must be 'auto', 'numba' or 'numpy', got {_requested!r}"
    )
if _requested == "numba" and not HAS_NUMBA:
    raise ImportError("MTAS_BACKEND=numba but numba is not importable")
BACKEND = "numpy" if (_requested == "numpy" or not HAS_NUMBA) else "numba"


def encode_pair(
    ref_tokens: Sequence[str], hyp_tokens: Sequence[str]
) -> tuple[np.ndarray, np.ndarray]:
    """Map two token sequences onto int32 ids sharing one vocabulary."""
    vocab: dict[str, int] = {}
    ref_ids = np.empty(len(ref_tokens), dtype=np.int32)
    for i, tok in enumerate(ref_tokens):
        ref_ids[i] = vocab.setdefault(tok, len(vocab))
    hyp_ids = np.empty(len(hyp_tokens), dtype=np.int32)
    for j, tok in enumerate(hyp_tokens):
        hyp_ids[j] = vocab.setdefault(tok, len(vocab))
    return ref_ids, hyp_ids


def _cost_matrix_numpy(ref: np.ndarray, hyp: np.ndarray) -> np.ndarray:
    n, m = ref.size, hyp.size
    d = np.empty((n + 1, m + 1), dtype=np.int32)
    col = np.arange(m + 1, dtype=np.int32)
    d[0] = col
    for i in range(1, n + 1):
        prev = d[i - 1]
        cur = d[i]
        cur[0] = i
        # substitution/match vs deletion, then left-to-right insertion scan:
        # cur[j] = j + running_min(cur[k] - k) handles insertion chains.
        np.minimum(prev[:-1] + (hyp != ref[i - 1]), prev[1:] + 1, out=cur[1:])
        diff = cur - col
        np.minimum.accumulate(diff, out=diff)
        np.minimum(cur, diff + col, out=cur)
    return d


def _backtrack_counts(d: np.ndarray, ref: np.ndarray, hyp: np.ndarray) -> tuple[int, int, int]:
    i, j = ref.size, hyp.size
    subs = dels = ins = 0
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and d[i, j] == d[i - 1, j - 1]:
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and d[i, j] == d[i - 1, j - 1] + 1:
            subs += 1
            i -= 1
            j -= 1
        elif i > 0 and d[i, j] == d[i - 1, j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return subs, dels, ins


def levenshtein_counts_numpy(ref_ids: np.ndarray, hyp_ids: np.ndarray) -> tuple[int, int, int]:
    """Pure-numpy kernel: vectorized row sweep plus Python backtrack."""
    d = _cost_matrix_numpy(ref_ids, hyp_ids)
    return _backtrack_counts(d, ref_ids, hyp_ids)


if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _counts_numba(ref, hyp):  # pragma: no cover - exercised via wrapper
        n = ref.size
        m = hyp.size
        d = np.empty((n + 1, m + 1), dtype=np.int32)
        for j in range(m + 1):
            d[0, j] = j
        for i in range(1, n + 1):
            d[i, 0] = i
            ri = ref[i - 1]
            for j in range(1, m + 1):
                best = d[i - 1, j - 1]
                if ri != hyp[j - 1]:
                    best += 1
                dele = d[i - 1, j] + 1
                if dele < best:
                    best = dele
                ins = d[i, j - 1] + 1
                if ins < best:
                    best = ins
                d[i, j] = best
        subs = 0
        dels = 0
        ins = 0
        i = n
        j = m
        while i > 0 or j > 0:
            if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and d[i, j] == d[i - 1, j - 1]:
                i -= 1
                j -= 1
            elif i > 0 and j > 0 and d[i, j] == d[i - 1, j - 1] + 1:
                subs += 1
                i -= 1
                j -= 1
            elif i > 0 and d[i, j] == d[i - 1, j] + 1:
                dels += 1
                i -= 1
            else:
                ins += 1
                j -= 1
        return subs, dels, ins

    def levenshtein_counts_numba(ref_ids: np.ndarray, hyp_ids: np.ndarray) -> tuple[int, int, int]:
        """Numba-jitted kernel: full DP and backtrack in one nogil pass."""
        subs, dels, ins = _counts_numba(ref_ids, hyp_ids)
        return int(subs), int(dels), int(ins)

else:  # pragma: no cover - numba is a declared dependency
    levenshtein_counts_numba = None


def levenshtein_counts(ref_ids: np.ndarray, hyp_ids: np.ndarray) -> tuple[int, int, int]:
    """(S, D, I) of the minimum-edit alignment under the selected backend."""
    if BACKEND == "numba":
        return levenshtein_counts_numba(ref_ids, hyp_ids)
    return levenshtein_counts_numpy(ref_ids, hyp_ids)

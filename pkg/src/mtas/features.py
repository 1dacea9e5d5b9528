"""Frame-stacking downsampler for feature matrices.

Stacking every n consecutive frames along the feature axis trades sequence
length for width: a (frames, dim) matrix becomes (ceil(frames / n),
dim * n), with the trailing remainder zero-padded rather than dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .core import MtasError


@dataclass(frozen=True)
class StackConfig:
    """Stacking factor; 1 is the identity."""

    n: int = 10

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"stacking factor must be >= 1, got {self.n}")


@dataclass(frozen=True)
class FeatureMatrix:
    """A frame-major feature matrix: frames[t] is one feature vector."""

    frames: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.frames, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"frames must be 2-D (frames, dim), got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


def stack_frames(h: FeatureMatrix, cfg: StackConfig = StackConfig()) -> FeatureMatrix:
    """Concatenate every ``cfg.n`` consecutive frames into one wider frame.

    Output frame t holds input frames t*n .. t*n+n-1 in order; positions
    past the last input frame are zero. Output length is ceil(len / n), so
    no input value is ever dropped.
    """
    n = cfg.n
    if n == 1:
        return h
    num_frames, dim = h.frames.shape
    out_len = -(-num_frames // n)
    padded = np.zeros((out_len * n, dim), dtype=np.float64)
    padded[:num_frames] = h.frames
    return FeatureMatrix(padded.reshape(out_len, n * dim))


def read_feature_text(lines: Iterable[str]) -> FeatureMatrix:
    """Read the plain-text feature format: header "dim len", one frame per line."""
    it = iter(lines)
    try:
        header = next(it)
    except StopIteration:
        raise MtasError("feature text is empty") from None
    parts = header.split()
    if len(parts) != 2:
        raise MtasError(f"feature header must be 'dim len', got {header.strip()!r}")
    try:
        dim, length = int(parts[0]), int(parts[1])
    except ValueError:
        raise MtasError(f"non-integer feature header {header.strip()!r}") from None
    if dim < 1 or length < 0:
        raise MtasError(f"bad feature dimensions dim={dim} len={length}")
    rows = []
    for t in range(length):
        try:
            line = next(it)
        except StopIteration:
            raise MtasError(f"expected {length} frames, got {t}") from None
        values = line.split()
        if len(values) != dim:
            raise MtasError(f"frame {t}: expected {dim} values, got {len(values)}")
        try:
            row = [float(v) for v in values]
        except ValueError:
            raise MtasError(f"frame {t}: non-numeric value") from None
        if not all(np.isfinite(row)):
            raise MtasError(f"frame {t}: non-finite value")
        rows.append(row)
    data = np.array(rows, dtype=np.float64) if rows else np.zeros((0, dim))
    return FeatureMatrix(data)


def write_feature_text(matrix: FeatureMatrix, fp: TextIO) -> None:
    """Write the plain-text feature format; floats use shortest round-trip form."""
    fp.write(f"{matrix.dim} {matrix.num_frames}\n")
    for frame in matrix.frames:
        fp.write(" ".join(repr(float(v)) for v in frame) + "\n")

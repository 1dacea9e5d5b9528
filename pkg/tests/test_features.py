import io
import random

import numpy as np
import pytest

from mtas.core import MtasError
from mtas.features import (
    FeatureMatrix,
    StackConfig,
    read_feature_text,
    stack_frames,
    write_feature_text,
)


def test_stack_factor_ten_shape():
    m = FeatureMatrix(np.random.default_rng(0).normal(size=(20, 2)))
    out = stack_frames(m, StackConfig(10))
    assert out.dim == 20
    assert out.num_frames == 2


def test_stack_identity():
    m = FeatureMatrix(np.random.default_rng(1).normal(size=(7, 3)))
    out = stack_frames(m, StackConfig(1))
    assert np.array_equal(out.frames, m.frames)


def test_stack_zero_pads_remainder():
    m = FeatureMatrix(np.array([[1.0], [2.0], [3.0], [4.0], [5.0]]))
    out = stack_frames(m, StackConfig(2))
    assert out.num_frames == 3
    assert out.frames.tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 0.0]]


def test_stack_config_rejects_nonpositive():
    with pytest.raises(ValueError):
        StackConfig(0)


def test_stack_shape_law_and_value_preservation():
    rng = random.Random(61)
    for _ in range(100):
        num_frames = rng.randint(1, 23)
        dim = rng.randint(1, 6)
        n = rng.randint(1, 7)
        data = np.arange(1, num_frames * dim + 1, dtype=np.float64).reshape(
            num_frames, dim
        )
        out = stack_frames(FeatureMatrix(data), StackConfig(n))
        assert out.num_frames == -(-num_frames // n)
        assert out.dim == dim * n
        assert out.dim * out.num_frames >= dim * num_frames
        if num_frames % n == 0:
            assert out.dim * out.num_frames == dim * num_frames
        # every input value lands exactly at its predicted position
        for i in range(num_frames):
            t, k = divmod(i, n)
            assert np.array_equal(out.frames[t, k * dim : (k + 1) * dim], data[i])
        # and the padding is zero
        flat = out.frames.reshape(-1)
        assert np.count_nonzero(flat) == num_frames * dim


def test_feature_text_round_trip():
    m = FeatureMatrix(np.array([[0.5, -1.25], [3.0, 0.1]]))
    buf = io.StringIO()
    write_feature_text(m, buf)
    reread = read_feature_text(io.StringIO(buf.getvalue()))
    assert np.array_equal(reread.frames, m.frames)
    assert buf.getvalue().splitlines()[0] == "2 2"


def test_feature_text_errors():
    with pytest.raises(MtasError, match="empty"):
        read_feature_text([])
    with pytest.raises(MtasError, match="header"):
        read_feature_text(["3"])
    with pytest.raises(MtasError, match="expected 2 values"):
        read_feature_text(["2 1", "0.5"])
    with pytest.raises(MtasError, match="expected 2 frames"):
        read_feature_text(["1 2", "0.5"])
    with pytest.raises(MtasError, match="non-numeric"):
        read_feature_text(["1 1", "abc"])

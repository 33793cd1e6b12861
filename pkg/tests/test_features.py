import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from motionref.errors import DegeneratePoolError, ShapeError
from motionref.features import FeatureMatrix, FileProvider, HashProvider, encode_words, pool_sentence, project

from oracles import naive_affine


def test_same_text_same_seed_identical():
    a = encode_words("Target is in front", seed=3)
    b = encode_words("Target is in front", seed=3)
    assert a.data.tobytes() == b.data.tobytes()


def test_one_token_changes_one_row():
    a = encode_words("Target is on the left", seed=1)
    b = encode_words("Target is on the right", seed=1)
    diff = np.any(a.data != b.data, axis=1)
    assert diff.tolist() == [False, False, False, False, True]


def test_shape_and_mask():
    fm = encode_words("Target is in front", seed=0, dim=32)
    assert fm.data.shape == (4, 32)
    assert fm.mask.tolist() == [1, 1, 1, 1]
    assert np.all(np.abs(fm.data) <= 1.0)


def test_seed_changes_features():
    assert not np.array_equal(encode_words("ahead", 0).data, encode_words("ahead", 1).data)


def test_empty_text_gives_zero_rows():
    fm = encode_words("", seed=0, dim=8)
    assert fm.data.shape == (0, 8)


def test_deterministic_across_processes():
    code = (
        "from motionref.features import encode_words;"
        "print(encode_words('Target is ahead', seed=7, dim=16).data.tobytes().hex())"
    )
    outs = {subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout
            for _ in range(2)}
    assert len(outs) == 1
    assert outs.pop().strip() == encode_words("Target is ahead", seed=7, dim=16).data.tobytes().hex()


def test_pool_single_row():
    fm = FeatureMatrix(np.array([[1.0, -2.0, 3.0]]), [1])
    np.testing.assert_array_equal(pool_sentence(fm), [[1.0, -2.0, 3.0]])


def test_pool_ignores_masked_row():
    fm = FeatureMatrix(np.array([[1.0, 2.0], [50.0, 60.0]]), [1, 0])
    np.testing.assert_array_equal(pool_sentence(fm), [[1.0, 2.0]])


def test_pool_two_rows_mean():
    r1, r2 = np.array([0.3, -1.5, 2.25]), np.array([0.1, 0.5, -0.25])
    fm = FeatureMatrix(np.stack([r1, r2]), [1, 1])
    out = pool_sentence(fm)[0]
    for c in range(3):
        assert abs(out[c] - (r1[c] + r2[c]) / 2) <= 1e-12


def test_pool_all_masked_raises():
    with pytest.raises(DegeneratePoolError):
        pool_sentence(FeatureMatrix(np.ones((2, 3)), [0, 0]))


def test_feature_matrix_rejects_nan():
    with pytest.raises(ValueError):
        FeatureMatrix(np.array([[np.nan]]), [1])


def test_project_identity_and_bias():
    x = np.arange(12, dtype=float).reshape(3, 4)
    np.testing.assert_array_equal(project(x, np.eye(4), np.zeros(4)), x)
    b = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(project(x, np.zeros((4, 4)), b), np.tile(b, (3, 1)))


def test_project_against_loop_multiply():
    rng = np.random.default_rng(5)
    x, w, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 4)), rng.normal(size=4)
    expected = np.array(naive_affine(x.tolist(), w.tolist(), b.tolist()))
    assert np.max(np.abs(project(x, w, b) - expected)) <= 1e-12


def test_project_shape_mismatch():
    with pytest.raises(ShapeError):
        project(np.ones((2, 3)), np.ones((4, 4)), np.zeros(4))


rows = arrays(np.float64, (5, 6), elements=st.floats(-10, 10))


@given(rows)
def test_pool_all_ones_is_mean(data):
    fm = FeatureMatrix(data, np.ones(5))
    assert np.max(np.abs(pool_sentence(fm)[0] - data.mean(axis=0))) <= 1e-12


@given(rows, st.permutations(range(5)), st.lists(st.sampled_from([0, 1]), min_size=5, max_size=5))
def test_pool_permutation_invariant(data, perm, mask):
    if sum(mask) == 0:
        mask[0] = 1
    a = pool_sentence(FeatureMatrix(data, mask))
    b = pool_sentence(FeatureMatrix(data[list(perm)], np.array(mask)[list(perm)]))
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


@given(rows, rows, st.floats(-3, 3), st.floats(-3, 3))
def test_project_linear(a, b, alpha, beta):
    w = np.random.default_rng(0).normal(size=(6, 6))
    z = np.zeros(6)
    lhs = project(alpha * a + beta * b, w, z)
    rhs = alpha * project(a, w, z) + beta * project(b, w, z)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_file_provider_roundtrip(tmp_path):
    base = HashProvider(8, seed=2)
    table = {s: base.encode_words(s) for s in ("Target is ahead", "cars on the left")}
    p = FileProvider(table, 8)
    path = tmp_path / "features.json"
    p.dump(path)
    loaded = FileProvider.load(path)
    assert loaded.dim == 8
    for s, fm in table.items():
        np.testing.assert_array_equal(loaded.encode_words(s).data, fm.data)
    with pytest.raises(KeyError):
        loaded.encode_words("unknown sentence")
    fb = FileProvider.load(path, fallback=base)
    np.testing.assert_array_equal(fb.encode_words("other").data, base.encode_words("other").data)


def test_file_provider_declared_shape_checked(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"x": {"L": 2, "D": 3, "data": [1, 2, 3]}}')
    with pytest.raises(ShapeError):
        FileProvider.load(path)

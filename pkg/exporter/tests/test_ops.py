"""Export and verify semantics: clamping, softmax, difference reports."""

import numpy as np
import pytest

from semmap_exporter import (CategoryCountMismatch, DimensionMismatch,
                             MalformedInput, NoBackgroundCategory, RankError,
                             clamp_scores, export_tensor, load_categories,
                             load_tensor, read_semmap, softmax_rows,
                             verify_map)

CATS = ["background", "crop", "water"]


def tensor(h=4, w=5, n=3, seed=0, lo=-0.5, hi=1.5):
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=(h, w, n))


# --- export -----------------------------------------------------------------

def test_export_writes_clamped_float32(tmp_path):
    t = tensor(seed=3)
    path = tmp_path / "m.semmap"
    written = export_tensor(t, CATS, path)
    got, _ = read_semmap(path)
    assert got.dtype == np.float32
    assert np.array_equal(got, written)
    assert np.array_equal(got, np.clip(t.astype(np.float32), 0.0, 1.0))
    assert got.min() >= 0.0 and got.max() <= 1.0


def test_export_is_identity_on_already_clamped_input(tmp_path):
    t = np.random.default_rng(8).random((6, 3, 3), dtype=np.float32)
    path = tmp_path / "m.semmap"
    export_tensor(t, CATS, path)
    got, _ = read_semmap(path)
    assert np.array_equal(got, t)


@pytest.mark.parametrize("shape", [(4, 5), (2, 3, 3, 1), (6,)])
def test_export_rejects_wrong_rank(tmp_path, shape):
    with pytest.raises(RankError):
        export_tensor(np.zeros(shape), CATS, tmp_path / "m.semmap")


def test_export_rejects_count_and_background_problems(tmp_path):
    with pytest.raises(CategoryCountMismatch):
        export_tensor(tensor(n=4), CATS, tmp_path / "m.semmap")
    with pytest.raises(NoBackgroundCategory):
        export_tensor(tensor(), ["crop", "water", "sky"], tmp_path / "m.semmap")
    with pytest.raises(NoBackgroundCategory):
        export_tensor(tensor(), ["background", "background", "x"],
                      tmp_path / "m.semmap")


def test_export_rejects_non_finite(tmp_path):
    t = tensor()
    t[1, 1, 1] = np.nan
    with pytest.raises(MalformedInput):
        export_tensor(t, CATS, tmp_path / "m.semmap")


# --- softmax ----------------------------------------------------------------

def test_softmax_rows_sum_to_one():
    logits = tensor(seed=5, lo=-30.0, hi=30.0)
    probs = softmax_rows(logits)
    assert probs.shape == logits.shape
    assert probs.sum(axis=-1) == pytest.approx(np.ones((4, 5)), abs=1e-12)
    assert probs.min() > 0.0


def test_softmax_is_shift_invariant_and_order_preserving():
    logits = tensor(seed=6, lo=-4.0, hi=4.0)
    shifted = softmax_rows(logits + 123.0)
    assert shifted == pytest.approx(softmax_rows(logits), abs=1e-12)
    assert np.array_equal(np.argsort(softmax_rows(logits), axis=-1),
                          np.argsort(logits, axis=-1))


def test_softmax_survives_extreme_logits():
    logits = np.array([[[1e4, 0.0, -1e4]]])
    probs = softmax_rows(logits)
    assert np.all(np.isfinite(probs))
    assert probs[0, 0, 0] == pytest.approx(1.0)


def test_export_with_softmax_stores_normalized_rows(tmp_path):
    logits = tensor(seed=7, lo=-5.0, hi=5.0)
    path = tmp_path / "m.semmap"
    export_tensor(logits, CATS, path, softmax=True)
    got, _ = read_semmap(path)
    assert got.sum(axis=-1) == pytest.approx(np.ones((4, 5)), abs=1e-5)
    assert np.array_equal(got, clamp_scores(softmax_rows(logits)))


# --- verify -----------------------------------------------------------------

def test_verify_reports_zero_for_own_output(tmp_path):
    t = tensor(seed=11)
    path = tmp_path / "m.semmap"
    export_tensor(t, CATS, path)
    report = verify_map(path, t)
    assert report.max_abs_diff == 0.0
    assert report.ok
    assert (report.pixels, report.categories) == (20, 3)


def test_verify_measures_a_planted_difference(tmp_path):
    t = np.full((3, 3, 3), 0.5, dtype=np.float32)
    path = tmp_path / "m.semmap"
    export_tensor(t, CATS, path)
    bumped = t.copy()
    bumped[2, 1, 0] = 0.5 + 0.25
    report = verify_map(path, bumped)
    assert report.max_abs_diff == pytest.approx(0.25)
    assert not report.ok


def test_verify_tolerance_is_inclusive(tmp_path):
    t = np.full((2, 2, 3), 0.5, dtype=np.float32)
    path = tmp_path / "m.semmap"
    export_tensor(t, CATS, path)
    near = t + np.float32(5e-7)
    assert verify_map(path, near).ok
    far = t + np.float32(5e-5)
    assert not verify_map(path, far).ok


def test_verify_flags_nan_payload(tmp_path):
    # A damaged byte can decode as NaN; that must never count as a match.
    t = np.full((2, 2, 3), 0.5, dtype=np.float32)
    path = tmp_path / "m.semmap"
    export_tensor(t, CATS, path)
    data = bytearray(path.read_bytes())
    data[20:24] = np.float32(np.nan).tobytes()
    path.write_bytes(bytes(data))
    report = verify_map(path, t)
    assert not report.ok


def test_verify_rejects_shape_mismatch(tmp_path):
    path = tmp_path / "m.semmap"
    export_tensor(tensor(), CATS, path)
    with pytest.raises(DimensionMismatch):
        verify_map(path, tensor(h=5, w=4))
    with pytest.raises(RankError):
        verify_map(path, np.zeros((4, 5)))


def test_verify_applies_the_export_clamp_to_the_reference(tmp_path):
    # Out-of-range reference values compare against their clamped image.
    t = tensor(seed=13, lo=-2.0, hi=3.0)
    path = tmp_path / "m.semmap"
    export_tensor(t, CATS, path)
    assert verify_map(path, t).max_abs_diff == 0.0


# --- file loading -----------------------------------------------------------

def test_load_tensor_round_trips_npy(tmp_path):
    t = tensor(seed=17)
    path = tmp_path / "t.npy"
    np.save(path, t)
    assert np.array_equal(load_tensor(path), t)


def test_load_tensor_rejects_junk(tmp_path):
    bad = tmp_path / "t.npy"
    bad.write_bytes(b"not an array")
    with pytest.raises(MalformedInput):
        load_tensor(bad)
    strings = tmp_path / "s.npy"
    np.save(strings, np.array(["a", "b"]))
    with pytest.raises(MalformedInput):
        load_tensor(strings)


def test_load_categories_accepts_list_and_sidecar_object(tmp_path):
    bare = tmp_path / "bare.json"
    bare.write_text('["background", "crop"]')
    assert load_categories(bare) == ["background", "crop"]
    wrapped = tmp_path / "wrapped.json"
    wrapped.write_text('{"categories": ["background", "crop"]}')
    assert load_categories(wrapped) == ["background", "crop"]


def test_load_categories_rejects_bad_lists(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"categories": ["crop", "water"]}')
    with pytest.raises(NoBackgroundCategory):
        load_categories(path)
    path.write_text('"background"')
    with pytest.raises(MalformedInput):
        load_categories(path)

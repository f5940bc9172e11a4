from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from asmseg.imgfeat import (
    CONTRAST_MAX,
    FFT_LOG_MAX,
    FeatureConfig,
    FeatureError,
    FeatureVector,
    RawImage,
    contrast_map,
    extract_image_features,
    fft_log_magnitude,
    load_attribute_table,
    load_external_features,
    load_image,
    luma,
    save_attribute_table,
    save_external_features,
    save_image,
    train_class_attribute_model,
)
from asmseg.labelmap import AttributeVector

from oracles import naive_dft_magnitude

images = arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12), st.just(3)))


def _oracle_hist(values, bins, hi):
    counts = [0] * bins
    for v in values:
        counts[min(int(v / hi * bins), bins - 1)] += 1
    total = sum(counts)
    return [c / total for c in counts]


def test_default_layout_is_384():
    feats = extract_image_features(RawImage(np.zeros((4, 5, 3), dtype=np.uint8)))
    assert len(feats) == 384
    assert [b for _, b in feats.layout] == [64] * 6


def test_uniform_gray_image():
    feats = extract_image_features(RawImage(np.full((10, 10, 3), 128, dtype=np.uint8)))
    contrast = feats.block("contrast")
    assert contrast[0] == 1.0 and contrast[1:].sum() == 0.0
    assert np.count_nonzero(feats.block("brightness")) == 1


@settings(max_examples=30, deadline=None)
@given(images)
def test_blocks_are_distributions(px):
    feats = extract_image_features(RawImage(px))
    for name, _ in feats.layout:
        block = feats.block(name)
        assert np.all(block >= 0)
        assert math.isclose(block.sum(), 1.0, rel_tol=1e-12)


@settings(max_examples=30, deadline=None)
@given(images)
def test_value_ranges(px):
    y = luma(px)
    assert y.min() >= 0 and y.max() <= 255
    assert contrast_map(y).max() <= CONTRAST_MAX + 1e-12
    assert fft_log_magnitude(y).max() <= FFT_LOG_MAX + 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_fft_block_matches_naive_dft(seed):
    rng = np.random.default_rng(seed)
    h, w = (8, 8) if seed else (16, 16)
    px = np.zeros((h, w, 3), dtype=np.uint8)
    if seed == 0:
        px[3, 5] = 200  # single impulse
    else:
        px[:] = rng.integers(0, 256, size=(h, w, 3))
    y = luma(px)
    ref = naive_dft_magnitude(y.tolist())
    ref_log = sorted(math.log1p(v / y.size) for row in ref for v in row)
    got = np.sort(fft_log_magnitude(y).ravel())
    np.testing.assert_allclose(got, ref_log, atol=1e-9)
    feats = extract_image_features(RawImage(px), config=FeatureConfig(fft_bins=16))
    np.testing.assert_allclose(feats.block("fft"), _oracle_hist(ref_log, 16, FFT_LOG_MAX), atol=1e-12)


def test_color_and_brightness_match_oracle():
    rng = np.random.default_rng(3)
    px = rng.integers(0, 256, size=(7, 9, 3)).astype(np.uint8)
    feats = extract_image_features(RawImage(px), config=FeatureConfig(8, 8, 8, 8))
    for c, name in enumerate(("color_r", "color_g", "color_b")):
        ref = _oracle_hist([int(v) for v in px[..., c].ravel()], 8, 256.0)
        np.testing.assert_allclose(feats.block(name), ref)
    lum = [(int(r) + 2 * int(g) + int(b)) // 4 for r, g, b in px.reshape(-1, 3)]
    np.testing.assert_allclose(feats.block("brightness"), _oracle_hist(lum, 8, 256.0))


def test_window_equals_crop():
    rng = np.random.default_rng(0)
    image = RawImage(rng.integers(0, 256, size=(20, 30, 3)).astype(np.uint8))
    window = (4, 2, 17, 11)
    assert extract_image_features(image, window) == extract_image_features(image.crop(window))


@pytest.mark.parametrize("window", [(5, 2, 4, 8), (0, 0, 30, 5), (-1, 0, 3, 3)])
def test_bad_windows(window):
    image = RawImage(np.zeros((10, 30, 3), dtype=np.uint8))
    with pytest.raises(FeatureError):
        extract_image_features(image, window)


def test_image_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    image = RawImage(rng.integers(0, 256, size=(6, 7, 3)).astype(np.uint8))
    save_image(image, tmp_path / "x.ppm")
    assert np.array_equal(load_image(tmp_path / "x.ppm").pixels, image.pixels)


def test_external_features(tmp_path):
    layout = FeatureConfig().layout()
    vec = FeatureVector(np.linspace(0, 1, 384), layout)
    save_external_features(vec, tmp_path / "f.txt")
    assert load_external_features(tmp_path / "f.txt", layout) == vec

    (tmp_path / "short.txt").write_text("0.5\n" * 383)
    with pytest.raises(FeatureError, match="length mismatch"):
        load_external_features(tmp_path / "short.txt", layout)

    (tmp_path / "nan.txt").write_text("0.5\n" * 383 + "nan\n")
    with pytest.raises(FeatureError, match="non-finite"):
        load_external_features(tmp_path / "nan.txt", layout)


def test_attribute_means_simple():
    a = AttributeVector(*([0.2] * 10))
    b = AttributeVector(*([0.4] * 10))
    table = train_class_attribute_model([(1, a), (1, b), (2, a)])
    assert table[1] == pytest.approx([0.3] * 10)
    assert table[2] == a


def test_attribute_means_match_two_pass_oracle(tmp_path):
    rng = np.random.default_rng(5)
    regions = [(int(rng.integers(1, 4)), AttributeVector(*rng.random(10))) for _ in range(50)]
    table = train_class_attribute_model(regions)
    for label in table:
        members = [v for lab, v in regions if lab == label]
        for k in range(10):
            ref = math.fsum(v[k] for v in members) / len(members)
            assert abs(table[label][k] - ref) <= 1e-12
    save_attribute_table(table, tmp_path / "a.txt")
    assert load_attribute_table(tmp_path / "a.txt") == table


def test_attribute_model_needs_data():
    with pytest.raises(ValueError):
        train_class_attribute_model([])

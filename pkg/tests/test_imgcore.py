import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from rnaseg.imgcore import (AnnotationError, AnnotationSet, ImageReadError, load_annotations,
                            load_patch, save_annotations, save_patch, to_grayscale)
from rnaseg.synth import SynthConfig, generate


def test_white_pixel_png(tmp_path):
    p = tmp_path / "w.png"
    Image.fromarray(np.full((1, 1, 3), 255, np.uint8)).save(p)
    img = load_patch(p)
    assert img.shape == (1, 1, 3) and img.dtype == np.uint8
    assert img[0, 0].tolist() == [255, 255, 255]


def test_synth_patch_roundtrip(tmp_path):
    img, _ = generate(SynthConfig(seed=3, dots=10))
    save_patch(tmp_path / "p.png", img)
    back = load_patch(tmp_path / "p.png")
    assert back.shape == (480, 480, 3)
    assert np.array_equal(back, img)


def test_tiff_and_alpha(tmp_path, rng):
    rgba = rng.integers(0, 256, size=(5, 6, 4), dtype=np.uint8)
    Image.fromarray(rgba, mode="RGBA").save(tmp_path / "a.png")
    assert np.array_equal(load_patch(tmp_path / "a.png"), rgba[..., :3])
    Image.fromarray(rgba[..., :3]).save(tmp_path / "a.tif")
    assert np.array_equal(load_patch(tmp_path / "a.tif"), rgba[..., :3])


def test_truncated_file(tmp_path):
    img = np.zeros((20, 20, 3), np.uint8)
    save_patch(tmp_path / "t.png", img)
    data = (tmp_path / "t.png").read_bytes()
    (tmp_path / "t.png").write_bytes(data[: len(data) // 2])
    with pytest.raises(ImageReadError, match="unreadable"):
        load_patch(tmp_path / "t.png")


def test_sixteen_bit_rejected(tmp_path):
    Image.fromarray(np.zeros((4, 4), np.uint16) + 300).save(tmp_path / "d.png")
    with pytest.raises(ImageReadError):
        load_patch(tmp_path / "d.png")


@pytest.mark.parametrize("rgb, gray", [((255, 255, 255), 255), ((0, 0, 0), 0), ((255, 0, 0), 76)])
def test_grayscale_examples(rgb, gray):
    assert to_grayscale(np.array([[rgb]], np.uint8))[0, 0] == gray


@given(st.tuples(*[st.integers(0, 255)] * 3), st.integers(0, 2), st.integers(1, 255))
def test_grayscale_monotone(rgb, ch, bump):
    lo = np.array([[rgb]], np.uint8)
    hi = lo.copy()
    hi[0, 0, ch] = min(255, int(hi[0, 0, ch]) + bump)
    assert to_grayscale(hi)[0, 0] >= to_grayscale(lo)[0, 0]


def test_annotation_single_row(tmp_path):
    (tmp_path / "a.csv").write_text("x,y\n10,20\n")
    a = load_annotations(tmp_path / "a.csv")
    assert a.points.tolist() == [[10.0, 20.0]]


def test_annotation_malformed_row(tmp_path):
    (tmp_path / "a.csv").write_text("x,y\n10\n")
    with pytest.raises(AnnotationError, match="line 2"):
        load_annotations(tmp_path / "a.csv")


def test_annotation_out_of_bounds(tmp_path):
    (tmp_path / "a.csv").write_text("x,y\n1,1\n50,3\n")
    with pytest.raises(AnnotationError, match="line 3"):
        load_annotations(tmp_path / "a.csv", shape=(10, 10))


def test_annotation_bad_header(tmp_path):
    (tmp_path / "a.csv").write_text("a,b\n1,1\n")
    with pytest.raises(AnnotationError, match="line 1"):
        load_annotations(tmp_path / "a.csv")


def test_synth_annotations_roundtrip(tmp_path):
    _, truth = generate(SynthConfig(seed=5, dots=30))
    save_annotations(tmp_path / "t.csv", truth)
    assert load_annotations(tmp_path / "t.csv", source=truth.source) == truth


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 99, allow_nan=False), st.floats(0, 49, allow_nan=False)),
                max_size=20, unique=True))
def test_annotation_roundtrip_property(tmp_path_factory, pts):
    path = tmp_path_factory.mktemp("ann") / "p.csv"
    s = AnnotationSet(np.array(pts).reshape(-1, 2), source="p")
    save_annotations(path, s)
    assert load_annotations(path, shape=(50, 100)) == s


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_png_roundtrip_lossless(tmp_path_factory, h, w, seed):
    img = np.random.default_rng(seed).integers(0, 256, size=(h, w, 3), dtype=np.uint8)
    path = tmp_path_factory.mktemp("png") / "x.png"
    save_patch(path, img)
    assert np.array_equal(load_patch(path), img)

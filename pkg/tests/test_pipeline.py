import numpy as np
import pytest

from oracles import reflect
from polcnn.cnn import NetworkConfig, forward, init_weights
from polcnn.errors import DataError
from polcnn.pipeline import (LabelRaster, SampleSet, build_dataset, classify_image,
                             cross_site_remap, extract_patch, sample_training_pixels,
                             split_train_validation)
from polcnn.polsar import FeatureCube, scale_to_unit
from polcnn.rng import make_rng


def scaled_cube(c=3, h=12, w=10, seed=0, names=None):
    data = make_rng(seed).uniform(-30, 0, (c, h, w))
    names = names or [f"ch{i}" for i in range(c)]
    return scale_to_unit(FeatureCube(data, names, stage="db"))


def block_labels(h=40, w=30, classes=3):
    ids = np.zeros((h, w), dtype=int)
    for c in range(classes):
        ids[:, c * (w // classes):(c + 1) * (w // classes)] = c + 1
    ids[:2] = 0
    return LabelRaster(ids)


# -- sampling -----------------------------------------------------------------

def test_per_class_counts():
    labels = block_labels()
    s = sample_training_pixels(labels, per_class=50, seed=1)
    assert s.per_class() == {1: 50, 2: 50, 3: 50}
    assert np.all(labels.ids[s.y, s.x] == s.classes)
    assert len(set(zip(s.x.tolist(), s.y.tolist()))) == len(s)


def test_fraction_rounds_up():
    ids = np.zeros((50, 40), int)
    ids[:25] = 1  # 1000 pixels
    ids[25:26, :3] = 2  # 3 pixels
    s = sample_training_pixels(LabelRaster(ids), fraction=0.02, seed=0)
    assert s.per_class() == {1: 20, 2: 1}


def test_too_few_pixels():
    ids = np.zeros((5, 5), int)
    ids[0] = 1
    ids[1, :2] = 2
    labels = LabelRaster(ids, class_names=["water", "urban"])
    with pytest.raises(DataError, match="urban"):
        sample_training_pixels(labels, per_class=4)
    with pytest.warns(UserWarning):
        s = sample_training_pixels(labels, per_class=4, clamp=True)
    assert s.per_class() == {1: 4, 2: 2}


def test_sampling_arguments():
    labels = block_labels()
    with pytest.raises(DataError):
        sample_training_pixels(labels)
    with pytest.raises(DataError):
        sample_training_pixels(labels, per_class=5, fraction=0.1)
    with pytest.raises(DataError):
        sample_training_pixels(labels, fraction=1.5)
    with pytest.raises(DataError):
        sample_training_pixels(LabelRaster(np.zeros((3, 3), int)), per_class=1)


def test_sampling_deterministic():
    labels = block_labels()
    a = sample_training_pixels(labels, per_class=20, seed=5)
    b = sample_training_pixels(labels, per_class=20, seed=5)
    c = sample_training_pixels(labels, per_class=20, seed=6)
    np.testing.assert_array_equal(a.x, b.x)
    assert not np.array_equal(a.x, c.x)


def test_sample_set_invariants():
    with pytest.raises(DataError, match="duplicate"):
        SampleSet([1, 1], [2, 2], [1, 1], (5, 5))
    with pytest.raises(DataError):
        SampleSet([5], [0], [1], (5, 5))
    with pytest.raises(DataError):
        SampleSet([0], [0], [0], (5, 5))


# -- splitting ------------------------------------------------------------------

def test_split_half():
    s = sample_training_pixels(block_labels(), per_class=100, seed=0)
    train, val = split_train_validation(s, 0.5, seed=0)
    assert train.per_class() == {1: 50, 2: 50, 3: 50}
    assert val.per_class() == {1: 50, 2: 50, 3: 50}
    a = set(zip(train.x.tolist(), train.y.tolist()))
    b = set(zip(val.x.tolist(), val.y.tolist()))
    assert not a & b
    assert a | b == set(zip(s.x.tolist(), s.y.tolist()))


def test_split_floor_rule():
    s = SampleSet([0, 1, 2, 3], [0, 0, 0, 0], [1, 1, 1, 2], (1, 4))
    with pytest.warns(UserWarning):
        train, val = split_train_validation(s, 0.5)
    assert train.per_class() == {1: 2, 2: 1}
    assert val.per_class() == {1: 1}
    with pytest.raises(DataError):
        split_train_validation(s, 1.0)


# -- patches -----------------------------------------------------------------------

def test_interior_patch_is_slice():
    cube = scaled_cube()
    p = extract_patch(cube, 5, 6, 7)
    np.testing.assert_array_equal(p, cube.data[:, 3:10, 2:9].transpose(1, 2, 0))


@pytest.mark.parametrize("x, y", [(0, 0), (9, 11), (0, 5), (4, 0), (9, 0)])
def test_border_patch_reflects(x, y):
    cube = scaled_cube()
    n = 5
    p = extract_patch(cube, x, y, n)
    h, w = cube.shape
    for i in range(n):
        for j in range(n):
            yy, xx = reflect(y + i - 2, h), reflect(x + j - 2, w)
            np.testing.assert_array_equal(p[i, j], cube.data[:, yy, xx])


def test_corner_patch_duplicates_row_one():
    cube = scaled_cube()
    p = extract_patch(cube, 0, 0, 3)
    np.testing.assert_array_equal(p[0, 1], cube.data[:, 1, 0])
    np.testing.assert_array_equal(p[1, 0], cube.data[:, 0, 1])
    np.testing.assert_array_equal(p[1, 1], cube.data[:, 0, 0])


def test_patch_centre_everywhere():
    cube = scaled_cube(h=6, w=5)
    for y in range(6):
        for x in range(5):
            np.testing.assert_array_equal(extract_patch(cube, x, y, 9)[4, 4], cube.data[:, y, x])


def test_patch_errors():
    cube = scaled_cube()
    with pytest.raises(DataError):
        extract_patch(cube, 1, 1, 8)
    with pytest.raises(DataError):
        extract_patch(FeatureCube(cube.data, cube.names, stage="db"), 1, 1, 3)
    with pytest.raises(DataError):
        extract_patch(cube, 10, 0, 3)


def test_build_dataset_matches_extract_patch():
    cube = scaled_cube(h=40, w=30)
    s = sample_training_pixels(block_labels(), per_class=15, seed=3)
    patches, classes = build_dataset(cube, s, 7)
    assert patches.shape == (45, 7, 7, 3)
    np.testing.assert_array_equal(classes, s.classes - 1)
    for i in range(len(s)):
        np.testing.assert_array_equal(patches[i], extract_patch(cube, s.x[i], s.y[i], 7))


def test_build_dataset_empty_and_mismatch():
    cube = scaled_cube()
    empty = SampleSet([], [], [], cube.shape)
    patches, classes = build_dataset(cube, empty, 5)
    assert len(patches) == 0 and len(classes) == 0
    with pytest.raises(DataError):
        build_dataset(cube, SampleSet([0], [0], [1], (3, 3)), 5)


# -- classification -----------------------------------------------------------------

def _net(cube, window=5, seed=0):
    net = init_weights(NetworkConfig(input_channels=cube.data.shape[0], window=window,
                                     num_classes=3, seed=seed))
    net.channel_names = cube.names
    return net


def test_constant_cube_constant_labels():
    cube = scale_to_unit(FeatureCube(np.full((3, 8, 9), -7.0), ["a", "b", "c"], stage="db"))
    pred, scores = classify_image(_net(cube), cube)
    assert pred.shape == (8, 9)
    assert len(np.unique(pred.ids)) == 1


def test_classify_matches_patchwise_forward():
    cube = scaled_cube(h=9, w=7)
    net = _net(cube)
    pred, scores = classify_image(net, cube, rows_per_chunk=2)
    assert scores.shape == (3, 9, 7)
    np.testing.assert_array_equal(pred.ids, np.argmax(scores, 0) + 1)
    for y in range(9):
        for x in range(7):
            s, _ = forward(net, extract_patch(cube, x, y, 5))
            np.testing.assert_allclose(scores[:, y, x], s, rtol=1e-13, atol=1e-15)


def test_classify_is_pure():
    cube = scaled_cube()
    net = _net(cube)
    a, _ = classify_image(net, cube)
    b, _ = classify_image(net, cube, rows_per_chunk=1)
    np.testing.assert_array_equal(a.ids, b.ids)


def test_classify_channel_mismatch():
    cube = scaled_cube()
    net = _net(cube)
    other = scaled_cube(names=["T11", "T22", "T33"])
    with pytest.raises(DataError, match="T11"):
        classify_image(net, other)
    with pytest.raises(DataError):
        classify_image(net, cube, n=7)
    with pytest.raises(DataError):
        classify_image(_net(scaled_cube(c=4)), cube)


# -- remapping ------------------------------------------------------------------------

def test_remap_merge_preserves_counts():
    ids = np.array([[0, 1, 2, 3], [4, 4, 1, 2]])
    labels = LabelRaster(ids)
    out = cross_site_remap(labels, {1: 1, 2: 2, 3: 2, 4: 2})
    assert out.ids.tolist() == [[0, 1, 2, 2], [2, 2, 1, 2]]
    before = labels.counts()
    assert out.counts()[2] == before[2] + before[3] + before[4]


def test_remap_identity_and_drop():
    labels = LabelRaster(np.array([[0, 1, 2, 3]]))
    assert cross_site_remap(labels, {1: 1, 2: 2, 3: 3}).ids.tolist() == labels.ids.tolist()
    assert cross_site_remap(labels, {1: 1, 2: None, 3: 1}).ids.tolist() == [[0, 1, 0, 1]]


def test_remap_cropland_merge():
    crops = {"rapeseed": 1, "beet": 2, "wheat B": 3, "wheat C": 4, "peas": 5, "potato": 6}
    ids = np.arange(1, 7).reshape(2, 3)
    mapping = {crops[c]: 1 for c in ("rapeseed", "beet", "wheat B", "wheat C")}
    mapping.update({crops["peas"]: None, crops["potato"]: None})
    out = cross_site_remap(LabelRaster(ids), mapping)
    assert out.ids.tolist() == [[1, 1, 1], [1, 0, 0]]


def test_remap_unmapped():
    with pytest.raises(DataError, match="3"):
        cross_site_remap(LabelRaster(np.array([[1, 3]])), {1: 1})


def test_label_raster_validation():
    with pytest.raises(DataError):
        LabelRaster(np.array([[-1, 0]]))
    with pytest.raises(DataError):
        LabelRaster(np.array([[0.5]]))
    with pytest.raises(DataError):
        LabelRaster(np.zeros(3))

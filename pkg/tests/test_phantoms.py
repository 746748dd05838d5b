import numpy as np

from skelrecall import phantoms
from skelrecall.topology import betti


def test_rasterized_segment_is_connected_and_thin():
    rng = np.random.default_rng(0)
    for _ in range(20):
        segs = phantoms.line(rng, (40, 40))
        img = phantoms.paint((40, 40), segs)
        assert betti(img > 0).as_tuple() == (1, 0, 0)
        path = segs[0].path
        steps = np.abs(np.diff(path, axis=0)).max(axis=1)
        assert (steps == 1).all()


def test_tree_is_one_component():
    rng = np.random.default_rng(1)
    for shape in ((48, 48), (24, 24, 24)):
        img = phantoms.paint(shape, phantoms.tree(rng, shape), thickness=1)
        assert betti(img > 0).beta0 == 1


def test_cut_gaps_splits_lines():
    rng = np.random.default_rng(2)
    segs = phantoms.line(rng, (40, 40))
    img = phantoms.paint((40, 40), segs)
    cut, made = phantoms.cut_gaps(img, segs, rng, gap=3, count=1)
    assert made == 1
    assert (img > 0).sum() - (cut > 0).sum() == 3
    assert betti(cut > 0).beta0 == 2


def test_flip_band_stays_near_foreground():
    rng = np.random.default_rng(3)
    segs = phantoms.line(rng, (40, 40))
    img = phantoms.paint((40, 40), segs)
    noisy = phantoms.flip_band(img, rng, 0.3)
    changed = noisy != img
    assert changed.any()
    from scipy import ndimage

    band = ndimage.binary_dilation(img > 0, structure=np.ones((3, 3)))
    assert not (changed & ~band).any()
    assert np.array_equal(phantoms.flip_band(img, rng, 0.0), img)

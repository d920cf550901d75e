import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localdom.errors import EmptyDomain, TooSmall
from localdom.patches import (
    PatchSet,
    PatchSpec,
    crop_origin,
    extract_patches,
    sample_patch_centers,
    valid_center_bounds,
)
from localdom.priors import GeometricPrior, LocalDomainId


def _prior_from(mask):
    ids = sorted(set(np.unique(mask).tolist()) - {0})
    domains = tuple(LocalDomainId(i, f"d{i}") for i in ids)
    return GeometricPrior(mask=np.asarray(mask, dtype=np.int32), domains=domains, source="t")


def test_valid_center_bounds_64_16():
    assert valid_center_bounds(64, 16) == (8, 55)


def test_bounds_all_ones_indicator(rng):
    centers = sample_patch_centers(np.ones((64, 64)), PatchSpec(16, 5), rng)
    assert len(centers) == 5
    for r, c in centers:
        assert 8 <= r <= 55 and 8 <= c <= 55


def test_single_valid_pixel_repeats(rng):
    ind = np.zeros((64, 64), dtype=np.uint8)
    ind[20, 20] = 1
    centers = sample_patch_centers(ind, PatchSpec(8, 3), rng)
    assert centers == [(20, 20)] * 3


def test_empty_domain(rng):
    with pytest.raises(EmptyDomain):
        sample_patch_centers(np.zeros((32, 32)), PatchSpec(8, 2), rng)


def test_positive_pixels_only_outside_margin(rng):
    # the one positive pixel sits too close to the border for a 16px patch
    ind = np.zeros((32, 32), dtype=np.uint8)
    ind[2, 2] = 1
    with pytest.raises(EmptyDomain):
        sample_patch_centers(ind, PatchSpec(16, 1), rng)


def test_patch_larger_than_image(rng):
    with pytest.raises(TooSmall):
        sample_patch_centers(np.ones((8, 8)), PatchSpec(16, 1), rng)


def test_sampling_deterministic():
    ind = (np.random.default_rng(3).random((48, 48)) > 0.5).astype(np.uint8)
    a = sample_patch_centers(ind, PatchSpec(8, 20), np.random.default_rng(42))
    b = sample_patch_centers(ind, PatchSpec(8, 20), np.random.default_rng(42))
    assert a == b


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    size=st.sampled_from([4, 8, 12]),
    m=st.integers(1, 8),
)
def test_centers_always_valid(seed, size, m):
    """Every sampled center is a positive pixel with its crop in-bounds."""
    gen = np.random.default_rng(seed)
    ind = (gen.random((40, 40)) > 0.8).astype(np.uint8)
    spec = PatchSpec(size, m)
    r0, r1 = valid_center_bounds(40, size)
    try:
        centers = sample_patch_centers(ind, spec, gen)
    except EmptyDomain:
        interior = ind[r0 : r1 + 1, r0 : r1 + 1]
        assert interior.sum() == 0
        return
    for r, c in centers:
        assert ind[r, c] == 1
        assert r0 <= r <= r1 and r0 <= c <= r1
        top, left = crop_origin((r, c), size)
        assert top >= 0 and left >= 0
        assert top + size <= 40 and left + size <= 40


def test_extract_aligned_with_indicator(rng):
    image = rng.random((40, 40, 3)).astype(np.float32)
    mask = np.zeros((40, 40), dtype=np.int32)
    mask[10:30, 10:30] = 1
    prior = _prior_from(mask)
    pset, mset = extract_patches(image, prior, "d1", PatchSpec(8, 6), rng)
    assert len(pset) == len(mset) == 6
    for p, m in zip(pset, mset):
        assert p.center == m.center
        top, left = crop_origin(p.center, 8)
        assert (p.pixels == image[top : top + 8, left : left + 8]).all()
        ind = (mask == 1).astype(np.uint8)
        assert (m.pixels == ind[top : top + 8, left : left + 8]).all()
        assert m.pixels[4, 4] == 1  # center pixel belongs to the domain


def test_extract_constant_image(rng):
    image = np.full((32, 32), 0.5, dtype=np.float32)
    mask = np.ones((32, 32), dtype=np.int32)
    pset, mset = extract_patches(image, _prior_from(mask), "d1", PatchSpec(8, 4), rng)
    for p, m in zip(pset, mset):
        assert (p.pixels == 0.5).all()
        assert (m.pixels == 1).all()


def test_extract_both_fixed_domains(rng):
    from localdom.priors import CenterFocusRule, build_prior

    rule = CenterFocusRule(
        center=LocalDomainId(1, "in_focus"), corners=LocalDomainId(2, "out_of_focus")
    )
    prior = build_prior((64, 64), rule)
    image = rng.random((64, 64, 3)).astype(np.float32)
    focus, _ = extract_patches(image, prior, "in_focus", PatchSpec(16, 4), rng)
    blur, _ = extract_patches(image, prior, "out_of_focus", PatchSpec(16, 4), rng)
    assert len(focus) == 4 and len(blur) == 4
    assert focus.domain.id == 1 and blur.domain.id == 2


def test_few_shot_patch_count(rng):
    """15 images at 30 patches each pool to exactly 450."""
    mask = np.zeros((48, 48), dtype=np.int32)
    mask[16:32] = 1
    prior = _prior_from(mask)
    pool = PatchSet()
    for i in range(15):
        img = rng.random((48, 48, 3)).astype(np.float32)
        pset, _ = extract_patches(img, prior, "d1", PatchSpec(8, 30), rng, image_id=str(i))
        pool.extend(pset)
    assert len(pool) == 450
    assert pool.stack().shape == (450, 8, 8, 3)


def test_extend_rejects_mixed_sizes(rng):
    mask = np.ones((32, 32), dtype=np.int32)
    prior = _prior_from(mask)
    img = rng.random((32, 32, 3)).astype(np.float32)
    a, _ = extract_patches(img, prior, "d1", PatchSpec(8, 2), rng)
    b, _ = extract_patches(img, prior, "d1", PatchSpec(12, 2), rng)
    with pytest.raises(ValueError):
        a.extend(b)


def test_spec_validation():
    with pytest.raises(ValueError):
        PatchSpec(0, 5)
    with pytest.raises(ValueError):
        PatchSpec(8, 0)

import numpy as np
import pytest
import torch

from localdom.errors import BadSchema
from localdom.gan.training import GanConfig, train_patch_gan, write_loss_log
from localdom.patches import MaskPatchSet, Patch, PatchSet
from localdom.priors import LocalDomainId
from localdom.translator import translate

STRIPE = LocalDomainId(1, "stripe")
GROUND = LocalDomainId(2, "ground")


def _stripe_patch(gen, size=16):
    """Noisy gray square with one bright vertical band through the middle."""
    img = 0.35 + 0.05 * gen.random((size, size, 3))
    band = np.zeros((size, size), dtype=np.uint8)
    lo, hi = size // 2 - 2, size // 2 + 2
    band[:, lo:hi] = 1
    img[:, lo:hi] += 0.45
    return np.clip(img, 0, 1).astype(np.float32), band


def _plain_patch(gen, size=16):
    return (0.35 + 0.05 * gen.random((size, size, 3))).astype(np.float32)


def make_stripe_pools(n=48, size=16, seed=0):
    gen = np.random.default_rng(seed)
    src = PatchSet(domain=STRIPE, size=size)
    masks = MaskPatchSet(domain=STRIPE, size=size)
    tgt = PatchSet(domain=GROUND, size=size)
    for i in range(n):
        pix, band = _stripe_patch(gen, size)
        src.patches.append(Patch(pix, (size // 2, size // 2), str(i), STRIPE.id))
        masks.patches.append(Patch(band, (size // 2, size // 2), str(i), STRIPE.id))
        tgt.patches.append(Patch(_plain_patch(gen, size), (size // 2, size // 2), str(i), GROUND.id))
    return src, masks, tgt


def _band_contrast(img, band):
    on = img[band != 0].mean()
    off = img[band == 0].mean()
    return on - off


@pytest.fixture(scope="module")
def trained_stripe_gan():
    src, masks, tgt = make_stripe_pools()
    config = GanConfig(backbone="gated", steps=200, batch_size=8)
    state, bundle = train_patch_gan(src, tgt, config, np.random.default_rng(1), src_masks=masks)
    return src, masks, state, bundle


def test_stripe_contrast_halved(trained_stripe_gan):
    src, masks, state, bundle = trained_stripe_gan
    before, after = [], []
    for p, m in zip(src, masks):
        out = translate(bundle, p.pixels)
        before.append(_band_contrast(p.pixels, m.pixels))
        after.append(_band_contrast(out, m.pixels))
    assert np.mean(after) < 0.5 * np.mean(before)


def test_full_image_attenuation(trained_stripe_gan):
    # the generator is convolutional, so a 4x-larger image with several
    # bands is attenuated too, not only patch-sized inputs
    _, _, _, bundle = trained_stripe_gan
    gen = np.random.default_rng(5)
    img = 0.35 + 0.05 * gen.random((64, 64, 3))
    band = np.zeros((64, 64), dtype=np.uint8)
    for col in (6, 30, 54):
        band[:, col - 2 : col + 2] = 1
        img[:, col - 2 : col + 2] += 0.45
    img = np.clip(img, 0, 1).astype(np.float32)
    out = translate(bundle, img)
    assert out.shape == img.shape
    assert _band_contrast(out, band) < 0.5 * _band_contrast(img, band)


def test_zero_steps_identity():
    src, masks, tgt = make_stripe_pools(n=4)
    config = GanConfig(backbone="gated", steps=0)
    _, bundle = train_patch_gan(src, tgt, config, np.random.default_rng(0), src_masks=masks)
    x = src[0].pixels
    assert np.abs(translate(bundle, x) - x).max() < 1e-6


def test_training_determinism():
    src, masks, tgt = make_stripe_pools(n=8)
    rows = []
    for _ in range(2):
        config = GanConfig(backbone="gated", steps=50, batch_size=4)
        state, _ = train_patch_gan(
            src, tgt, config, np.random.default_rng(123), src_masks=masks
        )
        rows.append(state.loss_rows)
    assert rows[0] == rows[1]
    assert len(rows[0]) == 50


def test_translation_eval_deterministic(trained_stripe_gan):
    src, _, _, bundle = trained_stripe_gan
    a = translate(bundle, src[0].pixels)
    b = translate(bundle, src[0].pixels)
    assert (a == b).all()


def test_residual_backbone_trains():
    src, masks, tgt = make_stripe_pools(n=8)
    config = GanConfig(backbone="residual", steps=5, batch_size=4)
    state, bundle = train_patch_gan(src, tgt, config, np.random.default_rng(2))
    assert state.step == 5
    assert bundle.generator is not None
    for _, g, d, _ in state.loss_rows:
        assert np.isfinite(g) and np.isfinite(d)


def test_blur_recon_mode_trains():
    src, masks, tgt = make_stripe_pools(n=8)
    config = GanConfig(
        backbone="residual", steps=5, batch_size=4, recon_mode="blur", blur_sigma=(1.0, 2.0)
    )
    state, _ = train_patch_gan(src, tgt, config, np.random.default_rng(2))
    assert state.step == 5


def test_bad_recon_mode():
    src, masks, tgt = make_stripe_pools(n=4)
    config = GanConfig(backbone="gated", steps=1, recon_mode="splice")
    with pytest.raises(BadSchema):
        train_patch_gan(src, tgt, config, np.random.default_rng(0), src_masks=masks)


def test_paste_recon_requires_masks():
    src, _, tgt = make_stripe_pools(n=4)
    config = GanConfig(backbone="gated", steps=1)
    with pytest.raises(BadSchema):
        train_patch_gan(src, tgt, config, np.random.default_rng(0))


def test_mismatched_scale_counts():
    from localdom.errors import ShapeMismatch

    src, masks, tgt = make_stripe_pools(n=4)
    with pytest.raises(ShapeMismatch):
        train_patch_gan([src, src], tgt, GanConfig(steps=1), np.random.default_rng(0))


def test_loss_log_format(tmp_path):
    rows = [(0, 1.0, 2.0, 0.0), (1, 0.5, 1.5, 0.25)]
    path = tmp_path / "log.csv"
    write_loss_log(path, rows)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "step,loss_g,loss_d,loss_task"
    assert lines[1].startswith("0,1.00000000,2.00000000")
    assert len(lines) == 3


def test_task_loss_logged_after_warmup():
    src, masks, tgt = make_stripe_pools(n=8)
    config = GanConfig(
        backbone="residual",
        steps=6,
        batch_size=4,
        recon_mode="blur",
        task_weight=0.01,
        task_warmup=3,
        grad_clip=1.0,
    )
    state, _ = train_patch_gan(src, tgt, config, np.random.default_rng(3))
    tasks = [row[3] for row in state.loss_rows]
    assert all(t == 0.0 for t in tasks[:3])
    assert any(t != 0.0 for t in tasks[3:])

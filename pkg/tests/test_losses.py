import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from localdom.gan import losses

# hand values from scripts/oracle_hand_values.py
KL_HALF_QUARTER = 0.14384103622589042
KL_DISJOINT = 18.420680743952367


def test_generator_loss_values():
    assert losses.generator_loss(torch.ones(4, 4)).item() == 0.0
    assert losses.generator_loss(torch.full((3,), 0.5)).item() == pytest.approx(0.25)
    assert losses.generator_loss(torch.tensor([0.0, 2.0])).item() == pytest.approx(1.0)


def test_discriminator_loss_values():
    z = torch.zeros(5)
    o = torch.ones(5)
    assert losses.discriminator_loss(z, o).item() == 0.0
    assert losses.discriminator_loss(o, o).item() == pytest.approx(1.0)
    got = losses.discriminator_loss(torch.tensor([1.0, -1.0]), torch.tensor([0.0]))
    assert got.item() == pytest.approx(2.0)


def test_loss_optima_double_precision():
    g = losses.generator_loss(torch.ones(8, 8, dtype=torch.float64))
    d = losses.discriminator_loss(
        torch.zeros(8, dtype=torch.float64), torch.ones(8, dtype=torch.float64)
    )
    assert abs(g.item()) <= 1e-12
    assert abs(d.item()) <= 1e-12


def test_hard_histogram_constant():
    img = torch.zeros(1, 8, 8)
    h = losses.histogram(img, 4)
    assert torch.equal(h, torch.tensor([[1.0, 0.0, 0.0, 0.0]]))


def test_hard_histogram_half_half():
    img = torch.cat([torch.zeros(1, 4, 8), torch.ones(1, 4, 8)], dim=1)
    h = losses.histogram(img, 2)
    assert torch.allclose(h, torch.tensor([[0.5, 0.5]]))


def test_hard_histogram_ramp_uniform():
    # 256 evenly spaced values land one per bin, so the histogram is flat
    ramp = torch.linspace(0, 1, 257)[:-1].reshape(1, 16, 16) + 1.0 / 512
    h = losses.histogram(ramp, 256)[0]
    assert (h.max() - h.min()).item() < 2.0 / 256


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 9999), soft=st.booleans())
def test_histogram_sums_to_one(seed, soft):
    img = torch.from_numpy(np.random.default_rng(seed).random((3, 6, 6)))
    h = losses.histogram(img, 16, soft=soft)
    assert h.shape == (3, 16)
    assert torch.allclose(h.sum(dim=1), torch.ones(3, dtype=h.dtype))
    assert (h >= 0).all()


def test_histogram_kl_identical_zero():
    h = losses.histogram(torch.rand(1, 8, 8), 8)
    assert losses.histogram_kl(h, h).item() <= 1e-12


def test_histogram_kl_hand_values():
    ref = torch.tensor([0.5, 0.5], dtype=torch.float64)
    gen = torch.tensor([0.25, 0.75], dtype=torch.float64)
    assert losses.histogram_kl(ref, gen).item() == pytest.approx(KL_HALF_QUARTER, abs=1e-12)
    one_hot = torch.tensor([1.0, 0.0], dtype=torch.float64)
    flipped = torch.tensor([0.0, 1.0], dtype=torch.float64)
    got = losses.histogram_kl(one_hot, flipped, eps=1e-8)
    assert got.item() == pytest.approx(KL_DISJOINT, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 9999))
def test_histogram_kl_nonnegative(seed):
    gen = np.random.default_rng(seed)
    a = losses.histogram(torch.from_numpy(gen.random((1, 5, 5))), 8)
    b = losses.histogram(torch.from_numpy(gen.random((1, 5, 5))), 8)
    assert losses.histogram_kl(a, b).item() >= 0.0


def test_histogram_shape_mismatch():
    with pytest.raises(ValueError):
        losses.histogram_kl(torch.rand(1, 8), torch.rand(1, 4))


def test_luminance_weights():
    img = torch.zeros(3, 2, 2)
    img[0] = 1.0
    assert torch.allclose(losses.luminance(img), torch.full((2, 2), 0.299))
    gray = torch.rand(1, 4, 4)
    assert torch.equal(losses.luminance(gray), gray[0])
    with pytest.raises(ValueError):
        losses.luminance(torch.rand(2, 4, 4))


def test_focus_constant_zero():
    assert losses.log_variance_focus(torch.full((3, 16, 16), 0.3)).item() == pytest.approx(0.0, abs=1e-12)


def test_focus_sharp_vs_blurred():
    tile = torch.tensor([[1.0, 0.0], [0.0, 1.0]])
    board = tile.repeat(8, 8).unsqueeze(0)
    blurred = losses.gaussian_blur(board.unsqueeze(0).repeat(1, 1, 1, 1), 1.0)[0]
    assert losses.log_variance_focus(board) > losses.log_variance_focus(blurred)


def test_focus_noise_blur_ratio():
    noise = torch.from_numpy(
        np.random.default_rng(0).random((64, 64)).astype(np.float64)
    ).unsqueeze(0)
    blurred = losses.gaussian_blur(noise.unsqueeze(0), 2.0)[0]
    ratio = losses.log_variance_focus(noise) / losses.log_variance_focus(blurred)
    assert ratio.item() > 5.0


def test_deblur_loss_identity_case():
    x = torch.from_numpy(np.random.default_rng(2).random((3, 16, 16)))
    total = losses.deblur_loss(x, x, soft=False)
    focus = 1.0 / (losses.log_variance_focus(x) + 1e-6)
    assert total.item() == pytest.approx(focus.item(), rel=1e-9)


def test_deblur_loss_constant_output_dominated_by_focus():
    x = torch.rand(3, 16, 16)
    g = torch.full_like(x, 0.5)
    assert losses.deblur_loss(x, g).item() > 1e5  # 1/eps_f dominates


def test_deblur_loss_prefers_sharp():
    x = torch.from_numpy(np.random.default_rng(4).random((3, 24, 24)))
    blurred = losses.gaussian_blur(x.unsqueeze(0), 2.0)[0]
    assert losses.deblur_loss(x, blurred) > losses.deblur_loss(x, x)


def test_color_jitter_zero_ranges_noop(rng):
    patch = torch.rand(3, 8, 8)
    out = losses.color_jitter(patch, rng)
    assert out is patch


def test_color_jitter_brightness_shift():
    class FixedRng:
        def uniform(self, lo, hi):
            return hi

    patch = torch.full((3, 4, 4), 0.5)
    out = losses.color_jitter(patch, FixedRng(), brightness=0.1)
    assert torch.allclose(out, torch.full((3, 4, 4), 0.6))


def test_color_jitter_contrast_formula():
    class FixedRng:
        def uniform(self, lo, hi):
            return hi

    patch = torch.tensor([0.25, 0.75]).reshape(1, 1, 2)
    out = losses.color_jitter(patch, FixedRng(), contrast=0.5)
    assert torch.allclose(out, torch.tensor([0.125, 0.875]).reshape(1, 1, 2))


def test_color_jitter_clamped_and_deterministic():
    patch = torch.rand(3, 8, 8)
    a = losses.color_jitter(patch, np.random.default_rng(9), brightness=0.5, contrast=0.3, hue=0.2)
    b = losses.color_jitter(patch, np.random.default_rng(9), brightness=0.5, contrast=0.3, hue=0.2)
    assert torch.equal(a, b)
    assert a.min() >= 0.0 and a.max() <= 1.0


def test_gaussian_blur_shape_and_smoothing():
    batch = torch.from_numpy(np.random.default_rng(1).random((2, 3, 16, 16)))
    out = losses.gaussian_blur(batch, 1.5)
    assert out.shape == batch.shape
    assert out.var() < batch.var()
    with pytest.raises(ValueError):
        losses.gaussian_blur(batch[0], 1.0)


def _finite_difference(f, x, h=1e-4):
    grad = torch.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + h
        up = f(x).item()
        flat[i] = orig - h
        down = f(x).item()
        flat[i] = orig
        gflat[i] = (up - down) / (2 * h)
    return grad


def _max_rel_error(analytic, numeric):
    denom = max(analytic.abs().max().item(), numeric.abs().max().item(), 1e-12)
    return (analytic - numeric).abs().max().item() / denom


def test_gradcheck_generator_loss():
    x = torch.from_numpy(np.random.default_rng(7).random((8, 8))).requires_grad_(True)
    loss = losses.generator_loss(x)
    loss.backward()
    numeric = _finite_difference(losses.generator_loss, x.detach().clone())
    assert _max_rel_error(x.grad, numeric) < 1e-3


def test_gradcheck_soft_histogram_kl():
    gen = np.random.default_rng(8)
    ref = losses.histogram(torch.from_numpy(gen.random((1, 8, 8))), 8, soft=True)

    def f(img):
        return losses.histogram_kl(ref, losses.histogram(img, 8, soft=True))

    x = torch.from_numpy(gen.random((1, 8, 8))).requires_grad_(True)
    f(x).backward()
    numeric = _finite_difference(f, x.detach().clone())
    assert _max_rel_error(x.grad, numeric) < 1e-3


def test_gradcheck_focus_term():
    def f(img):
        return 1.0 / (losses.log_variance_focus(img) + 1e-6)

    x = torch.from_numpy(np.random.default_rng(9).random((1, 8, 8))).requires_grad_(True)
    f(x).backward()
    numeric = _finite_difference(f, x.detach().clone())
    assert _max_rel_error(x.grad, numeric) < 1e-3

"""Training losses: least-squares adversarial terms, differentiable color
histograms, and a sharpness objective built on the Laplacian-of-Gaussian.

All functions accept float32 or float64 tensors and keep the input dtype, so
unit tests can evaluate exact optima and finite differences in double
precision.
"""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn.functional as F

EPS_HIST = 1e-8  # histogram floor before the log
EPS_FOCUS = 1e-6  # added to the LoG variance before taking the reciprocal
SIGMA_LOG = 1.0  # gaussian smoothing scale of the sharpness measure

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def generator_loss(fake_scores: torch.Tensor) -> torch.Tensor:
    """Least-squares generator objective: push critic scores toward 1."""
    return ((fake_scores - 1.0) ** 2).mean()


def discriminator_loss(
    fake_scores: torch.Tensor, real_scores: torch.Tensor
) -> torch.Tensor:
    """Least-squares critic objective: fakes toward 0, reals toward 1."""
    return (fake_scores**2).mean() + ((real_scores - 1.0) ** 2).mean()


def _as_channels(image: torch.Tensor) -> torch.Tensor:
    if image.dim() == 2:
        return image.unsqueeze(0)
    if image.dim() == 3:
        return image
    raise ValueError("expected a (H, W) or (C, H, W) tensor")


def histogram(
    image: torch.Tensor,
    bins: int,
    soft: bool = False,
    bandwidth: float | None = None,
) -> torch.Tensor:
    """Per-channel normalized histogram of values in [0, 1], shape (C, bins).

    The hard variant uses floor binning (value 1.0 lands in the last bin).
    The soft variant spreads each value over bins with a gaussian kernel of
    the given bandwidth (default one bin width), which keeps the histogram
    differentiable for training.
    """
    img = _as_channels(image)
    c = img.shape[0]
    flat = img.reshape(c, -1)
    if soft:
        bw = 1.0 / bins if bandwidth is None else float(bandwidth)
        centers = (torch.arange(bins, dtype=img.dtype, device=img.device) + 0.5) / bins
        # (C, N, bins) kernel weights, normalized per pixel then averaged
        d = (flat.unsqueeze(-1) - centers) / bw
        w = torch.exp(-0.5 * d * d)
        w = w / w.sum(dim=-1, keepdim=True)
        return w.mean(dim=1)
    idx = torch.clamp((flat * bins).floor().long(), 0, bins - 1)
    hist = torch.zeros(c, bins, dtype=img.dtype, device=img.device)
    hist.scatter_add_(1, idx, torch.ones_like(flat))
    return hist / flat.shape[1]


def histogram_kl(
    h_ref: torch.Tensor, h_gen: torch.Tensor, eps: float = EPS_HIST
) -> torch.Tensor:
    """KL divergence of h_ref from h_gen in nats, averaged over channels.

    h_gen is floored at eps before the log; 0 * log 0 is taken as 0, so the
    divergence is exactly zero for histograms equal after flooring.
    """
    if h_ref.shape != h_gen.shape:
        raise ValueError("histogram shapes differ")
    ref = h_ref if h_ref.dim() == 2 else h_ref.unsqueeze(0)
    gen = h_gen if h_gen.dim() == 2 else h_gen.unsqueeze(0)
    gen = torch.clamp(gen, min=eps)
    per_channel = torch.special.xlogy(ref, ref / gen).sum(dim=1)
    return per_channel.mean()


def luminance(image: torch.Tensor) -> torch.Tensor:
    """Rec.601 luma of a (C, H, W) tensor; single channel passes through."""
    img = _as_channels(image)
    if img.shape[0] == 1:
        return img[0]
    if img.shape[0] != 3:
        raise ValueError("luminance expects 1 or 3 channels")
    r, g, b = LUMA_WEIGHTS
    return r * img[0] + g * img[1] + b * img[2]


def _gaussian_kernel1d(sigma: float, dtype, device) -> torch.Tensor:
    radius = max(1, int(math.ceil(3.0 * sigma)))
    x = torch.arange(-radius, radius + 1, dtype=dtype, device=device)
    k = torch.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(batch: torch.Tensor, sigma: float) -> torch.Tensor:
    """Separable gaussian blur of a (B, C, H, W) batch, reflect padding."""
    if batch.dim() != 4:
        raise ValueError("expected a (B, C, H, W) tensor")
    c = batch.shape[1]
    k = _gaussian_kernel1d(sigma, batch.dtype, batch.device)
    r = (k.numel() - 1) // 2
    x = F.pad(batch, (r, r, 0, 0), mode="reflect")
    x = F.conv2d(x, k.view(1, 1, 1, -1).expand(c, 1, 1, -1), groups=c)
    x = F.pad(x, (0, 0, r, r), mode="reflect")
    x = F.conv2d(x, k.view(1, 1, -1, 1).expand(c, 1, -1, 1), groups=c)
    return x


def _log_response(gray: torch.Tensor, sigma: float) -> torch.Tensor:
    """Laplacian of the gaussian-smoothed image, reflect padding."""
    x = gray.unsqueeze(0).unsqueeze(0)
    k = _gaussian_kernel1d(sigma, gray.dtype, gray.device)
    r = (k.numel() - 1) // 2
    x = F.pad(x, (r, r, 0, 0), mode="reflect")
    x = F.conv2d(x, k.view(1, 1, 1, -1))
    x = F.pad(x, (0, 0, r, r), mode="reflect")
    x = F.conv2d(x, k.view(1, 1, -1, 1))
    lap = torch.tensor(
        [[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]],
        dtype=gray.dtype,
        device=gray.device,
    )
    x = F.pad(x, (1, 1, 1, 1), mode="reflect")
    x = F.conv2d(x, lap.view(1, 1, 3, 3))
    return x[0, 0]


def log_variance_focus(image: torch.Tensor, sigma: float = SIGMA_LOG) -> torch.Tensor:
    """Variance of the Laplacian-of-Gaussian response; higher means sharper."""
    resp = _log_response(luminance(image), sigma)
    return resp.var(unbiased=False)


def deblur_loss(
    x: torch.Tensor,
    g_x: torch.Tensor,
    bins: int = 32,
    eps_focus: float = EPS_FOCUS,
    sigma: float = SIGMA_LOG,
    soft: bool = True,
) -> torch.Tensor:
    """Color-preserving sharpness objective for the translated patch g_x.

    Sum of the histogram KL between input and output colors and the
    reciprocal LoG variance of the output. Soft histograms keep the color
    term differentiable during training.
    """
    h_ref = histogram(x.detach() if x.requires_grad else x, bins, soft=soft)
    h_gen = histogram(g_x, bins, soft=soft)
    kl = histogram_kl(h_ref, h_gen)
    focus = 1.0 / (log_variance_focus(g_x, sigma) + eps_focus)
    return kl + focus


def _hue_matrix(theta: float, dtype, device) -> torch.Tensor:
    """Rotation of RGB space about the gray axis by theta radians."""
    s = 1.0 / math.sqrt(3.0)
    k = torch.tensor(
        [[0.0, -s, s], [s, 0.0, -s], [-s, s, 0.0]], dtype=dtype, device=device
    )
    outer = torch.full((3, 3), 1.0 / 3.0, dtype=dtype, device=device)
    eye = torch.eye(3, dtype=dtype, device=device)
    return eye * math.cos(theta) + k * math.sin(theta) + outer * (1.0 - math.cos(theta))


def color_jitter(
    patch: torch.Tensor,
    rng: np.random.Generator,
    brightness: float = 0.0,
    contrast: float = 0.0,
    hue: float = 0.0,
) -> torch.Tensor:
    """Random brightness/contrast/hue perturbation, clamped to [0, 1].

    Parameters are drawn from the numpy generator so augmentation stays
    reproducible. Zero ranges are exact no-ops. Applies per sample for
    (N, C, H, W) input, to the single patch for (C, H, W).
    """
    if brightness == 0.0 and contrast == 0.0 and hue == 0.0:
        return patch
    batched = patch.dim() == 4
    batch = patch if batched else patch.unsqueeze(0)
    out = []
    for sample in batch:
        s = sample
        if brightness > 0.0:
            s = s + float(rng.uniform(-brightness, brightness))
        if contrast > 0.0:
            f = float(rng.uniform(1.0 - contrast, 1.0 + contrast))
            mean = s.mean(dim=(-2, -1), keepdim=True)
            s = (s - mean) * f + mean
        if hue > 0.0 and s.shape[0] == 3:
            theta = float(rng.uniform(-hue, hue)) * math.pi
            m = _hue_matrix(theta, s.dtype, s.device)
            s = torch.einsum("ij,jhw->ihw", m, s)
        out.append(torch.clamp(s, 0.0, 1.0))
    result = torch.stack(out, dim=0)
    return result if batched else result[0]

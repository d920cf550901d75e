"""Variational autoencoder over binary mask patches, plus latent
interpolation between two masks and the blending composite.

The encoder's reparametrized sample is part of encoding itself: stochastic
mode draws z = mu + sigma * eps, deterministic mode returns the posterior
mean. Decoded masks are sigmoid probabilities, so interpolated masks live
strictly inside (0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import OutOfRange, ShapeMismatch
from .seeding import torch_seed_from

BERNOULLI_EPS = 1e-6


@dataclass
class VaeConfig:
    patch_size: int = 32
    latent_dim: int = 64
    base_channels: int = 16
    steps: int = 800
    batch_size: int = 16
    lr: float = 1e-3
    kl_weight: float = 1.0


class MaskVae(nn.Module):
    """Conv encoder/decoder over (1, S, S) mask patches with a gaussian latent."""

    def __init__(self, patch_size: int = 32, latent_dim: int = 64, base: int = 16):
        super().__init__()
        if patch_size % 4 != 0:
            raise ValueError("patch_size must be divisible by 4")
        self.patch_size = patch_size
        self.latent_dim = latent_dim
        s = patch_size // 4
        self._flat = base * 2 * s * s
        self.enc = nn.Sequential(
            nn.Conv2d(1, base, 3, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(base, base * 2, 3, stride=2, padding=1),
            nn.LeakyReLU(0.2),
        )
        self.fc_mu = nn.Linear(self._flat, latent_dim)
        self.fc_logvar = nn.Linear(self._flat, latent_dim)
        self.fc_dec = nn.Linear(latent_dim, self._flat)
        self.dec = nn.Sequential(
            nn.ConvTranspose2d(base * 2, base, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.ConvTranspose2d(base, 1, 4, stride=2, padding=1),
        )
        self._dec_shape = (base * 2, s, s)

    def encode_params(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        h = self.enc(x).flatten(1)
        return self.fc_mu(h), self.fc_logvar(h)

    def encode(
        self,
        x: torch.Tensor,
        generator: Optional[torch.Generator] = None,
        deterministic: bool = True,
    ) -> torch.Tensor:
        """Posterior mean, or a reparametrized sample in stochastic mode."""
        mu, logvar = self.encode_params(x)
        if deterministic:
            return mu
        eps = torch.randn(mu.shape, generator=generator, dtype=mu.dtype)
        return mu + torch.exp(0.5 * logvar) * eps

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        h = self.fc_dec(z).reshape(z.shape[0], *self._dec_shape)
        return torch.sigmoid(self.dec(h))

    def forward(self, x, generator=None, deterministic=False):
        mu, logvar = self.encode_params(x)
        if deterministic:
            z = mu
        else:
            eps = torch.randn(mu.shape, generator=generator, dtype=mu.dtype)
            z = mu + torch.exp(0.5 * logvar) * eps
        return self.decode(z), mu, logvar


def gaussian_kl(mu: torch.Tensor, logvar: torch.Tensor) -> torch.Tensor:
    """Closed-form KL from N(mu, diag(exp(logvar))) to the standard normal.

    Summed over latent dimensions, averaged over the batch.
    """
    per_sample = 0.5 * (mu**2 + torch.exp(logvar) - logvar - 1.0).sum(dim=-1)
    return per_sample.mean()


def bernoulli_nll(
    target: torch.Tensor, probs: torch.Tensor, eps: float = BERNOULLI_EPS
) -> torch.Tensor:
    """Negative per-pixel Bernoulli log-likelihood, summed per sample.

    Probabilities are clamped to [eps, 1 - eps] so saturated outputs cannot
    produce infinities.
    """
    p = torch.clamp(probs, eps, 1.0 - eps)
    ll = target * torch.log(p) + (1.0 - target) * torch.log1p(-p)
    return -ll.flatten(1).sum(dim=1).mean()


def elbo_loss(
    target: torch.Tensor,
    probs: torch.Tensor,
    mu: torch.Tensor,
    logvar: torch.Tensor,
    kl_weight: float = 1.0,
) -> torch.Tensor:
    """Negative evidence lower bound: reconstruction NLL plus latent KL."""
    return bernoulli_nll(target, probs) + kl_weight * gaussian_kl(mu, logvar)


def _mask_batch(masks, patch_size: int) -> torch.Tensor:
    arrs = [np.asarray(getattr(m, "pixels", m), dtype=np.float32) for m in masks]
    for a in arrs:
        if a.shape != (patch_size, patch_size):
            raise ShapeMismatch(
                f"mask patch shape {a.shape} does not match VAE size {patch_size}"
            )
    return torch.from_numpy(np.stack(arrs)[:, None])


def train_mask_vae(
    masks,
    config: VaeConfig,
    rng: np.random.Generator,
) -> Tuple[MaskVae, List[dict]]:
    """Fit a MaskVae on a nonempty collection of binary mask patches.

    Returns the model in eval mode plus a per-step loss history. Training is
    deterministic given the rng.
    """
    if len(masks) == 0:
        raise ValueError("mask patch set is empty")
    torch.manual_seed(torch_seed_from(rng))
    model = MaskVae(config.patch_size, config.latent_dim, config.base_channels)
    data = _mask_batch(list(masks), config.patch_size)
    opt = torch.optim.Adam(model.parameters(), lr=config.lr)
    gen = torch.Generator().manual_seed(torch_seed_from(rng))
    history = []
    n = data.shape[0]
    for step in range(config.steps):
        idx = rng.integers(0, n, size=min(config.batch_size, n))
        batch = data[torch.from_numpy(idx)]
        probs, mu, logvar = model(batch, generator=gen)
        loss = elbo_loss(batch, probs, mu, logvar, config.kl_weight)
        opt.zero_grad()
        loss.backward()
        opt.step()
        history.append({"step": step, "elbo": float(loss.detach())})
    model.eval()
    return model, history


def reconstruction_iou(model: MaskVae, masks, threshold: float = 0.5) -> float:
    """Mean IoU of thresholded reconstructions against their inputs."""
    data = _mask_batch(list(masks), model.patch_size)
    with torch.no_grad():
        probs, _, _ = model(data, deterministic=True)
    pred = (probs[:, 0] > threshold).numpy()
    true = data[:, 0].numpy() > 0.5
    inter = np.logical_and(pred, true).sum(axis=(1, 2))
    union = np.logical_or(pred, true).sum(axis=(1, 2))
    # empty-mask pairs count as perfect agreement
    iou = np.where(union > 0, inter / np.maximum(union, 1), 1.0)
    return float(iou.mean())


def _as_mask_tensor(mask: np.ndarray, patch_size: int) -> torch.Tensor:
    arr = np.asarray(mask, dtype=np.float32)
    if arr.shape != (patch_size, patch_size):
        raise ShapeMismatch(
            f"mask shape {arr.shape} does not match VAE size {patch_size}"
        )
    return torch.from_numpy(arr)[None, None]


def interpolate_latent(
    model: MaskVae,
    mask_hi: np.ndarray,
    mask_lo: np.ndarray,
    z: float,
    rng: Optional[np.random.Generator] = None,
    deterministic: bool = True,
) -> torch.Tensor:
    """Latent code weighting mask_hi's encoding by z and mask_lo's by 1 - z.

    z = 1 returns exactly the encoding of mask_hi, z = 0 that of mask_lo.
    """
    if not (0.0 <= z <= 1.0):
        raise OutOfRange(f"interpolation weight z={z} outside [0, 1]")
    gen = None
    if not deterministic:
        seed_rng = rng if rng is not None else np.random.default_rng()
        gen = torch.Generator().manual_seed(torch_seed_from(seed_rng))
    with torch.no_grad():
        e_hi = model.encode(
            _as_mask_tensor(mask_hi, model.patch_size), gen, deterministic
        )
        e_lo = model.encode(
            _as_mask_tensor(mask_lo, model.patch_size), gen, deterministic
        )
    return e_hi * z + e_lo * (1.0 - z)


def interpolated_mask(
    model: MaskVae,
    mask_hi: np.ndarray,
    mask_lo: np.ndarray,
    z: float,
    rng: Optional[np.random.Generator] = None,
    deterministic: bool = True,
) -> np.ndarray:
    """Decoded soft mask for the interpolated latent, values in (0, 1)."""
    h = interpolate_latent(model, mask_hi, mask_lo, z, rng, deterministic)
    with torch.no_grad():
        probs = model.decode(h)
    return probs[0, 0].numpy().astype(np.float64)


def blend(
    x_alpha: np.ndarray, x_beta: np.ndarray, p_z: np.ndarray, gamma: float
) -> np.ndarray:
    """Composite x_alpha over x_beta with per-pixel weight gamma * p_z.

    gamma = 0 returns x_beta bit-exactly; gamma = 1 with p_z = 1 returns
    x_alpha bit-exactly. The result is clipped into the pixelwise envelope of
    the two inputs so float rounding cannot push it outside.
    """
    if not (0.0 <= gamma <= 1.0):
        raise OutOfRange(f"gamma={gamma} outside [0, 1]")
    a = np.asarray(x_alpha)
    b = np.asarray(x_beta)
    if a.shape != b.shape:
        raise ShapeMismatch(f"blend inputs differ in shape: {a.shape} vs {b.shape}")
    m = gamma * np.asarray(p_z, dtype=np.float64)
    if m.shape != a.shape[: m.ndim] and m.shape != a.shape:
        raise ShapeMismatch(f"mask shape {m.shape} does not match images {a.shape}")
    if a.ndim == 3 and m.ndim == 2:
        m = m[..., None]
    out = a * m + b * (1.0 - m)
    return np.clip(out, np.minimum(a, b), np.maximum(a, b))

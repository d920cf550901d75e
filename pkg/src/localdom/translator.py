"""Full-image inference: translate with a trained generator, interpolate the
edit mask through the VAE tile by tile, and composite strictly inside the
edited domain.

Pixels the prior does not assign to the edited domain are passed through
bit-exactly; all edits happen inside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch

from .errors import MissingVae, OutOfRange, ShapeMismatch, TooSmall
from .priors import GeometricPrior, LocalDomainId, indicator_mask
from .stitching import make_tile_plan, split_tiles, stitch_masks
from .vae import MaskVae, blend, interpolated_mask
from . import checkpoints
from .gan import networks

MIN_SIDE = 4  # one stride-2 stage needs at least this much context


@dataclass
class TranslatorBundle:
    """Everything needed to edit full images: generator, domain wiring, and
    (for interpolation tasks) the mask VAE with its two endpoint domains."""

    generator: torch.nn.Module
    backbone: str
    channels: int
    beta: LocalDomainId  # domain whose pixels may change
    alpha: LocalDomainId  # domain the translation imitates
    vae: Optional[MaskVae] = None
    interp_hi: Optional[str] = None  # indicator decoded at z = 1 (full edit)
    interp_lo: Optional[str] = None  # indicator decoded at z = 0
    overlap: int = 8

    def __post_init__(self):
        has_endpoints = self.interp_hi is not None and self.interp_lo is not None
        if (self.vae is not None) != has_endpoints:
            raise ValueError(
                "interpolation endpoints must be set exactly when a VAE is present"
            )

    @property
    def interpolates(self) -> bool:
        return self.vae is not None


def _to_tensor(image: np.ndarray) -> torch.Tensor:
    if image.ndim == 2:
        image = image[..., None]
    return torch.from_numpy(np.ascontiguousarray(image.astype(np.float32))).permute(
        2, 0, 1
    )[None]


def _to_image(t: torch.Tensor, squeeze: bool) -> np.ndarray:
    arr = t[0].permute(1, 2, 0).numpy()
    return arr[..., 0] if squeeze else arr


def translate(bundle: TranslatorBundle, image: np.ndarray) -> np.ndarray:
    """Run the generator over a whole image; output matches the input shape.

    Two calls on the same input are bit-identical: the generator runs in eval
    mode with gradients disabled.
    """
    image = np.asarray(image)
    h, w = image.shape[:2]
    if h < MIN_SIDE or w < MIN_SIDE:
        raise TooSmall(f"image {h}x{w} is below the minimum side {MIN_SIDE}")
    chans = 1 if image.ndim == 2 else image.shape[2]
    if chans != bundle.channels:
        raise ShapeMismatch(
            f"bundle expects {bundle.channels} channels, image has {chans}"
        )
    bundle.generator.eval()
    with torch.no_grad():
        out = bundle.generator(_to_tensor(image))
    return _to_image(out, squeeze=image.ndim == 2)


def binarized_difference(
    image: np.ndarray, translated: np.ndarray, threshold: float = 0.1
) -> np.ndarray:
    """Where the translation changed the image: channel-max |translated -
    image| thresholded to a uint8 mask."""
    image = np.asarray(image, dtype=np.float64)
    translated = np.asarray(translated, dtype=np.float64)
    if image.shape != translated.shape:
        raise ShapeMismatch("difference inputs disagree in shape")
    diff = np.abs(translated - image)
    if diff.ndim == 3:
        diff = diff.max(axis=2)
    return (diff > threshold).astype(np.uint8)


def exclude_foreground(
    original: np.ndarray, translated: np.ndarray, fg_mask: np.ndarray
) -> np.ndarray:
    """Keep original pixels wherever fg_mask is set."""
    original = np.asarray(original)
    translated = np.asarray(translated)
    fg = np.asarray(fg_mask)
    if original.shape != translated.shape or fg.shape != original.shape[:2]:
        raise ShapeMismatch("foreground exclusion inputs disagree in shape")
    out = translated.copy()
    out[fg != 0] = original[fg != 0]
    return out


def interpolation_mask(
    bundle: TranslatorBundle,
    prior: GeometricPrior,
    z: float,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Stitched per-pixel edit weight p_z over the full image.

    Each tile interpolates between the encodings of the two endpoint
    indicator crops; overlapping tiles are averaged uniformly.
    """
    if bundle.vae is None:
        raise MissingVae("bundle has no mask VAE")
    hi = indicator_mask(prior, bundle.interp_hi).astype(np.float32)
    lo = indicator_mask(prior, bundle.interp_lo).astype(np.float32)
    plan = make_tile_plan(prior.shape, bundle.vae.patch_size, bundle.overlap)
    hi_tiles = split_tiles(hi, plan)
    lo_tiles = split_tiles(lo, plan)
    deterministic = rng is None
    tiles = [
        interpolated_mask(bundle.vae, th, tl, z, rng, deterministic)
        for th, tl in zip(hi_tiles, lo_tiles)
    ]
    return stitch_masks(tiles, plan)


def hallucinate(
    bundle: TranslatorBundle,
    image: np.ndarray,
    prior: GeometricPrior,
    z: Optional[float] = None,
    gamma: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
    foreground: Optional[np.ndarray] = None,
    return_mask: bool = False,
):
    """Edit one image inside its beta region and pass everything else through.

    Interpolation tasks decode the edit weight p_z at strength z and blend
    with gamma; direct tasks replace the beta region with the translation.
    With gamma = 0 the output equals the input bit-exactly.
    """
    image = np.asarray(image)
    if image.shape[:2] != prior.shape:
        raise ShapeMismatch("image and prior shapes differ")
    if (z is not None or gamma is not None) and bundle.vae is None:
        raise MissingVae("interpolation parameters given for a bundle without a VAE")
    beta_region = indicator_mask(prior, bundle.beta) != 0
    y = translate(bundle, image)
    if foreground is not None:
        y = exclude_foreground(image, y, foreground)
    out = image.copy()
    p_z = None
    if bundle.interpolates:
        z = 1.0 if z is None else float(z)
        gamma = 1.0 if gamma is None else float(gamma)
        if not (0.0 <= z <= 1.0):
            raise OutOfRange(f"z={z} outside [0, 1]")
        if not (0.0 <= gamma <= 1.0):
            raise OutOfRange(f"gamma={gamma} outside [0, 1]")
        if gamma != 0.0:
            p_z = interpolation_mask(bundle, prior, z, rng)
            comp = blend(y, image, p_z, gamma)
            out[beta_region] = comp[beta_region]
        else:
            p_z = np.zeros(prior.shape)
    else:
        out[beta_region] = y[beta_region]
    if return_mask:
        return out, p_z
    return out


# ---------------------------------------------------------------------------
# Bundle persistence


def save_bundle(path, bundle: TranslatorBundle, step: int = 0, extra: dict | None = None):
    """Persist generator (+ VAE) weights with enough wiring to reload."""
    meta = {
        "kind": "bundle",
        "step": step,
        "backbone": bundle.backbone,
        "channels": bundle.channels,
        "gen_base": getattr(bundle.generator, "base", 8),
        "beta": {"id": bundle.beta.id, "name": bundle.beta.name},
        "alpha": {"id": bundle.alpha.id, "name": bundle.alpha.name},
        "interp_hi": bundle.interp_hi,
        "interp_lo": bundle.interp_lo,
        "overlap": bundle.overlap,
    }
    if bundle.vae is not None:
        meta["vae"] = {
            "patch_size": bundle.vae.patch_size,
            "latent_dim": bundle.vae.latent_dim,
            "base": bundle.vae.enc[0].out_channels,
        }
    if extra:
        meta.update(extra)
    arrays = {
        f"gen.{k}": v for k, v in checkpoints.state_dict_arrays(bundle.generator).items()
    }
    if bundle.vae is not None:
        arrays.update(
            {f"vae.{k}": v for k, v in checkpoints.state_dict_arrays(bundle.vae).items()}
        )
    checkpoints.save_archive(path, meta, arrays)


def load_bundle(path) -> TranslatorBundle:
    meta, arrays = checkpoints.load_archive(path)
    gen = networks.build_generator(
        channels=meta["channels"],
        backbone=meta["backbone"],
        base=meta.get("gen_base", 8),
    )
    checkpoints.load_state_dict_arrays(gen, arrays, prefix="gen.")
    gen.eval()
    vae = None
    if meta.get("vae"):
        v = meta["vae"]
        vae = MaskVae(v["patch_size"], v["latent_dim"], v["base"])
        checkpoints.load_state_dict_arrays(vae, arrays, prefix="vae.")
        vae.eval()
    return TranslatorBundle(
        generator=gen,
        backbone=meta["backbone"],
        channels=meta["channels"],
        beta=LocalDomainId(**meta["beta"]),
        alpha=LocalDomainId(**meta["alpha"]),
        vae=vae,
        interp_hi=meta.get("interp_hi"),
        interp_lo=meta.get("interp_lo"),
        overlap=meta.get("overlap", 8),
    )

"""Adversarial training over patch sets.

The residual backbone trains cycle-style (forward and backward generators
with cycle and identity terms); the gated backbone trains a single generator
whose off-domain pixels are pinned to the input by an L1 term, which suits
fill-in edits. Multi-scale patch sets are visited round-robin, one size per
step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from ..errors import BadSchema, Diverged, ShapeMismatch
from ..patches import MaskPatchSet, PatchSet
from ..seeding import torch_seed_from
from ..translator import TranslatorBundle
from . import losses, networks


@dataclass
class GanConfig:
    backbone: str = "residual"
    steps: int = 600
    batch_size: int = 8
    lr_g: float = 2e-4
    lr_d: float = 2e-4
    adv_weight: float = 1.0
    cycle_weight: float = 10.0  # residual backbone auxiliary terms
    identity_weight: float = 2.0
    recon_weight: float = 10.0  # gated backbone: restore paste-corrupted targets
    task_weight: float = 0.0  # > 0 enables the sharpness/color objective
    histogram_bins: int = 32
    jitter_brightness: float = 0.0
    jitter_contrast: float = 0.0
    jitter_hue: float = 0.0
    base_channels: int = 8
    recon_mode: str = ""  # "", "paste", "blur", "none"; "" = backbone default
    blur_sigma: Tuple[float, float] = (1.0, 2.5)  # blur-corruption range
    task_warmup: int = 0  # steps before the task loss engages
    grad_clip: float = 0.0  # max generator grad norm, 0 disables
    checkpoint_every: int = 0  # 0 disables periodic snapshots
    divergence_patience: int = 5

    def resolved_recon_mode(self) -> str:
        if self.recon_mode:
            return self.recon_mode
        return "paste" if self.backbone == "gated" else "none"


@dataclass
class TrainState:
    step: int
    models: Dict[str, torch.nn.Module]
    optimizers: Dict[str, torch.optim.Optimizer]
    loss_rows: List[tuple] = field(default_factory=list)  # (step, g, d, task)
    config: GanConfig | None = None


def _as_pools(sets) -> List[PatchSet]:
    if isinstance(sets, (PatchSet, MaskPatchSet)):
        return [sets]
    return list(sets)


def _stack_pool(pset: PatchSet) -> torch.Tensor:
    arr = pset.stack().astype(np.float32)
    if arr.ndim == 3:  # (N, S, S) masks or gray patches
        arr = arr[:, None]
    else:
        arr = arr.transpose(0, 3, 1, 2)
    return torch.from_numpy(np.ascontiguousarray(arr))


def write_loss_log(path, rows: Sequence[tuple]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "loss_g", "loss_d", "loss_task"])
        for row in rows:
            w.writerow([row[0], f"{row[1]:.8f}", f"{row[2]:.8f}", f"{row[3]:.8f}"])


def train_patch_gan(
    src,
    tgt,
    config: GanConfig,
    rng: np.random.Generator,
    src_masks=None,
    log_path=None,
    checkpoint_dir=None,
    save_checkpoint=None,
) -> Tuple[TrainState, TranslatorBundle]:
    """Train a translator from src patches toward the tgt patch distribution.

    src/tgt may be single PatchSets or per-size lists (sizes are consumed
    round-robin). src_masks, when given, must align with src and mark the
    pixels of the edited domain inside each source patch. steps = 0 is valid
    and returns an identity-initialized bundle.

    Deterministic given (patch sets, config, rng): identical inputs replay an
    identical loss trajectory.
    """
    src_pools = _as_pools(src)
    tgt_pools = _as_pools(tgt)
    if len(src_pools) != len(tgt_pools):
        raise ShapeMismatch("src and tgt need the same number of patch scales")
    mask_pools = _as_pools(src_masks) if src_masks is not None else None
    if mask_pools is not None and len(mask_pools) != len(src_pools):
        raise ShapeMismatch("src_masks must align with src patch sets")

    sample = src_pools[0][0].pixels
    channels = 1 if sample.ndim == 2 else sample.shape[2]
    torch.manual_seed(torch_seed_from(rng))

    gen = networks.build_generator(channels, config.backbone, config.base_channels)
    critic = networks.PatchCritic(channels, config.base_channels)
    models: Dict[str, torch.nn.Module] = {"gen": gen, "critic": critic}
    cycle_style = config.backbone == "residual"
    if cycle_style:
        models["gen_back"] = networks.build_generator(
            channels, config.backbone, config.base_channels
        )
        models["critic_back"] = networks.PatchCritic(channels, config.base_channels)

    opt_g_params = list(gen.parameters())
    if cycle_style:
        opt_g_params += list(models["gen_back"].parameters())
    opt_d_params = list(critic.parameters())
    if cycle_style:
        opt_d_params += list(models["critic_back"].parameters())
    optimizers = {
        "g": torch.optim.Adam(opt_g_params, lr=config.lr_g, betas=(0.5, 0.999)),
        "d": torch.optim.Adam(opt_d_params, lr=config.lr_d, betas=(0.5, 0.999)),
    }

    src_data = [_stack_pool(p) for p in src_pools]
    tgt_data = [_stack_pool(p) for p in tgt_pools]
    mask_data = [_stack_pool(p) for p in mask_pools] if mask_pools else None

    state = TrainState(step=0, models=models, optimizers=optimizers, config=config)
    jitter_on = (
        config.jitter_brightness > 0
        or config.jitter_contrast > 0
        or config.jitter_hue > 0
    )

    def maybe_jitter(t: torch.Tensor) -> torch.Tensor:
        if not jitter_on:
            return t
        return losses.color_jitter(
            t,
            rng,
            brightness=config.jitter_brightness,
            contrast=config.jitter_contrast,
            hue=config.jitter_hue,
        )

    recon_mode = config.resolved_recon_mode()
    if recon_mode not in ("paste", "blur", "none"):
        raise BadSchema(f"unknown recon_mode {recon_mode!r}")
    if recon_mode == "paste" and mask_data is None:
        raise BadSchema("paste reconstruction needs src_masks")

    bad_steps = 0
    l1 = torch.nn.functional.l1_loss
    for step in range(config.steps):
        pool = step % len(src_data)
        xs = src_data[pool]
        xt = tgt_data[pool]
        bs = min(config.batch_size, xs.shape[0], xt.shape[0])
        si = torch.from_numpy(rng.integers(0, xs.shape[0], size=bs))
        ti = torch.from_numpy(rng.integers(0, xt.shape[0], size=bs))
        xb = xs[si]
        xa = xt[ti]

        fake_a = gen(xb)
        if cycle_style:
            fake_b = models["gen_back"](xa)

        # critic update: reals toward 1, translated samples toward 0
        optimizers["d"].zero_grad()
        d_loss = losses.discriminator_loss(
            critic(maybe_jitter(fake_a.detach())), critic(maybe_jitter(xa))
        )
        if cycle_style:
            d_loss = d_loss + losses.discriminator_loss(
                models["critic_back"](maybe_jitter(fake_b.detach())),
                models["critic_back"](maybe_jitter(xb)),
            )
        d_loss.backward()
        optimizers["d"].step()

        # generator update
        optimizers["g"].zero_grad()
        g_loss = config.adv_weight * losses.generator_loss(critic(maybe_jitter(fake_a)))
        if cycle_style:
            g_loss = g_loss + config.adv_weight * losses.generator_loss(
                models["critic_back"](maybe_jitter(fake_b))
            )
            if config.cycle_weight > 0:
                g_loss = g_loss + config.cycle_weight * (
                    l1(models["gen_back"](fake_a), xb) + l1(gen(fake_b), xa)
                )
            if config.identity_weight > 0:
                g_loss = g_loss + config.identity_weight * (
                    l1(gen(xa), xa) + l1(models["gen_back"](xb), xb)
                )
        if recon_mode != "none" and config.recon_weight > 0:
            if recon_mode == "paste":
                # paste edited-domain content into clean target patches
                # through its mask, then require the generator to restore
                # the original: paired supervision for fill-in, identity
                # elsewhere
                m = mask_data[pool][si]
                corrupted = xa * (1.0 - m) + xb * m
            else:  # blur
                sigma = float(rng.uniform(*config.blur_sigma))
                corrupted = losses.gaussian_blur(xa, sigma)
            g_loss = g_loss + config.recon_weight * l1(gen(corrupted), xa)
        task_val = 0.0
        if config.task_weight > 0 and step >= config.task_warmup:
            # double precision: the reciprocal-variance term yields gradient
            # magnitudes around 1/eps^2 that overflow float32 backward
            task = torch.stack(
                [
                    losses.deblur_loss(
                        xb[i].double(), fake_a[i].double(), bins=config.histogram_bins
                    )
                    for i in range(fake_a.shape[0])
                ]
            ).mean()
            task_val = float(task.detach())
            g_loss = g_loss + config.task_weight * task
        g_loss.backward()
        if config.grad_clip > 0:
            # value clip first: an infinite entry would otherwise turn the
            # norm clip into a NaN broadcast across every parameter
            torch.nn.utils.clip_grad_value_(opt_g_params, 1e3)
            torch.nn.utils.clip_grad_norm_(opt_g_params, config.grad_clip)
        optimizers["g"].step()

        g_val = float(g_loss.detach())
        d_val = float(d_loss.detach())
        state.loss_rows.append((step, g_val, d_val, task_val))
        state.step = step + 1

        if not (math.isfinite(g_val) and math.isfinite(d_val)):
            bad_steps += 1
            if bad_steps >= config.divergence_patience:
                raise Diverged(
                    f"non-finite losses for {bad_steps} consecutive steps at {step}"
                )
        else:
            bad_steps = 0

        if (
            config.checkpoint_every > 0
            and checkpoint_dir is not None
            and (step + 1) % config.checkpoint_every == 0
            and save_checkpoint is not None
        ):
            save_checkpoint(state, Path(checkpoint_dir) / f"gan_step{step + 1:06d}.ckpt")

    for m in models.values():
        m.eval()
    if log_path is not None:
        write_loss_log(log_path, state.loss_rows)

    bundle = TranslatorBundle(
        generator=gen,
        backbone=config.backbone,
        channels=channels,
        beta=src_pools[0].domain,
        alpha=tgt_pools[0].domain,
    )
    return state, bundle

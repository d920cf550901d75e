"""Task configuration: JSON schema, validation, and built-in task templates.

A TaskConfig fully determines a run given a dataset manifest and a seed.
Validation is strict and fails closed with BadSchema; in particular,
interpolation settings are rejected unless the mask VAE is enabled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .errors import BadSchema
from .gan.training import GanConfig
from .patches import PatchSpec
from .priors import (
    CenterFocusRule,
    LaneBandRule,
    LocalDomainId,
    SemanticMapRule,
)

CONFIG_SCHEMA_VERSION = 1

TASKS = ("lane_degradation", "snow_addition", "deblurring", "custom")
PRIOR_RULES = ("lane_polylines", "semantic_map", "fixed_center_focus")
DIRECTIONS = ("beta_to_alpha", "alpha_to_beta")
VAE_TARGETS = ("indicator", "difference")

DIFFERENCE_THRESHOLD = 0.1  # binarization level for translated-vs-input masks


@dataclass
class PriorSettings:
    rule: str
    band_halfwidth: float = 4.0
    ring_width: Optional[float] = None  # None -> 3x the band width
    band_domain: str = ""
    ring_domain: str = ""
    classes: Dict[int, str] = field(default_factory=dict)
    center_radius_frac: float = 0.25
    corner_side_frac: float = 0.2
    center_domain: str = ""
    corner_domain: str = ""


@dataclass
class VaeSettings:
    enabled: bool = False
    latent_dim: int = 64
    base_channels: int = 16
    steps: int = 800
    batch_size: int = 16
    lr: float = 1e-3
    kl_weight: float = 1.0
    patch_size: int = 32
    targets: str = "indicator"
    difference_threshold: float = DIFFERENCE_THRESHOLD
    hi_domain: str = ""  # indicator decoded at z = 1 (full edit)
    lo_domain: str = ""  # indicator decoded at z = 0


@dataclass
class InferenceSettings:
    z: Optional[float] = None
    gamma: Optional[float] = None
    z_range: Optional[Tuple[float, float]] = None
    gamma_range: Optional[Tuple[float, float]] = None
    overlap: int = 8
    foreground_domain: Optional[str] = None
    write_masks: bool = False


@dataclass
class AugmentSettings:
    probability: float = 0.05
    z_range: Tuple[float, float] = (0.35, 0.95)
    gamma_range: Tuple[float, float] = (0.2, 1.0)


@dataclass
class EvalSettings:
    bins: int = 64
    reference_manifest: Optional[str] = None
    grid_z: Optional[List[float]] = None
    grid_gamma: Optional[List[float]] = None


@dataclass
class TaskConfig:
    task: str
    seed: int
    manifest: str
    domains: List[LocalDomainId]
    alpha: str
    beta: str
    prior: PriorSettings
    patches: List[PatchSpec]
    gan: GanConfig
    direction: str = "beta_to_alpha"
    vae: VaeSettings = field(default_factory=VaeSettings)
    inference: InferenceSettings = field(default_factory=InferenceSettings)
    augment: AugmentSettings = field(default_factory=AugmentSettings)
    eval: EvalSettings = field(default_factory=EvalSettings)

    def domain(self, name: str) -> LocalDomainId:
        for d in self.domains:
            if d.name == name:
                return d
        raise BadSchema(f"domain {name!r} is not declared")

    def source_domain(self) -> LocalDomainId:
        """Domain whose patches feed the generator (the edited one)."""
        return self.domain(self.beta if self.direction == "beta_to_alpha" else self.alpha)

    def target_domain(self) -> LocalDomainId:
        return self.domain(self.alpha if self.direction == "beta_to_alpha" else self.beta)

    def prior_rule(self):
        """Instantiate the configured geometric rule with declared domains."""
        p = self.prior
        if p.rule == "lane_polylines":
            return LaneBandRule(
                band=self.domain(p.band_domain),
                ring=self.domain(p.ring_domain),
                band_halfwidth=p.band_halfwidth,
                ring_width=p.ring_width,
            )
        if p.rule == "semantic_map":
            return SemanticMapRule(
                classes={cid: self.domain(nm) for cid, nm in p.classes.items()}
            )
        return CenterFocusRule(
            center=self.domain(p.center_domain),
            corners=self.domain(p.corner_domain),
            center_radius_frac=p.center_radius_frac,
            corner_side_frac=p.corner_side_frac,
        )


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise BadSchema(f"{where}: missing required key {key!r}")
    return d[key]


def _check_unit(value, name: str) -> float:
    v = float(value)
    if not (0.0 <= v <= 1.0):
        raise BadSchema(f"{name} must lie in [0, 1], got {v}")
    return v


def _check_range(pair, name: str) -> Tuple[float, float]:
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise BadSchema(f"{name} must be a [low, high] pair")
    lo = _check_unit(pair[0], f"{name}[0]")
    hi = _check_unit(pair[1], f"{name}[1]")
    if lo > hi:
        raise BadSchema(f"{name} must be ordered, got ({lo}, {hi})")
    return (lo, hi)


def config_from_dict(doc: dict) -> TaskConfig:
    if not isinstance(doc, dict):
        raise BadSchema("config root must be an object")
    version = _need(doc, "schema_version", "config")
    if version != CONFIG_SCHEMA_VERSION:
        raise BadSchema(f"unsupported config schema {version!r}")
    task = _need(doc, "task", "config")
    if task not in TASKS:
        raise BadSchema(f"unknown task {task!r}; expected one of {TASKS}")
    seed = _need(doc, "seed", "config")
    if not isinstance(seed, int) or seed < 0:
        raise BadSchema("seed must be a nonnegative integer")
    manifest = _need(doc, "manifest", "config")

    raw_domains = _need(doc, "domains", "config")
    if not raw_domains:
        raise BadSchema("at least one local domain must be declared")
    domains = []
    seen_ids, seen_names = set(), set()
    for entry in raw_domains:
        did = _need(entry, "id", "domains[]")
        name = _need(entry, "name", "domains[]")
        if not isinstance(did, int) or not (1 <= did <= 255):
            raise BadSchema(f"domain id {did!r} must be an integer in [1, 255]")
        if did in seen_ids or name in seen_names:
            raise BadSchema(f"duplicate domain id or name: {did}/{name}")
        seen_ids.add(did)
        seen_names.add(name)
        domains.append(LocalDomainId(did, name))

    alpha = _need(doc, "alpha", "config")
    beta = _need(doc, "beta", "config")
    for nm in (alpha, beta):
        if nm not in seen_names:
            raise BadSchema(f"domain {nm!r} referenced but not declared")
    if alpha == beta:
        raise BadSchema("alpha and beta must name different domains")

    direction = doc.get("direction", "beta_to_alpha")
    if direction not in DIRECTIONS:
        raise BadSchema(f"direction must be one of {DIRECTIONS}")

    rp = _need(doc, "prior", "config")
    rule = _need(rp, "rule", "prior")
    if rule not in PRIOR_RULES:
        raise BadSchema(f"unknown prior rule {rule!r}")
    prior = PriorSettings(rule=rule)
    if rule == "lane_polylines":
        prior.band_domain = _need(rp, "band_domain", "prior")
        prior.ring_domain = _need(rp, "ring_domain", "prior")
        prior.band_halfwidth = float(rp.get("band_halfwidth", 4.0))
        if prior.band_halfwidth <= 0:
            raise BadSchema("band_halfwidth must be positive")
        prior.ring_width = rp.get("ring_width")
        if prior.ring_width is not None:
            prior.ring_width = float(prior.ring_width)
    elif rule == "semantic_map":
        classes = _need(rp, "classes", "prior")
        if not classes:
            raise BadSchema("semantic_map prior needs a class mapping")
        prior.classes = {int(k): v for k, v in classes.items()}
        for nm in prior.classes.values():
            if nm not in seen_names:
                raise BadSchema(f"prior references undeclared domain {nm!r}")
    else:
        prior.center_domain = _need(rp, "center_domain", "prior")
        prior.corner_domain = _need(rp, "corner_domain", "prior")
        prior.center_radius_frac = float(rp.get("center_radius_frac", 0.25))
        prior.corner_side_frac = float(rp.get("corner_side_frac", 0.2))
    for nm in (
        prior.band_domain,
        prior.ring_domain,
        prior.center_domain,
        prior.corner_domain,
    ):
        if nm and nm not in seen_names:
            raise BadSchema(f"prior references undeclared domain {nm!r}")

    raw_patches = _need(doc, "patches", "config")
    if not raw_patches:
        raise BadSchema("at least one patch scale is required")
    patches = []
    for p in raw_patches:
        size = _need(p, "size", "patches[]")
        per = _need(p, "per_image", "patches[]")
        if not isinstance(size, int) or size < 4:
            raise BadSchema(f"patch size must be an integer >= 4, got {size!r}")
        if not isinstance(per, int) or per < 1:
            raise BadSchema("per_image must be a positive integer")
        patches.append(PatchSpec(size=size, per_image=per))

    g = doc.get("gan", {})
    gan = GanConfig(
        backbone=g.get("backbone", "residual"),
        steps=int(g.get("steps", 600)),
        batch_size=int(g.get("batch_size", 8)),
        lr_g=float(g.get("lr_g", 2e-4)),
        lr_d=float(g.get("lr_d", 2e-4)),
        adv_weight=float(g.get("adv_weight", 1.0)),
        cycle_weight=float(g.get("cycle_weight", 10.0)),
        identity_weight=float(g.get("identity_weight", 2.0)),
        recon_weight=float(g.get("recon_weight", 10.0)),
        task_weight=float(g.get("task_weight", 0.0)),
        histogram_bins=int(g.get("histogram_bins", 32)),
        jitter_brightness=float(g.get("jitter_brightness", 0.0)),
        jitter_contrast=float(g.get("jitter_contrast", 0.0)),
        jitter_hue=float(g.get("jitter_hue", 0.0)),
        base_channels=int(g.get("base_channels", 8)),
        recon_mode=str(g.get("recon_mode", "")),
        blur_sigma=tuple(g.get("blur_sigma", (1.0, 2.5))),
        task_warmup=int(g.get("task_warmup", 0)),
        grad_clip=float(g.get("grad_clip", 0.0)),
        checkpoint_every=int(g.get("checkpoint_every", 0)),
        divergence_patience=int(g.get("divergence_patience", 5)),
    )
    if gan.backbone not in ("residual", "gated"):
        raise BadSchema(f"unknown gan backbone {gan.backbone!r}")
    if gan.steps < 0:
        raise BadSchema("gan steps must be >= 0")
    if gan.recon_mode not in ("", "paste", "blur", "none"):
        raise BadSchema(f"unknown recon_mode {gan.recon_mode!r}")
    if len(gan.blur_sigma) != 2 or gan.blur_sigma[0] <= 0 or gan.blur_sigma[1] < gan.blur_sigma[0]:
        raise BadSchema("blur_sigma must be an ordered positive pair")

    v = doc.get("vae", {})
    vae = VaeSettings(
        enabled=bool(v.get("enabled", False)),
        latent_dim=int(v.get("latent_dim", 64)),
        base_channels=int(v.get("base_channels", 16)),
        steps=int(v.get("steps", 800)),
        batch_size=int(v.get("batch_size", 16)),
        lr=float(v.get("lr", 1e-3)),
        kl_weight=float(v.get("kl_weight", 1.0)),
        patch_size=int(v.get("patch_size", 32)),
        targets=v.get("targets", "indicator"),
        difference_threshold=float(v.get("difference_threshold", DIFFERENCE_THRESHOLD)),
        hi_domain=v.get("hi_domain", ""),
        lo_domain=v.get("lo_domain", ""),
    )
    if vae.targets not in VAE_TARGETS:
        raise BadSchema(f"vae targets must be one of {VAE_TARGETS}")
    if vae.enabled:
        if vae.patch_size % 4 != 0:
            raise BadSchema("vae patch_size must be divisible by 4")
        for nm in (vae.hi_domain, vae.lo_domain):
            if nm not in seen_names:
                raise BadSchema(
                    f"vae endpoint domain {nm!r} must name a declared domain"
                )
        if vae.hi_domain == vae.lo_domain:
            raise BadSchema("vae endpoints must differ")

    i = doc.get("inference", {})
    inference = InferenceSettings(overlap=int(i.get("overlap", 8)))
    if i.get("z") is not None:
        inference.z = _check_unit(i["z"], "inference.z")
    if i.get("gamma") is not None:
        inference.gamma = _check_unit(i["gamma"], "inference.gamma")
    if i.get("z_range") is not None:
        inference.z_range = _check_range(i["z_range"], "inference.z_range")
    if i.get("gamma_range") is not None:
        inference.gamma_range = _check_range(i["gamma_range"], "inference.gamma_range")
    inference.foreground_domain = i.get("foreground_domain")
    if inference.foreground_domain and inference.foreground_domain not in seen_names:
        raise BadSchema("inference.foreground_domain must name a declared domain")
    inference.write_masks = bool(i.get("write_masks", False))
    if not vae.enabled:
        for key in ("z", "z_range", "gamma", "gamma_range"):
            if i.get(key) is not None:
                raise BadSchema(
                    f"inference.{key} is an interpolation setting but the VAE is disabled"
                )

    a = doc.get("augment", {})
    augment = AugmentSettings()
    augment.probability = _check_unit(a.get("probability", 0.05), "augment.probability")
    if a.get("z_range") is not None:
        augment.z_range = _check_range(a["z_range"], "augment.z_range")
    if a.get("gamma_range") is not None:
        augment.gamma_range = _check_range(a["gamma_range"], "augment.gamma_range")

    e = doc.get("eval", {})
    ev = EvalSettings(
        bins=int(e.get("bins", 64)),
        reference_manifest=e.get("reference_manifest"),
        grid_z=e.get("grid_z"),
        grid_gamma=e.get("grid_gamma"),
    )

    return TaskConfig(
        task=task,
        seed=seed,
        manifest=manifest,
        domains=domains,
        alpha=alpha,
        beta=beta,
        direction=direction,
        prior=prior,
        patches=patches,
        gan=gan,
        vae=vae,
        inference=inference,
        augment=augment,
        eval=ev,
    )


def load_task_config(path) -> TaskConfig:
    path = Path(path)
    if not path.exists():
        raise BadSchema(f"config file {path} does not exist")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BadSchema(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(cfg: TaskConfig) -> dict:
    doc = asdict(cfg)
    doc["schema_version"] = CONFIG_SCHEMA_VERSION
    doc["domains"] = [{"id": d.id, "name": d.name} for d in cfg.domains]
    doc["patches"] = [{"size": p.size, "per_image": p.per_image} for p in cfg.patches]
    # tuples do not survive a JSON round trip; normalize to lists
    return json.loads(json.dumps(doc))


def save_task_config(cfg: TaskConfig, path) -> None:
    from .imgio import atomic_write_bytes

    data = json.dumps(config_to_dict(cfg), indent=2, sort_keys=True).encode("utf-8")
    atomic_write_bytes(path, data)


def default_config(task: str, manifest: str = "manifest.json", seed: int = 7) -> dict:
    """Editable template dict for one of the built-in tasks."""
    if task == "lane_degradation":
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "task": task,
            "seed": seed,
            "manifest": manifest,
            "domains": [
                {"id": 1, "name": "lane_marking"},
                {"id": 2, "name": "asphalt"},
            ],
            "alpha": "asphalt",
            "beta": "lane_marking",
            "direction": "beta_to_alpha",
            "prior": {
                "rule": "lane_polylines",
                "band_domain": "lane_marking",
                "ring_domain": "asphalt",
                "band_halfwidth": 4.0,
            },
            "patches": [{"size": 32, "per_image": 30}],
            "gan": {"backbone": "gated", "steps": 600},
            "vae": {
                "enabled": True,
                "patch_size": 32,
                "targets": "difference",
                "hi_domain": "lane_marking",
                "lo_domain": "asphalt",
            },
            "inference": {
                "z": 0.95,
                "gamma": 0.75,
                "z_range": [0.35, 0.95],
                "overlap": 8,
                "write_masks": True,
            },
            "augment": {"probability": 0.05},
        }
    if task == "snow_addition":
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "task": task,
            "seed": seed,
            "manifest": manifest,
            "domains": [{"id": 1, "name": "road"}, {"id": 2, "name": "sidewalk"}],
            "alpha": "sidewalk",
            "beta": "road",
            "direction": "beta_to_alpha",
            "prior": {
                "rule": "semantic_map",
                "classes": {"7": "road", "8": "sidewalk"},
            },
            "patches": [{"size": 32, "per_image": 30}],
            "gan": {"backbone": "gated", "steps": 800},
            "vae": {"enabled": False},
        }
    if task == "deblurring":
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "task": task,
            "seed": seed,
            "manifest": manifest,
            "domains": [
                {"id": 1, "name": "in_focus"},
                {"id": 2, "name": "out_of_focus"},
            ],
            "alpha": "in_focus",
            "beta": "out_of_focus",
            "direction": "beta_to_alpha",
            "prior": {
                "rule": "fixed_center_focus",
                "center_domain": "in_focus",
                "corner_domain": "out_of_focus",
                "center_radius_frac": 0.25,
                "corner_side_frac": 0.3,
            },
            "patches": [{"size": 16, "per_image": 8}],
            "gan": {
                "backbone": "residual",
                "steps": 800,
                "recon_mode": "blur",
                "task_weight": 0.01,
                "task_warmup": 300,
                "grad_clip": 1.0,
                "jitter_brightness": 0.1,
                "jitter_contrast": 0.1,
                "jitter_hue": 0.1,
            },
            "vae": {"enabled": False},
            "inference": {"foreground_domain": "in_focus"},
        }
    if task == "custom":
        raise BadSchema("custom tasks have no template; write the config explicitly")
    raise BadSchema(f"unknown task {task!r}")

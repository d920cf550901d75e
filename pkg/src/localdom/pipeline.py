"""Recipe runner: extract -> train-gan -> train-vae -> translate -> evaluate
-> augment, with content-hashed no-op reruns and a source-only access audit
on the extraction and training stages.

Artifact layout under the output directory:

    config.resolved.json   effective config snapshot (seed included)
    stages.json            per-stage input hashes and output checksums
    patches/patches.ldarc  extracted patch and mask arrays
    ckpt/                  gan.ckpt, vae.ckpt, bundle.ckpt, loss_log.csv
    out/hallucinated/      edited test images (plus out/masks/ if enabled)
    report.json report.csv evaluation metrics
    augmented/             augmented copy of the train split
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import torch

from .augment import augment_dataset
from .checkpoints import (
    file_sha256,
    load_archive,
    load_state_dict_arrays,
    save_archive,
    state_dict_arrays,
)
from .config import TaskConfig, config_to_dict, load_task_config, save_task_config
from .errors import StageOrder
from .evalkit import (
    band_energy,
    domain_gap_estimate,
    focus_map,
    grid_search_edit,
    in_focus_average,
)
from .gan import networks
from .gan.training import train_patch_gan
from .imgio import atomic_write_bytes, load_image, save_image, to_uint8
from .manifest import audit_for_split, load_manifest
from .patches import MaskPatchSet, Patch, PatchSet, PatchSpec, extract_patches
from .pipeline_io import load_labels_for_entry
from .priors import LaneBandRule, build_prior, indicator_mask
from .seeding import derive_rng
from .translator import (
    TranslatorBundle,
    binarized_difference,
    hallucinate,
    save_bundle,
    translate,
)
from .vae import MaskVae, VaeConfig, train_mask_vae

STAGES = ("extract", "train-gan", "train-vae", "translate", "evaluate", "augment")


class Workspace:
    """Resolved config plus the artifact paths of one run."""

    def __init__(self, cfg: TaskConfig, out_dir, config_dir: Path):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.seed = cfg.seed
        # manifest paths in configs are relative to the config file
        mp = Path(cfg.manifest)
        self.manifest_path = mp if mp.is_absolute() else (config_dir / mp)

    @property
    def patches_path(self):
        return self.out / "patches" / "patches.ldarc"

    @property
    def gan_ckpt(self):
        return self.out / "ckpt" / "gan.ckpt"

    @property
    def vae_ckpt(self):
        return self.out / "ckpt" / "vae.ckpt"

    @property
    def bundle_ckpt(self):
        return self.out / "ckpt" / "bundle.ckpt"

    @property
    def stages_path(self):
        return self.out / "stages.json"

    def reference_manifest_path(self) -> Optional[Path]:
        ref = self.cfg.eval.reference_manifest
        if not ref:
            return None
        rp = Path(ref)
        return rp if rp.is_absolute() else (self.manifest_path.parent / rp)


def _canonical_hash(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()


def _read_stages(ws: Workspace) -> dict:
    if ws.stages_path.exists():
        return json.loads(ws.stages_path.read_text())
    return {}

def _write_stages(ws: Workspace, doc: dict) -> None:
    atomic_write_bytes(
        ws.stages_path, json.dumps(doc, indent=2, sort_keys=True).encode("utf-8")
    )


def _stage_input_hash(ws: Workspace, stage: str, stages_doc: dict) -> str:
    base = {
        "config": config_to_dict(ws.cfg),
        "manifest": file_sha256(ws.manifest_path),
        "stage": stage,
        "upstream": {
            s: stages_doc.get(s, {}).get("hash")
            for s in STAGES[: STAGES.index(stage)]
        },
    }
    return _canonical_hash(base)


def _outputs_intact(ws: Workspace, record: dict) -> bool:
    for rel, digest in record.get("outputs", {}).items():
        p = ws.out / rel
        if not p.exists() or file_sha256(p) != digest:
            return False
    return True


def _record_outputs(ws: Workspace, paths: List[Path]) -> Dict[str, str]:
    out = {}
    for p in sorted(paths, key=str):
        out[str(p.relative_to(ws.out))] = file_sha256(p)
    return out


# ---------------------------------------------------------------------------
# Patch persistence


def _quantize_patch(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == np.uint8:
        return arr
    return to_uint8(arr)


def _save_patch_sets(path, sets: Dict[str, PatchSet], meta_extra: dict) -> None:
    arrays = {}
    meta = {"kind": "patches", "roles": {}, **meta_extra}
    for role, pset in sets.items():
        stack = np.stack([_quantize_patch(p.pixels) for p in pset.patches])
        arrays[role] = stack
        arrays[f"{role}_centers"] = np.array(
            [p.center for p in pset.patches], dtype=np.int32
        )
        meta["roles"][role] = {
            "size": pset.size,
            "mask": isinstance(pset, MaskPatchSet),
            "domain": {"id": pset.domain.id, "name": pset.domain.name},
            "image_ids": [p.image_id for p in pset.patches],
        }
    save_archive(path, meta, arrays)


def _load_patch_sets(path) -> Dict[str, PatchSet]:
    from .priors import LocalDomainId

    meta, arrays = load_archive(path)
    sets: Dict[str, PatchSet] = {}
    for role, info in meta["roles"].items():
        dom = LocalDomainId(**info["domain"])
        cls = MaskPatchSet if info["mask"] else PatchSet
        pset = cls(domain=dom, size=info["size"])
        stack = arrays[role]
        centers = arrays[f"{role}_centers"]
        for i in range(stack.shape[0]):
            if info["mask"]:
                pixels = (stack[i] > 0).astype(np.uint8)
            else:
                pixels = stack[i].astype(np.float32) / 255.0
            pset.patches.append(
                Patch(
                    pixels,
                    (int(centers[i][0]), int(centers[i][1])),
                    info["image_ids"][i],
                    dom.id,
                )
            )
        sets[role] = pset
    return sets


# ---------------------------------------------------------------------------
# Stages


def _stage_extract(ws: Workspace) -> List[Path]:
    cfg = ws.cfg
    manifest = load_manifest(ws.manifest_path, verify=True)
    audit = audit_for_split(manifest, "train", stage="extract")
    rule = cfg.prior_rule()
    src_dom, tgt_dom = cfg.source_domain(), cfg.target_domain()

    sizes = [spec.size for spec in cfg.patches]
    roles: Dict[str, PatchSet] = {}
    for spec in cfg.patches:
        roles[f"src_{spec.size}"] = PatchSet(domain=src_dom, size=spec.size)
        roles[f"srcmask_{spec.size}"] = MaskPatchSet(domain=src_dom, size=spec.size)
        roles[f"tgt_{spec.size}"] = PatchSet(domain=tgt_dom, size=spec.size)
        roles[f"tgtmask_{spec.size}"] = MaskPatchSet(domain=tgt_dom, size=spec.size)
    vae_extra = cfg.vae.enabled and cfg.vae.patch_size not in sizes
    if vae_extra:
        v = cfg.vae.patch_size
        roles[f"srcmask_{v}"] = MaskPatchSet(domain=src_dom, size=v)
        roles[f"tgtmask_{v}"] = MaskPatchSet(domain=tgt_dom, size=v)

    train_entries = manifest.split("train")
    if not train_entries:
        raise StageOrder("manifest has no train split to extract from")
    for entry in train_entries:
        image = audit.load_image(manifest.image_path(entry))
        labels = load_labels_for_entry(manifest, entry, rule, audit)
        prior = build_prior(image.shape[:2], rule, labels)
        for spec in cfg.patches:
            rng = derive_rng(ws.seed, "extract", entry.image_id, spec.size, "src")
            ps, ms = extract_patches(image, prior, src_dom, spec, rng, entry.image_id)
            roles[f"src_{spec.size}"].extend(ps)
            roles[f"srcmask_{spec.size}"].extend(ms)
            rng = derive_rng(ws.seed, "extract", entry.image_id, spec.size, "tgt")
            pt, mt = extract_patches(image, prior, tgt_dom, spec, rng, entry.image_id)
            roles[f"tgt_{spec.size}"].extend(pt)
            roles[f"tgtmask_{spec.size}"].extend(mt)
        if vae_extra:
            vspec = PatchSpec(cfg.vae.patch_size, cfg.patches[0].per_image)
            rng = derive_rng(ws.seed, "extract", entry.image_id, vspec.size, "src")
            _, ms = extract_patches(image, prior, src_dom, vspec, rng, entry.image_id)
            roles[f"srcmask_{vspec.size}"].extend(ms)
            rng = derive_rng(ws.seed, "extract", entry.image_id, vspec.size, "tgt")
            _, mt = extract_patches(image, prior, tgt_dom, vspec, rng, entry.image_id)
            roles[f"tgtmask_{vspec.size}"].extend(mt)

    _save_patch_sets(
        ws.patches_path,
        roles,
        {
            "sizes": sizes,
            "n_train_images": len(train_entries),
            "src_domain": {"id": src_dom.id, "name": src_dom.name},
            "tgt_domain": {"id": tgt_dom.id, "name": tgt_dom.name},
        },
    )
    return [ws.patches_path]


def _gan_models(cfg: TaskConfig, channels: int):
    gc = cfg.gan
    models = {
        "gen": networks.build_generator(channels, gc.backbone, gc.base_channels),
        "critic": networks.PatchCritic(channels, gc.base_channels),
    }
    if gc.backbone == "residual":
        models["gen_back"] = networks.build_generator(
            channels, gc.backbone, gc.base_channels
        )
        models["critic_back"] = networks.PatchCritic(channels, gc.base_channels)
    return models


def save_gan_checkpoint(path, state, cfg: TaskConfig, channels: int) -> None:
    meta = {
        "kind": "gan",
        "step": state.step,
        "channels": channels,
        "backbone": cfg.gan.backbone,
        "gen_base": cfg.gan.base_channels,
        "config": config_to_dict(cfg),
    }
    arrays = {}
    for name, model in state.models.items():
        arrays.update(
            {f"{name}.{k}": v for k, v in state_dict_arrays(model).items()}
        )
    save_archive(path, meta, arrays)


def load_gan_generator(path):
    meta, arrays = load_archive(path)
    gen = networks.build_generator(
        meta["channels"], meta["backbone"], meta.get("gen_base", 8)
    )
    load_state_dict_arrays(gen, arrays, prefix="gen.")
    gen.eval()
    return gen, meta


def _stage_train_gan(ws: Workspace) -> List[Path]:
    if not ws.patches_path.exists():
        raise StageOrder("train-gan requires the extract stage to have run")
    cfg = ws.cfg
    sets = _load_patch_sets(ws.patches_path)
    sizes = [spec.size for spec in cfg.patches]
    src = [sets[f"src_{s}"] for s in sizes]
    tgt = [sets[f"tgt_{s}"] for s in sizes]
    masks = [sets[f"srcmask_{s}"] for s in sizes]
    rng = derive_rng(ws.seed, "train-gan")
    ckpt_dir = ws.out / "ckpt"
    sample = src[0][0].pixels
    channels = 1 if sample.ndim == 2 else sample.shape[2]

    def _writer(state, path):
        save_gan_checkpoint(path, state, cfg, channels)

    state, bundle = train_patch_gan(
        src,
        tgt,
        cfg.gan,
        rng,
        src_masks=masks,
        log_path=ckpt_dir / "loss_log.csv",
        checkpoint_dir=ckpt_dir,
        save_checkpoint=_writer,
    )
    save_gan_checkpoint(ws.gan_ckpt, state, cfg, channels)
    outputs = [ws.gan_ckpt, ckpt_dir / "loss_log.csv"]
    outputs += sorted(ckpt_dir.glob("gan_step*.ckpt"))
    return outputs


def _stage_train_vae(ws: Workspace) -> List[Path]:
    cfg = ws.cfg
    if not cfg.vae.enabled:
        return []
    if not ws.patches_path.exists():
        raise StageOrder("train-vae requires the extract stage to have run")
    sets = _load_patch_sets(ws.patches_path)
    v = cfg.vae.patch_size
    rng = derive_rng(ws.seed, "train-vae")

    if cfg.vae.targets == "difference":
        if not ws.gan_ckpt.exists():
            raise StageOrder("difference-mask VAE training needs train-gan first")
        masks = _difference_masks(ws, rng)
        pool = list(masks) + list(sets[f"tgtmask_{v}"])
    else:
        pool = list(sets[f"srcmask_{v}"]) + list(sets[f"tgtmask_{v}"])

    vc = VaeConfig(
        patch_size=v,
        latent_dim=cfg.vae.latent_dim,
        base_channels=cfg.vae.base_channels,
        steps=cfg.vae.steps,
        batch_size=cfg.vae.batch_size,
        lr=cfg.vae.lr,
        kl_weight=cfg.vae.kl_weight,
    )
    model, history = train_mask_vae(pool, vc, rng)
    meta = {
        "kind": "vae",
        "patch_size": v,
        "latent_dim": cfg.vae.latent_dim,
        "base": cfg.vae.base_channels,
        "steps": cfg.vae.steps,
    }
    save_archive(ws.vae_ckpt, meta, state_dict_arrays(model))
    hist_path = ws.out / "ckpt" / "vae_history.csv"
    lines = ["step,elbo"] + [f"{h['step']},{h['elbo']:.6f}" for h in history]
    atomic_write_bytes(hist_path, ("\n".join(lines) + "\n").encode("utf-8"))
    return [ws.vae_ckpt, hist_path]


def _difference_masks(ws: Workspace, rng) -> MaskPatchSet:
    """Crops of the binarized input-vs-translation difference at source
    centers; used as VAE targets for fill-in style tasks."""
    cfg = ws.cfg
    manifest = load_manifest(ws.manifest_path, verify=True)
    audit = audit_for_split(manifest, "train", stage="train-vae")
    rule = cfg.prior_rule()
    gen, meta = load_gan_generator(ws.gan_ckpt)
    bundle = TranslatorBundle(
        generator=gen,
        backbone=meta["backbone"],
        channels=meta["channels"],
        beta=cfg.source_domain(),
        alpha=cfg.target_domain(),
    )
    out = MaskPatchSet(domain=cfg.source_domain(), size=cfg.vae.patch_size)
    spec = PatchSpec(cfg.vae.patch_size, cfg.patches[0].per_image)
    for entry in manifest.split("train"):
        image = audit.load_image(manifest.image_path(entry))
        labels = load_labels_for_entry(manifest, entry, rule, audit)
        prior = build_prior(image.shape[:2], rule, labels)
        y = translate(bundle, image)
        diff = binarized_difference(image, y, cfg.vae.difference_threshold)
        img_rng = derive_rng(ws.seed, "vae-diff", entry.image_id)
        diff_sets = extract_patches(
            diff.astype(np.float32), prior, cfg.source_domain(), spec,
            img_rng, entry.image_id,
        )
        # patch pixels here are crops of the difference mask itself
        for p in diff_sets[0].patches:
            p.pixels = (p.pixels > 0.5).astype(np.uint8)
            out.patches.append(p)
    return out


def _assemble_bundle(ws: Workspace) -> TranslatorBundle:
    cfg = ws.cfg
    if not ws.gan_ckpt.exists():
        raise StageOrder("this stage needs a trained generator (run train-gan)")
    gen, meta = load_gan_generator(ws.gan_ckpt)
    vae = None
    if cfg.vae.enabled:
        if not ws.vae_ckpt.exists():
            raise StageOrder("this task interpolates; run train-vae first")
        vmeta, varrays = load_archive(ws.vae_ckpt)
        vae = MaskVae(vmeta["patch_size"], vmeta["latent_dim"], vmeta["base"])
        load_state_dict_arrays(vae, varrays)
        vae.eval()
    return TranslatorBundle(
        generator=gen,
        backbone=meta["backbone"],
        channels=meta["channels"],
        beta=cfg.source_domain(),
        alpha=cfg.target_domain(),
        vae=vae,
        interp_hi=cfg.vae.hi_domain if cfg.vae.enabled else None,
        interp_lo=cfg.vae.lo_domain if cfg.vae.enabled else None,
        overlap=cfg.inference.overlap,
    )


def _stage_translate(ws: Workspace) -> List[Path]:
    cfg = ws.cfg
    bundle = _assemble_bundle(ws)
    save_bundle(ws.bundle_ckpt, bundle)
    manifest = load_manifest(ws.manifest_path, verify=True)
    rule = cfg.prior_rule()
    out_dir = ws.out / "out" / "hallucinated"
    out_dir.mkdir(parents=True, exist_ok=True)
    mask_dir = ws.out / "out" / "masks"
    if cfg.inference.write_masks and cfg.vae.enabled:
        mask_dir.mkdir(parents=True, exist_ok=True)
    outputs = [ws.bundle_ckpt]
    entries = manifest.split("test")
    if not entries:
        raise StageOrder("manifest has no test split to translate")
    z = cfg.inference.z if cfg.vae.enabled else None
    gamma = cfg.inference.gamma if cfg.vae.enabled else None
    for entry in entries:
        image = load_image(manifest.image_path(entry))
        labels = load_labels_for_entry(manifest, entry, rule)
        prior = build_prior(image.shape[:2], rule, labels)
        fg = None
        if cfg.inference.foreground_domain:
            fg = indicator_mask(prior, cfg.inference.foreground_domain)
        out, p_z = hallucinate(
            bundle, image, prior, z=z, gamma=gamma, foreground=fg, return_mask=True
        )
        dst = out_dir / f"{entry.image_id}.png"
        save_image(dst, out)
        outputs.append(dst)
        if cfg.inference.write_masks and cfg.vae.enabled and p_z is not None:
            mp = mask_dir / f"{entry.image_id}.png"
            save_image(mp, p_z)
            outputs.append(mp)
    return outputs


def _stage_evaluate(ws: Workspace) -> List[Path]:
    cfg = ws.cfg
    manifest = load_manifest(ws.manifest_path, verify=True)
    rule = cfg.prior_rule()
    out_dir = ws.out / "out" / "hallucinated"
    entries = manifest.split("test")
    if not out_dir.exists() or not entries:
        raise StageOrder("evaluate requires translate outputs")

    inputs, outputs_img, beta_masks = [], [], []
    hashes = []
    for entry in entries:
        p = out_dir / f"{entry.image_id}.png"
        if not p.exists():
            raise StageOrder(f"missing translated output for {entry.image_id}")
        img = load_image(manifest.image_path(entry))
        out = load_image(p)
        inputs.append(img)
        outputs_img.append(out)
        labels = load_labels_for_entry(manifest, entry, rule)
        prior = build_prior(img.shape[:2], rule, labels)
        beta_masks.append(indicator_mask(prior, cfg.source_domain()))
        hashes.append((entry.image_id, entry.checksum, file_sha256(p)))
    inputs_hash = _canonical_hash(hashes)

    metrics = []

    def add(name, value, backend="builtin"):
        metrics.append(
            {
                "name": name,
                "backend": backend,
                "value": float(value),
                "inputs_hash": inputs_hash,
            }
        )

    edit = [
        float(np.abs(o - i)[m != 0].mean()) if (m != 0).any() else 0.0
        for i, o, m in zip(inputs, outputs_img, beta_masks)
    ]
    add("edit_magnitude_mean", float(np.mean(edit)))

    if isinstance(rule, LaneBandRule):
        be_in = [band_energy(i, m) for i, m in zip(inputs, beta_masks)]
        be_out = [band_energy(o, m) for o, m in zip(outputs_img, beta_masks)]
        add("band_energy_input", float(np.mean(be_in)))
        add("band_energy_output", float(np.mean(be_out)))
        add(
            "band_energy_reduction",
            1.0 - float(np.mean(be_out)) / max(float(np.mean(be_in)), 1e-12),
        )

    if cfg.task == "deblurring":
        fin = in_focus_average(inputs)
        fout = in_focus_average(outputs_img)
        add("in_focus_average_input", fin)
        add("in_focus_average_output", fout)
        improved = [
            float(focus_map(o).mean() > focus_map(i).mean())
            for i, o in zip(inputs, outputs_img)
        ]
        add("in_focus_improved_fraction", float(np.mean(improved)))

    ref_path = ws.reference_manifest_path()
    if ref_path is not None:
        ref_manifest = load_manifest(ref_path, verify=True)
        refs = [
            load_image(ref_manifest.image_path(e)) for e in ref_manifest.entries
        ]
        add("domain_gap_reference_to_source", domain_gap_estimate(refs, inputs, cfg.eval.bins))
        add(
            "domain_gap_reference_to_output",
            domain_gap_estimate(refs, outputs_img, cfg.eval.bins),
        )

    written = []
    if cfg.eval.grid_z and cfg.eval.grid_gamma and cfg.vae.enabled:
        bundle = _assemble_bundle(ws)
        entry = entries[0]
        img = load_image(manifest.image_path(entry))
        labels = load_labels_for_entry(manifest, entry, rule)
        prior = build_prior(img.shape[:2], rule, labels)
        result = grid_search_edit(
            bundle, img, prior, img, cfg.eval.grid_z, cfg.eval.grid_gamma
        )
        grid_path = ws.out / "out" / "grid_search.csv"
        rows = ["z,gamma,distance"] + [
            f"{z},{g},{d:.8f}" for z, g, d in result.table
        ]
        atomic_write_bytes(grid_path, ("\n".join(rows) + "\n").encode("utf-8"))
        written.append(grid_path)

    report = {
        "schema_version": 1,
        "task": cfg.task,
        "seed": ws.seed,
        "n_test_images": len(entries),
        "metrics": metrics,
    }
    report_path = ws.out / "report.json"
    atomic_write_bytes(
        report_path, json.dumps(report, indent=2, sort_keys=True).encode("utf-8")
    )
    csv_path = ws.out / "report.csv"
    lines = ["name,backend,value,inputs_hash"]
    for m in metrics:
        lines.append(f"{m['name']},{m['backend']},{m['value']:.10g},{m['inputs_hash']}")
    atomic_write_bytes(csv_path, ("\n".join(lines) + "\n").encode("utf-8"))
    return [report_path, csv_path] + written


def _stage_augment(ws: Workspace) -> List[Path]:
    cfg = ws.cfg
    bundle = _assemble_bundle(ws)
    manifest = load_manifest(ws.manifest_path, verify=True)
    result = augment_dataset(cfg, manifest, bundle, ws.out / "augmented", seed=ws.seed)
    summary_path = ws.out / "augmented" / "summary.json"
    atomic_write_bytes(
        summary_path,
        json.dumps(
            {"total": result["total"], "replaced": result["replaced"]},
            indent=2,
            sort_keys=True,
        ).encode("utf-8"),
    )
    aug_dir = ws.out / "augmented"
    outputs = [summary_path, aug_dir / "manifest.json"]
    outputs += sorted((aug_dir / "images").glob("*.png"))
    if (aug_dir / "labels").exists():
        outputs += sorted((aug_dir / "labels").iterdir())
    return outputs


_STAGE_FNS = {
    "extract": _stage_extract,
    "train-gan": _stage_train_gan,
    "train-vae": _stage_train_vae,
    "translate": _stage_translate,
    "evaluate": _stage_evaluate,
    "augment": _stage_augment,
}


def run_recipe(config, stage: str, out_dir, seed: Optional[int] = None) -> dict:
    """Run one stage (or "all") of a recipe; no-op when inputs are unchanged.

    Returns {stage: {"skipped": bool, ...}}. Stage order violations raise
    StageOrder; every artifact write is atomic.
    """
    if isinstance(config, TaskConfig):
        cfg = config
        config_dir = Path.cwd()
    else:
        cfg = load_task_config(config)
        config_dir = Path(config).resolve().parent
    if seed is not None:
        cfg.seed = int(seed)
    if stage != "all" and stage not in STAGES:
        raise StageOrder(f"unknown stage {stage!r}; expected one of {STAGES + ('all',)}")

    torch.set_num_threads(1)  # fixed thread count keeps reruns bit-identical
    ws = Workspace(cfg, out_dir, config_dir)
    ws.out.mkdir(parents=True, exist_ok=True)
    save_task_config(cfg, ws.out / "config.resolved.json")

    todo = list(STAGES) if stage == "all" else [stage]
    results = {}
    for st in todo:
        if st == "train-vae" and not cfg.vae.enabled:
            results[st] = {"skipped": True, "reason": "vae disabled"}
            continue
        stages_doc = _read_stages(ws)
        input_hash = _stage_input_hash(ws, st, stages_doc)
        record = stages_doc.get(st)
        if record and record.get("hash") == input_hash and _outputs_intact(ws, record):
            results[st] = {"skipped": True, "reason": "inputs unchanged"}
            continue
        produced = _STAGE_FNS[st](ws)
        stages_doc[st] = {
            "hash": input_hash,
            "outputs": _record_outputs(ws, list(produced)),
        }
        _write_stages(ws, stages_doc)
        results[st] = {"skipped": False, "outputs": len(produced)}
    return results

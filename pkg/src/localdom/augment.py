"""Dataset augmentation by probabilistic replacement with edited images.

The replacement decision for each image depends only on (seed, image_id), so
reordering a manifest or changing other entries never flips a decision.
Replaced images are rendered with per-image random edit strength; original
labels are carried over unchanged.
"""

from __future__ import annotations

import shutil
from pathlib import Path
from typing import Optional, Tuple

from .config import TaskConfig
from .imgio import load_image, save_image
from .manifest import DatasetManifest, ManifestEntry, save_manifest, sha256_file
from .pipeline_io import load_labels_for_entry
from .priors import build_prior
from .seeding import derive_rng
from .translator import TranslatorBundle, hallucinate


def replacement_decision(seed: int, image_id: str, probability: float) -> bool:
    """Stable per-image coin flip; the first uniform draw decides."""
    rng = derive_rng(seed, "augment", image_id)
    return bool(rng.random() < probability)


def augment_dataset(
    cfg: TaskConfig,
    manifest: DatasetManifest,
    bundle: TranslatorBundle,
    out_dir,
    seed: Optional[int] = None,
    split: str = "train",
    probability: Optional[float] = None,
    z_range: Optional[Tuple[float, float]] = None,
    gamma_range: Optional[Tuple[float, float]] = None,
) -> dict:
    """Write an augmented copy of one split and a manifest with provenance.

    Returns {"total", "replaced", "manifest"}. Unreplaced files are copied
    byte-identically; replaced ones are re-rendered edits with z and gamma
    drawn uniformly from the configured ranges.
    """
    seed = cfg.seed if seed is None else seed
    probability = (
        cfg.augment.probability if probability is None else float(probability)
    )
    z_range = z_range or cfg.augment.z_range
    gamma_range = gamma_range or cfg.augment.gamma_range
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    rule = cfg.prior_rule()

    new_entries = []
    replaced = 0
    for entry in manifest.split(split):
        rng = derive_rng(seed, "augment", entry.image_id)
        replace = bool(rng.random() < probability)
        src_img = manifest.image_path(entry)
        dst_rel = f"images/{Path(entry.image).name}"
        dst_img = out_dir / dst_rel
        dst_labels_rel = None
        if entry.labels:
            dst_labels_rel = f"labels/{Path(entry.labels).name}"
            dst_labels = out_dir / dst_labels_rel
            dst_labels.parent.mkdir(exist_ok=True)
            shutil.copyfile(manifest.labels_path(entry), dst_labels)
        meta = {"replaced": replace}
        if replace:
            image = load_image(src_img)
            labels = load_labels_for_entry(manifest, entry, rule)
            prior = build_prior(image.shape[:2], rule, labels)
            z = gamma = None
            if bundle.interpolates:
                z = float(rng.uniform(*z_range))
                gamma = float(rng.uniform(*gamma_range))
                meta.update({"z": z, "gamma": gamma})
            out = hallucinate(bundle, image, prior, z=z, gamma=gamma, rng=rng)
            save_image(dst_img, out)
            replaced += 1
        else:
            shutil.copyfile(src_img, dst_img)
        new_entries.append(
            ManifestEntry(
                image=dst_rel,
                split=split,
                checksum=sha256_file(dst_img),
                labels=dst_labels_rel,
                meta=meta,
            )
        )

    out_manifest = DatasetManifest(
        root=out_dir, entries=new_entries, prior_rule=manifest.prior_rule
    )
    manifest_path = out_dir / "manifest.json"
    save_manifest(out_manifest, manifest_path)
    return {
        "total": len(new_entries),
        "replaced": replaced,
        "manifest": str(manifest_path),
    }

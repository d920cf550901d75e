"""Synthetic dataset generators for the built-in task recipes.

Three families: "stripes" (bright bands on noisy pavement, with polyline
labels and a plain reference set), "snowtex" (two-texture scenes with
semantic maps), and "dof_flowers" (sharp center over blurred surroundings,
fixed prior). Generation is fully deterministic: the same arguments always
produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from .errors import BadSchema
from .imgio import atomic_write_bytes, save_image, save_mask
from .manifest import DatasetManifest, ManifestEntry, save_manifest, sha256_file
from .priors import polyline_distance
from .seeding import derive_rng

KINDS = ("stripes", "snowtex", "dof_flowers")

ROAD_CLASS = 7
SIDEWALK_CLASS = 8


def _splits(n_train: int, n_val: int, n_test: int) -> List[str]:
    return ["train"] * n_train + ["val"] * n_val + ["test"] * n_test


def _stripe_polylines(rng, size) -> List[List[Tuple[float, float]]]:
    h, w = size
    lines = []
    for _ in range(int(rng.integers(2, 4))):
        col = float(rng.uniform(0.15, 0.85) * w)
        slope = float(rng.uniform(-0.15, 0.15))
        bow = float(rng.uniform(-6.0, 6.0))
        pts = []
        for r in np.linspace(0.0, h - 1.0, 6):
            t = r / max(h - 1.0, 1.0)
            c = col + slope * r + bow * np.sin(np.pi * t)
            pts.append((float(r), float(np.clip(c, 1.0, w - 2.0))))
        lines.append(pts)
    return lines


def _pavement(rng, size) -> np.ndarray:
    h, w = size
    base = 0.45 + 0.05 * np.linspace(-1.0, 1.0, w)[None, :]
    base = base + 0.03 * np.linspace(-1.0, 1.0, h)[:, None]
    noise = rng.normal(0.0, 0.035, size=(h, w))
    grain = ndimage.gaussian_filter(rng.normal(0.0, 0.15, size=(h, w)), 1.5)
    gray = np.clip(base + noise + grain, 0.05, 0.95)
    img = np.stack([gray, gray * 0.99, gray * 0.97], axis=-1)
    return img.astype(np.float32)


def _stripes_image(rng, size, polylines) -> np.ndarray:
    img = _pavement(rng, size)
    if polylines:
        dist = polyline_distance(size, polylines)
        band = dist < 2.5
        tone = 0.88 + rng.normal(0.0, 0.02, size=size)
        for c in range(3):
            chan = img[..., c]
            chan[band] = np.clip(tone, 0.7, 1.0)[band]
    return np.clip(img, 0.0, 1.0)


def _snowtex_scene(rng, size):
    h, w = size
    horizon = int(h * rng.uniform(0.35, 0.45))
    walk_depth = int(h * rng.uniform(0.15, 0.25))
    classes = np.zeros((h, w), dtype=np.int32)
    classes[horizon : horizon + walk_depth] = SIDEWALK_CLASS
    classes[horizon + walk_depth :] = ROAD_CLASS
    img = np.zeros((h, w, 3), dtype=np.float32)
    sky = 0.55 + 0.1 * np.linspace(1.0, 0.0, h)[:, None]
    img[..., 0] = sky
    img[..., 1] = sky
    img[..., 2] = np.clip(sky + 0.1, 0.0, 1.0)
    walk = classes == SIDEWALK_CLASS
    snow = 0.85 + rng.normal(0.0, 0.04, size=(h, w))
    road = classes == ROAD_CLASS
    tarmac = 0.22 + rng.normal(0.0, 0.03, size=(h, w)) + 0.06 * ndimage.gaussian_filter(
        rng.normal(0.0, 1.0, size=(h, w)), 2.0
    )
    for c, tint in enumerate((1.0, 1.0, 1.02)):
        img[..., c][walk] = np.clip(snow * tint, 0.0, 1.0)[walk]
    for c, tint in enumerate((1.0, 1.02, 1.05)):
        img[..., c][road] = np.clip(tarmac * tint, 0.0, 1.0)[road]
    return np.clip(img, 0.0, 1.0), classes


def _dof_scene(rng, size) -> np.ndarray:
    h, w = size
    rr, cc = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    sharp = np.zeros((h, w, 3))
    sharp += rng.uniform(0.1, 0.3)
    # speckled texture everywhere so blur is measurable
    for c in range(3):
        sharp[..., c] += 0.25 * rng.normal(0.0, 1.0, size=(h, w))
    for _ in range(int(rng.integers(6, 10))):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        rad = rng.uniform(0.08, 0.2) * min(h, w)
        blob = np.exp(-(((rr - cy) ** 2 + (cc - cx) ** 2) / (2 * rad**2)))
        color = rng.uniform(0.2, 1.0, size=3)
        for c in range(3):
            sharp[..., c] = sharp[..., c] * (1 - blob) + color[c] * blob
    sharp = np.clip(sharp, 0.0, 1.0)
    blurred = np.stack(
        [ndimage.gaussian_filter(sharp[..., c], 2.5) for c in range(3)], axis=-1
    )
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    radius = 0.25 * min(h, w)
    disc = (((rr - cy) ** 2 + (cc - cx) ** 2) <= radius**2).astype(np.float64)
    weight = ndimage.gaussian_filter(disc, 1.5)[..., None]
    return np.clip(sharp * weight + blurred * (1.0 - weight), 0.0, 1.0)


def make_synthetic_dataset(
    kind: str,
    out_dir,
    seed: int,
    n_train: int = 15,
    n_val: int = 2,
    n_test: int = 10,
    size: Tuple[int, int] = (72, 96),
    n_reference: int = 12,
) -> Path:
    """Generate one synthetic dataset and return its manifest path.

    "stripes" also writes a plain (stripe-free) reference set under
    plain/ with its own manifest for distribution-gap evaluation.
    """
    if kind not in KINDS:
        raise BadSchema(f"unknown synthetic dataset kind {kind!r}")
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    labels_needed = kind in ("stripes", "snowtex")
    if labels_needed:
        (out_dir / "labels").mkdir(exist_ok=True)

    entries = []
    splits = _splits(n_train, n_val, n_test)
    for i, split in enumerate(splits):
        rng = derive_rng(seed, kind, i)
        image_id = f"img_{i:04d}"
        rel_img = f"images/{image_id}.png"
        rel_labels: Optional[str] = None
        if kind == "stripes":
            lines = _stripe_polylines(rng, size)
            img = _stripes_image(rng, size, lines)
            rel_labels = f"labels/{image_id}.json"
            atomic_write_bytes(
                out_dir / rel_labels,
                json.dumps({"polylines": lines}, sort_keys=True).encode("utf-8"),
            )
        elif kind == "snowtex":
            img, classes = _snowtex_scene(rng, size)
            rel_labels = f"labels/{image_id}.png"
            save_mask(out_dir / rel_labels, classes)
        else:
            img = _dof_scene(rng, size)
        save_image(out_dir / rel_img, img)
        entries.append(
            ManifestEntry(
                image=rel_img,
                split=split,
                checksum=sha256_file(out_dir / rel_img),
                labels=rel_labels,
            )
        )

    prior_rule = {
        "stripes": "lane_polylines",
        "snowtex": "semantic_map",
        "dof_flowers": "fixed_center_focus",
    }[kind]
    manifest = DatasetManifest(root=out_dir, entries=entries, prior_rule=prior_rule)
    manifest_path = out_dir / "manifest.json"
    save_manifest(manifest, manifest_path)

    if kind == "stripes" and n_reference > 0:
        ref_dir = out_dir / "plain"
        (ref_dir / "images").mkdir(parents=True, exist_ok=True)
        ref_entries = []
        for i in range(n_reference):
            rng = derive_rng(seed, "stripes-plain", i)
            image_id = f"plain_{i:04d}"
            rel_img = f"images/{image_id}.png"
            save_image(ref_dir / rel_img, _stripes_image(rng, size, []))
            ref_entries.append(
                ManifestEntry(
                    image=rel_img,
                    split="test",
                    checksum=sha256_file(ref_dir / rel_img),
                )
            )
        save_manifest(
            DatasetManifest(root=ref_dir, entries=ref_entries, prior_rule=None),
            ref_dir / "manifest.json",
        )
    return manifest_path

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from scipy import ndimage

from localdom.errors import BadSchema
from localdom.imgio import load_image, load_mask
from localdom.manifest import load_manifest
from localdom.synth import make_synthetic_dataset


def _tree_digest(root):
    h = hashlib.sha256()
    for p in sorted(Path(root).rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_unknown_kind(tmp_path):
    with pytest.raises(BadSchema):
        make_synthetic_dataset("clouds", tmp_path, seed=0)


def test_stripes_files_and_determinism(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    make_synthetic_dataset("stripes", a, seed=7, n_train=15, n_val=0, n_test=0, n_reference=0)
    make_synthetic_dataset("stripes", b, seed=7, n_train=15, n_val=0, n_test=0, n_reference=0)
    images = sorted((a / "images").glob("*.png"))
    labels = sorted((a / "labels").glob("*.json"))
    assert len(images) == 15 and len(labels) == 15
    assert _tree_digest(a) == _tree_digest(b)


def test_stripes_seed_changes_content(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    make_synthetic_dataset("stripes", a, seed=1, n_train=2, n_val=0, n_test=0, n_reference=0)
    make_synthetic_dataset("stripes", b, seed=2, n_train=2, n_val=0, n_test=0, n_reference=0)
    assert _tree_digest(a) != _tree_digest(b)


def test_stripes_labels_are_polylines(tmp_path):
    manifest_path = make_synthetic_dataset(
        "stripes", tmp_path, seed=3, n_train=1, n_val=0, n_test=0, n_reference=0
    )
    manifest = load_manifest(manifest_path)
    entry = manifest.entries[0]
    doc = json.loads(manifest.labels_path(entry).read_text())
    assert doc["polylines"]
    for line in doc["polylines"]:
        assert len(line) >= 2
        for point in line:
            assert len(point) == 2


def test_stripes_reference_set(tmp_path):
    make_synthetic_dataset(
        "stripes", tmp_path, seed=4, n_train=2, n_val=0, n_test=1, n_reference=3
    )
    ref = load_manifest(tmp_path / "plain" / "manifest.json")
    assert len(ref.entries) == 3
    # plain images carry no bright bands, striped ones plenty
    for e in ref.entries:
        img = load_image(ref.image_path(e))
        assert (img.mean(axis=2) > 0.68).mean() < 0.01
    striped = load_manifest(tmp_path / "manifest.json")
    img = load_image(striped.image_path(striped.entries[0]))
    assert (img.mean(axis=2) > 0.68).mean() > 0.05


def test_snowtex_semantic_ids(tmp_path):
    manifest_path = make_synthetic_dataset(
        "snowtex", tmp_path, seed=5, n_train=2, n_val=0, n_test=0
    )
    manifest = load_manifest(manifest_path)
    assert manifest.prior_rule == "semantic_map"
    for e in manifest.entries:
        classes = load_mask(manifest.labels_path(e))
        assert set(np.unique(classes).tolist()) == {0, 7, 8}


def test_dof_corner_blur(tmp_path):
    manifest_path = make_synthetic_dataset(
        "dof_flowers", tmp_path, seed=6, n_train=4, n_val=0, n_test=0, size=(48, 64)
    )
    manifest = load_manifest(manifest_path)
    assert manifest.prior_rule == "fixed_center_focus"

    def log_var(patch):
        # independent filter pipeline (scipy, not the package's torch path)
        smoothed = ndimage.gaussian_filter(patch, 1.0)
        return ndimage.laplace(smoothed).var()

    for e in manifest.entries:
        img = load_image(manifest.image_path(e))
        gray = img.mean(axis=2)
        h, w = gray.shape
        corner = log_var(gray[:12, :12])
        cy, cx = h // 2, w // 2
        center = log_var(gray[cy - 6 : cy + 6, cx - 6 : cx + 6])
        assert corner < center


def test_manifests_validate(tmp_path):
    for kind in ("stripes", "snowtex", "dof_flowers"):
        d = tmp_path / kind
        path = make_synthetic_dataset(kind, d, seed=8, n_train=2, n_val=1, n_test=1)
        manifest = load_manifest(path, verify=True)
        assert len(manifest.entries) == 4
        assert len(manifest.split("train")) == 2
        assert len(manifest.split("val")) == 1
        assert len(manifest.split("test")) == 1

"""Dataset manifests: file lists with splits and checksums, plus the access
audit that keeps extraction/training stages inside their source split.

Paths are stored POSIX-relative to the manifest's directory. Entries are
kept sorted by image path so serialization is deterministic.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .errors import BadSchema, ChecksumMismatch, MissingFile, SourceAccessViolation
from .imgio import atomic_write_bytes, load_image, load_mask

SPLITS = ("train", "val", "test")
SCHEMA_VERSION = 1


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class ManifestEntry:
    image: str  # relative POSIX path
    split: str
    checksum: str
    labels: Optional[str] = None
    meta: dict = field(default_factory=dict)

    @property
    def image_id(self) -> str:
        return Path(self.image).stem


@dataclass
class DatasetManifest:
    root: Path
    entries: List[ManifestEntry]
    prior_rule: Optional[str] = None

    def split(self, name: str) -> List[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def image_path(self, entry: ManifestEntry) -> Path:
        return self.root / entry.image

    def labels_path(self, entry: ManifestEntry) -> Optional[Path]:
        return self.root / entry.labels if entry.labels else None


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "prior_rule": manifest.prior_rule,
        "entries": [
            {
                "image": e.image,
                "split": e.split,
                "checksum": e.checksum,
                "labels": e.labels,
                "meta": e.meta,
            }
            for e in sorted(manifest.entries, key=lambda e: e.image)
        ],
    }
    atomic_write_bytes(path, json.dumps(doc, indent=2, sort_keys=True).encode("utf-8"))


def load_manifest(path, verify: bool = True) -> DatasetManifest:
    """Parse and validate a manifest; optionally verify every checksum."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"manifest {path} does not exist")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BadSchema(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "entries" not in doc:
        raise BadSchema("manifest must be an object with an 'entries' list")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise BadSchema(f"unsupported manifest schema {doc.get('schema_version')!r}")
    root = path.parent
    entries = []
    seen: Dict[str, str] = {}
    for raw in doc["entries"]:
        for key in ("image", "split", "checksum"):
            if key not in raw:
                raise BadSchema(f"manifest entry missing {key!r}: {raw}")
        if raw["split"] not in SPLITS:
            raise BadSchema(f"unknown split {raw['split']!r}")
        image = raw["image"]
        if image in seen:
            # the same file in two splits would leak sources into eval
            raise BadSchema(f"image {image} appears in multiple entries")
        seen[image] = raw["split"]
        entries.append(
            ManifestEntry(
                image=image,
                split=raw["split"],
                checksum=raw["checksum"],
                labels=raw.get("labels"),
                meta=raw.get("meta", {}) or {},
            )
        )
    entries.sort(key=lambda e: e.image)
    manifest = DatasetManifest(
        root=root, entries=entries, prior_rule=doc.get("prior_rule")
    )
    if verify:
        for e in entries:
            p = manifest.image_path(e)
            if not p.exists():
                raise MissingFile(f"manifest references missing file {p}")
            digest = sha256_file(p)
            if digest != e.checksum:
                raise ChecksumMismatch(
                    f"{p}: checksum {digest[:12]}... != manifest {e.checksum[:12]}..."
                )
            lp = manifest.labels_path(e)
            if lp is not None and not lp.exists():
                raise MissingFile(f"manifest references missing labels {lp}")
    return manifest


def entry_for(manifest: DatasetManifest, image_id: str) -> ManifestEntry:
    for e in manifest.entries:
        if e.image_id == image_id:
            return e
    raise MissingFile(f"no manifest entry with image id {image_id!r}")


class AccessAudit:
    """Records every dataset file read and rejects reads outside the allowed
    set. Stages with source-only guarantees route all their I/O through this.
    """

    def __init__(self, allowed, stage: str = ""):
        self.allowed = {Path(p).resolve() for p in allowed}
        self.stage = stage
        self.reads: List[Path] = []

    def check(self, path) -> Path:
        p = Path(path).resolve()
        self.reads.append(p)
        if p not in self.allowed:
            raise SourceAccessViolation(
                f"stage {self.stage or '?'} attempted to read {p}, "
                "which is outside its allowed source files"
            )
        return p

    def load_image(self, path) -> np.ndarray:
        return load_image(self.check(path))

    def load_mask(self, path) -> np.ndarray:
        return load_mask(self.check(path))

    def read_text(self, path) -> str:
        return Path(self.check(path)).read_text()


def audit_for_split(
    manifest: DatasetManifest, split: str, stage: str = ""
) -> AccessAudit:
    allowed = []
    for e in manifest.split(split):
        allowed.append(manifest.image_path(e))
        lp = manifest.labels_path(e)
        if lp is not None:
            allowed.append(lp)
    return AccessAudit(allowed, stage=stage)

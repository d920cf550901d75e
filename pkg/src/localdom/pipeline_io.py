"""Shared helpers for loading per-entry labels and building priors."""

from __future__ import annotations

import json
from typing import Optional

from .errors import MissingFile
from .imgio import load_mask
from .manifest import AccessAudit, DatasetManifest, ManifestEntry
from .priors import CenterFocusRule, LaneBandRule, SemanticMapRule


def load_labels_for_entry(
    manifest: DatasetManifest,
    entry: ManifestEntry,
    rule,
    audit: Optional[AccessAudit] = None,
):
    """Load whatever label payload the rule needs (possibly nothing)."""
    if isinstance(rule, CenterFocusRule):
        return None
    path = manifest.labels_path(entry)
    if path is None:
        raise MissingFile(f"entry {entry.image} has no labels but the rule needs them")
    if isinstance(rule, LaneBandRule):
        text = audit.read_text(path) if audit else path.read_text()
        return json.loads(text)["polylines"]
    if isinstance(rule, SemanticMapRule):
        return audit.load_mask(path) if audit else load_mask(path)
    raise ValueError(f"unsupported rule type {type(rule).__name__}")

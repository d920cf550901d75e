"""Patch sampling and extraction around local domains.

Centers are drawn uniformly (with replacement) over pixels that belong to the
requested domain and leave a full size//2 margin to every image border, so
every crop lies fully in bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import EmptyDomain, TooSmall
from .priors import GeometricPrior, LocalDomainId, indicator_mask


@dataclass(frozen=True)
class PatchSpec:
    """Square patch side in pixels and how many to sample per image."""

    size: int
    per_image: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("patch size must be positive")
        if self.per_image < 1:
            raise ValueError("per_image must be positive")


@dataclass
class Patch:
    pixels: np.ndarray  # (size, size[, C]) float32 for images, uint8 for masks
    center: tuple  # (row, col)
    image_id: str
    domain_id: int


@dataclass
class PatchSet:
    """Ordered image patches of one size from one domain."""

    patches: List[Patch] = field(default_factory=list)
    domain: LocalDomainId | None = None
    size: int = 0

    def __len__(self):
        return len(self.patches)

    def __iter__(self):
        return iter(self.patches)

    def __getitem__(self, i):
        return self.patches[i]

    def stack(self) -> np.ndarray:
        return np.stack([p.pixels for p in self.patches], axis=0)

    def extend(self, other: "PatchSet") -> None:
        if other.size != self.size and self.patches:
            raise ValueError("cannot mix patch sizes in one set")
        self.size = other.size
        if self.domain is None:
            self.domain = other.domain
        self.patches.extend(other.patches)


class MaskPatchSet(PatchSet):
    """Binary mask crops, aligned one-to-one with an image PatchSet."""


def valid_center_bounds(dim: int, size: int) -> tuple:
    """Inclusive center range along one axis: a full size//2 margin each side."""
    half = size // 2
    return half, dim - 1 - half


def crop_origin(center: tuple, size: int) -> tuple:
    return center[0] - size // 2, center[1] - size // 2


def sample_patch_centers(
    indicator: np.ndarray, spec: PatchSpec, rng: np.random.Generator
) -> List[tuple]:
    """Draw spec.per_image centers uniformly over valid positive pixels.

    Sampling is with replacement, so small domains still yield the requested
    count. Deterministic given the rng state.
    """
    indicator = np.asarray(indicator)
    h, w = indicator.shape
    r0, r1 = valid_center_bounds(h, spec.size)
    c0, c1 = valid_center_bounds(w, spec.size)
    if r1 < r0 or c1 < c0:
        raise TooSmall(
            f"patch size {spec.size} leaves no valid centers in a {h}x{w} image"
        )
    valid = np.zeros_like(indicator, dtype=bool)
    valid[r0 : r1 + 1, c0 : c1 + 1] = indicator[r0 : r1 + 1, c0 : c1 + 1] != 0
    rows, cols = np.nonzero(valid)
    if rows.size == 0:
        raise EmptyDomain("no domain pixels inside the valid-center region")
    picks = rng.integers(0, rows.size, size=spec.per_image)
    return [(int(rows[i]), int(cols[i])) for i in picks]


def extract_patches(
    image: np.ndarray,
    prior: GeometricPrior,
    domain,
    spec: PatchSpec,
    rng: np.random.Generator,
    image_id: str = "",
):
    """Sample centers in one domain and crop image + indicator jointly.

    Returns (PatchSet, MaskPatchSet); element k of both comes from the same
    center, so the mask crop marks which patch pixels belong to the domain.
    """
    image = np.asarray(image)
    if isinstance(domain, str):
        domain = prior.domain(domain)
    if image.shape[:2] != prior.shape:
        raise ValueError("image and prior shapes differ")
    ind = indicator_mask(prior, domain)
    centers = sample_patch_centers(ind, spec, rng)
    pset = PatchSet(domain=domain, size=spec.size)
    mset = MaskPatchSet(domain=domain, size=spec.size)
    for r, c in centers:
        top, left = crop_origin((r, c), spec.size)
        sl = np.s_[top : top + spec.size, left : left + spec.size]
        pset.patches.append(
            Patch(np.ascontiguousarray(image[sl]), (r, c), image_id, domain.id)
        )
        mset.patches.append(
            Patch(np.ascontiguousarray(ind[sl]), (r, c), image_id, domain.id)
        )
    return pset, mset

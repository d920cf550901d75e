"""Geometric priors: integer masks that assign each pixel to a local domain.

A prior is built from cheap geometric rules (polyline bands, semantic class
maps, or a fixed center/corner layout), never learned. Id 0 is reserved for
pixels outside every local domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Sequence

import numpy as np

from .errors import DegenerateGeometry, UnknownClass
from . import imgio

OTHER_ID = 0


@dataclass(frozen=True)
class LocalDomainId:
    """Numeric id plus human-readable name of one local domain."""

    id: int
    name: str

    def __post_init__(self):
        if self.id <= 0:
            raise ValueError("domain ids must be positive; 0 is reserved")


@dataclass
class GeometricPrior:
    """Integer mask over an image plus the declared domain table."""

    mask: np.ndarray  # (H, W) int32
    domains: tuple
    source: str

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=np.int32)
        if self.mask.ndim != 2:
            raise ValueError("prior mask must be 2-D")
        declared = {d.id for d in self.domains} | {OTHER_ID}
        present = set(np.unique(self.mask).tolist())
        extra = present - declared
        if extra:
            raise ValueError(f"prior contains undeclared domain ids {sorted(extra)}")

    @property
    def shape(self):
        return self.mask.shape

    def domain(self, name: str) -> LocalDomainId:
        for d in self.domains:
            if d.name == name:
                return d
        raise UnknownClass(f"domain {name!r} is not declared by this prior")


def indicator_mask(prior: GeometricPrior, domain) -> np.ndarray:
    """Binary (H, W) uint8 map: 1 where the prior assigns the given domain."""
    if isinstance(domain, str):
        domain = prior.domain(domain)
    if all(d.id != domain.id for d in prior.domains):
        raise UnknownClass(f"domain id {domain.id} is not declared by this prior")
    return (prior.mask == domain.id).astype(np.uint8)


# ---------------------------------------------------------------------------
# Rules


@dataclass(frozen=True)
class LaneBandRule:
    """Band around labeled polylines plus a surrounding ring.

    band_halfwidth is measured from the polyline in pixels; the band is all
    pixels strictly closer than it. ring_width extends outward from the band
    edge and defaults to three times the full band width.
    """

    band: LocalDomainId
    ring: LocalDomainId
    band_halfwidth: float = 4.0
    ring_width: float | None = None

    kind = "lane_polylines"

    def resolved_ring_width(self) -> float:
        if self.ring_width is not None:
            return float(self.ring_width)
        return 3.0 * (2.0 * self.band_halfwidth)


@dataclass(frozen=True)
class SemanticMapRule:
    """Relabel semantic classes into local domains; all other classes -> 0."""

    classes: Dict[int, LocalDomainId]

    kind = "semantic_map"


@dataclass(frozen=True)
class CenterFocusRule:
    """Fixed layout: centered disc is one domain, four corner squares another.

    The disc radius is center_radius_frac * min(H, W); corner squares have
    side int(corner_side_frac * min(H, W)). The disc is painted last, so it
    wins any overlap.
    """

    center: LocalDomainId
    corners: LocalDomainId
    center_radius_frac: float = 0.25
    corner_side_frac: float = 0.2

    kind = "fixed_center_focus"


def _segment_distance(rows, cols, p0, p1):
    """Distance from each pixel center to one segment, vectorized."""
    d = p1 - p0
    seg_len2 = float(d @ d)
    pr = rows - p0[0]
    pc = cols - p0[1]
    if seg_len2 == 0.0:
        return np.hypot(pr, pc)
    t = np.clip((pr * d[0] + pc * d[1]) / seg_len2, 0.0, 1.0)
    return np.hypot(pr - t * d[0], pc - t * d[1])


def polyline_distance(shape, polylines: Sequence) -> np.ndarray:
    """Min distance from each pixel center (integer coords) to any polyline.

    Polyline points are (row, col) floats; single-point polylines degrade to
    point distance.
    """
    h, w = shape
    rr, cc = np.meshgrid(
        np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij"
    )
    dist = np.full((h, w), np.inf)
    for line in polylines:
        pts = np.asarray(line, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("each polyline must be a sequence of (row, col) points")
        if len(pts) == 1:
            np.minimum(dist, _segment_distance(rr, cc, pts[0], pts[0]), out=dist)
            continue
        for a, b in zip(pts[:-1], pts[1:]):
            np.minimum(dist, _segment_distance(rr, cc, a, b), out=dist)
    return dist


def build_prior(shape, rule, labels=None) -> GeometricPrior:
    """Rasterize a rule over an image shape into a GeometricPrior.

    labels: polylines for LaneBandRule, an (H, W) class map for
    SemanticMapRule, unused for CenterFocusRule.
    """
    h, w = int(shape[0]), int(shape[1])
    mask = np.zeros((h, w), dtype=np.int32)

    if isinstance(rule, LaneBandRule):
        if labels is None or len(labels) == 0:
            raise DegenerateGeometry("lane rule needs at least one polyline")
        dist = polyline_distance((h, w), labels)
        band = dist < rule.band_halfwidth
        if not band.any():
            raise DegenerateGeometry("lane band has zero area")
        ring = (~band) & (dist < rule.band_halfwidth + rule.resolved_ring_width())
        mask[ring] = rule.ring.id
        mask[band] = rule.band.id
        domains = (rule.band, rule.ring)

    elif isinstance(rule, SemanticMapRule):
        if labels is None:
            raise ValueError("semantic rule needs a class map")
        classes = np.asarray(labels)
        if classes.shape != (h, w):
            raise ValueError("class map shape does not match the image shape")
        present = set(np.unique(classes).tolist())
        for class_id, dom in rule.classes.items():
            if class_id not in present:
                raise UnknownClass(
                    f"semantic rule references class {class_id} absent from labels"
                )
            mask[classes == class_id] = dom.id
        domains = tuple(rule.classes.values())

    elif isinstance(rule, CenterFocusRule):
        m = min(h, w)
        radius = rule.center_radius_frac * m
        if radius <= 0:
            raise DegenerateGeometry("focus disc has zero area")
        side = int(rule.corner_side_frac * m)
        if side > 0:
            mask[:side, :side] = rule.corners.id
            mask[:side, w - side:] = rule.corners.id
            mask[h - side:, :side] = rule.corners.id
            mask[h - side:, w - side:] = rule.corners.id
        rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
        disc = (rr - cy) ** 2 + (cc - cx) ** 2 <= radius**2
        if not disc.any():
            raise DegenerateGeometry("focus disc has zero area")
        mask[disc] = rule.center.id
        domains = (rule.center, rule.corners)

    else:
        raise ValueError(f"unknown prior rule type {type(rule).__name__}")

    return GeometricPrior(mask=mask, domains=domains, source=rule.kind)


def save_prior(path, prior: GeometricPrior) -> None:
    """Persist as single-channel PNG; pixel value is the domain id."""
    imgio.save_mask(path, prior.mask)


def load_prior(path, domains: Iterable[LocalDomainId], source: str) -> GeometricPrior:
    mask = imgio.load_mask(path)
    return GeometricPrior(mask=mask, domains=tuple(domains), source=source)

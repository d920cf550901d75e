"""Quantitative evaluation: sharpness maps, patch pairing, edit-parameter
grid search, distribution gaps, and pluggable external metric backends.

Heavy perceptual metrics are not bundled. They plug in through the backend
registry; a multi-scale normalized L2 distance is always registered as a
lightweight stand-in. Backends that download models may use the directory
named by the LOCALDOM_CACHE environment variable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .errors import BackendMissing, EmptySet, ShapeMismatch
from .imgio import luminance

HIST_EPS = 1e-8


@dataclass(frozen=True)
class DistanceBackend:
    """Named callable computing a nonnegative dissimilarity."""

    name: str
    kind: str  # "pixel" | "perceptual" | "set"
    fn: Callable


@dataclass(frozen=True)
class MetricResult:
    metric: str
    backend: str
    value: float


_REGISTRY: Dict[str, DistanceBackend] = {}


def register_backend(backend: DistanceBackend) -> None:
    _REGISTRY[backend.name] = backend


def get_backend(name: str) -> DistanceBackend:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise BackendMissing(
            f"no metric backend named {name!r} is registered"
        ) from None


def registered_backends() -> List[str]:
    return sorted(_REGISTRY)


def cache_dir() -> Optional[str]:
    """Directory external backends should use for model files, if set."""
    return os.environ.get("LOCALDOM_CACHE")


def _pixel_l2(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"distance inputs differ in shape: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _standardize(x: np.ndarray) -> np.ndarray:
    mu = x.mean()
    sd = x.std()
    return (x - mu) / (sd + 1e-8)


def _multiscale_l2(a: np.ndarray, b: np.ndarray, scales: int = 3) -> float:
    """Mean standardized L2 over a small dyadic pyramid.

    A crude perceptual stand-in: contrast-normalized differences aggregated
    across resolutions. Zero iff the inputs are identical up to per-scale
    affine intensity shifts at every level; we keep the raw difference too so
    plain identity is the only exact zero in practice.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"distance inputs differ in shape: {a.shape} vs {b.shape}")
    ga, gb = luminance(a), luminance(b)
    total = 0.0
    for s in range(scales):
        if min(ga.shape) < 2 and s > 0:
            break
        total += float(np.sqrt(np.mean((_standardize(ga) - _standardize(gb)) ** 2)))
        if s < scales - 1:
            ga = ndimage.zoom(ga, 0.5, order=1, grid_mode=True, mode="nearest")
            gb = ndimage.zoom(gb, 0.5, order=1, grid_mode=True, mode="nearest")
    return total / scales


register_backend(DistanceBackend("pixel_l2", "pixel", _pixel_l2))
register_backend(DistanceBackend("multiscale_l2", "perceptual", _multiscale_l2))


def image_distance(a: np.ndarray, b: np.ndarray, backend: str = "pixel_l2") -> float:
    return float(get_backend(backend).fn(a, b))


# ---------------------------------------------------------------------------
# Sharpness


def focus_map(image: np.ndarray, sigma: float = 1.0, window: int = 7) -> np.ndarray:
    """Window-pooled magnitude of the Laplacian-of-Gaussian response.

    Constant images map to zero; blurring lowers the map everywhere.
    """
    gray = luminance(np.asarray(image, dtype=np.float64))
    smooth = ndimage.gaussian_filter(gray, sigma=sigma, mode="reflect")
    resp = ndimage.laplace(smooth, mode="reflect")
    return ndimage.uniform_filter(np.abs(resp), size=window, mode="reflect")


def in_focus_average(images: Sequence[np.ndarray], sigma: float = 1.0) -> float:
    """Mean focus-map value over a set of images."""
    images = list(images)
    if not images:
        raise EmptySet("in_focus_average needs at least one image")
    return float(np.mean([focus_map(im, sigma=sigma).mean() for im in images]))


def band_energy(image: np.ndarray, region: np.ndarray, window: int = 11) -> float:
    """Mean |pixel - local background| over a region.

    The local background is the windowed average of pixels outside the
    region, so the measure captures how much the region pops out of its
    surroundings (e.g. bright markings on pavement).
    """
    img = luminance(np.asarray(image, dtype=np.float64))
    reg = np.asarray(region) != 0
    if reg.shape != img.shape:
        raise ShapeMismatch("region mask must match the image shape")
    if not reg.any():
        raise EmptySet("band_energy region is empty")
    outside = (~reg).astype(np.float64)
    num = ndimage.uniform_filter(img * outside, size=window, mode="reflect")
    den = ndimage.uniform_filter(outside, size=window, mode="reflect")
    background = np.where(den > 1e-12, num / np.maximum(den, 1e-12), img)
    return float(np.abs(img - background)[reg].mean())


# ---------------------------------------------------------------------------
# Pairing and grid search


@dataclass
class PairingResult:
    pairs: List[Tuple[int, int, float]]  # (clear index, degraded index, distance)
    unmatched_degraded: List[int]


def pair_by_distance(
    clear: Sequence[np.ndarray],
    degraded: Sequence[np.ndarray],
    backend: str = "pixel_l2",
) -> PairingResult:
    """Exhaustively match each clear image to its nearest degraded image.

    Non-injective: one degraded image may serve several clear ones. Ties
    resolve to the lowest degraded index. Degraded images never selected are
    reported as unmatched.
    """
    clear = list(clear)
    degraded = list(degraded)
    if not clear or not degraded:
        raise EmptySet("pair_by_distance needs nonempty sets on both sides")
    fn = get_backend(backend).fn
    pairs = []
    used = set()
    for ci, cim in enumerate(clear):
        dists = np.array([float(fn(cim, dim)) for dim in degraded])
        di = int(np.argmin(dists))  # argmin takes the first (lowest) index on ties
        used.add(di)
        pairs.append((ci, di, float(dists[di])))
    unmatched = [i for i in range(len(degraded)) if i not in used]
    return PairingResult(pairs=pairs, unmatched_degraded=unmatched)


@dataclass
class GridSearchResult:
    best: Tuple[float, float, float]  # (z, gamma, distance)
    second: Optional[Tuple[float, float, float]]
    table: List[Tuple[float, float, float]]


def grid_search_edit(
    bundle,
    patch_image: np.ndarray,
    patch_prior,
    reference: np.ndarray,
    z_values: Sequence[float],
    gamma_values: Sequence[float],
    backend: str = "pixel_l2",
) -> GridSearchResult:
    """Scan an edit-strength grid and rank outputs by distance to a reference.

    Every (z, gamma) cell renders a deterministic edit of the patch; the best
    and runner-up cells come back along with the full table (scan order is
    z-major, then gamma).
    """
    from .translator import hallucinate

    z_values = list(z_values)
    gamma_values = list(gamma_values)
    if not z_values or not gamma_values:
        raise EmptySet("grid_search_edit needs nonempty grids")
    fn = get_backend(backend).fn
    table = []
    for z in z_values:
        for g in gamma_values:
            out = hallucinate(bundle, patch_image, patch_prior, z=z, gamma=g)
            table.append((float(z), float(g), float(fn(out, reference))))
    order = sorted(range(len(table)), key=lambda i: (table[i][2], i))
    best = table[order[0]]
    second = table[order[1]] if len(table) > 1 else None
    return GridSearchResult(best=best, second=second, table=table)


# ---------------------------------------------------------------------------
# Distribution gap and external metrics


def _pooled_histogram(images: Sequence[np.ndarray], bins: int) -> np.ndarray:
    first = np.asarray(images[0])
    channels = 1 if first.ndim == 2 else first.shape[-1]
    hists = np.zeros((channels, bins), dtype=np.float64)
    for im in images:
        arr = np.asarray(im, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[..., None]
        for c in range(channels):
            idx = np.clip((arr[..., c] * bins).astype(np.int64), 0, bins - 1)
            hists[c] += np.bincount(idx.ravel(), minlength=bins)
    return hists / np.maximum(hists.sum(axis=1, keepdims=True), 1.0)


def _kl(p: np.ndarray, q: np.ndarray, eps: float = HIST_EPS) -> float:
    q = np.maximum(q, eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / q), 0.0)
    return float(terms.sum())


def domain_gap_estimate(
    set_a: Sequence[np.ndarray], set_b: Sequence[np.ndarray], bins: int = 64
) -> float:
    """Symmetrized KL between pooled per-channel intensity histograms.

    Zero for identical sets; large but finite (floored at the histogram
    epsilon) for disjoint supports.
    """
    set_a = list(set_a)
    set_b = list(set_b)
    if not set_a or not set_b:
        raise EmptySet("domain_gap_estimate needs two nonempty sets")
    ha = _pooled_histogram(set_a, bins)
    hb = _pooled_histogram(set_b, bins)
    if ha.shape != hb.shape:
        raise ShapeMismatch("sets have different channel counts")
    per_channel = [
        _kl(ha[c], hb[c]) + _kl(hb[c], ha[c]) for c in range(ha.shape[0])
    ]
    return float(np.mean(per_channel))


def external_metric(name: str, *args, **kwargs) -> MetricResult:
    """Delegate to a registered backend; never computes a stand-in silently."""
    backend = get_backend(name)
    value = float(backend.fn(*args, **kwargs))
    return MetricResult(metric=name, backend=backend.name, value=value)

"""Image and mask I/O plus small pixel-format helpers.

Images travel through the pipeline as float arrays in [0, 1], shaped (H, W)
or (H, W, C). On disk they are 8-bit PNG. Integer masks are single-channel
PNG whose pixel values are the domain ids themselves.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temp file in the same directory, then rename.

    os.replace is atomic on POSIX, so readers never observe partial files.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, str(path))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_float(arr: np.ndarray) -> np.ndarray:
    """uint8 [0,255] -> float32 [0,1]; float input passes through as float32."""
    if arr.dtype == np.uint8:
        return arr.astype(np.float32) / 255.0
    return arr.astype(np.float32, copy=False)


def to_uint8(arr: np.ndarray) -> np.ndarray:
    """float [0,1] -> uint8 with round-half-away quantization."""
    return np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)


def load_image(path) -> np.ndarray:
    """Load a PNG as float32 in [0,1]; RGB images come back (H, W, 3)."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im)
    return to_float(arr)


def save_image(path, image: np.ndarray) -> None:
    """Quantize to 8-bit and write atomically."""
    data = _encode_png(to_uint8(image))
    atomic_write_bytes(path, data)


def load_mask(path) -> np.ndarray:
    """Load a single-channel integer mask PNG as (H, W) int32."""
    with Image.open(path) as im:
        if im.mode != "L":
            im = im.convert("L")
        arr = np.asarray(im)
    return arr.astype(np.int32)


def save_mask(path, mask: np.ndarray) -> None:
    """Write an integer mask (values must fit uint8) as 1-channel PNG."""
    arr = np.asarray(mask)
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("mask values must be in [0, 255] to persist as PNG")
    data = _encode_png(arr.astype(np.uint8))
    atomic_write_bytes(path, data)


def _encode_png(arr: np.ndarray) -> bytes:
    import io

    mode = "L" if arr.ndim == 2 else "RGB"
    im = Image.fromarray(arr, mode=mode)
    buf = io.BytesIO()
    im.save(buf, format="PNG")
    return buf.getvalue()


def luminance(image: np.ndarray) -> np.ndarray:
    """Rec.601 luma for (H, W, 3) input; single-channel input passes through."""
    if image.ndim == 2:
        return image
    if image.shape[-1] == 1:
        return image[..., 0]
    r, g, b = LUMA_WEIGHTS
    return r * image[..., 0] + g * image[..., 1] + b * image[..., 2]

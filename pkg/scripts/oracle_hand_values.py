"""Independent reference values, computed with numpy/scipy only.

Run this script to regenerate every hand-checkable constant frozen into the
test suite. Nothing here imports the package under test.
"""

import math

import numpy as np
from scipy import ndimage, stats


def kl(p, q, eps=1e-8):
    p = np.asarray(p, dtype=np.float64)
    q = np.maximum(np.asarray(q, dtype=np.float64), eps)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def main():
    print("== histogram KL ==")
    print("kl([.5,.5],[.25,.75]) =", kl([0.5, 0.5], [0.25, 0.75]))
    print("kl([1,0],[0,1]) eps=1e-8 =", kl([1.0, 0.0], [0.0, 1.0]))

    print("== gaussian KL, mu=[1,0] logvar=0 ==")
    mu = np.array([1.0, 0.0])
    logvar = np.zeros(2)
    val = 0.5 * np.sum(mu**2 + np.exp(logvar) - logvar - 1.0)
    print("closed form =", val)

    print("== binomial 99% central intervals, n=1000 ==")
    for p in (0.05, 0.1, 0.5):
        lo = int(stats.binom.ppf(0.005, 1000, p))
        hi = int(stats.binom.ppf(0.995, 1000, p))
        print(f"p={p}: [{lo}, {hi}]")

    print("== tile plans (enumerated) ==")
    def axis(dim, tile, overlap):
        stride = tile - overlap
        pos = list(range(0, dim - tile + 1, stride))
        if pos[-1] != dim - tile:
            pos.append(dim - tile)
        return pos
    print("dim=100 tile=64 ov=0  ->", axis(100, 64, 0))
    print("dim=128 tile=64 ov=16 ->", axis(128, 64, 16))

    print("== fixed prior pixel counts, 64x64 r_c=.25 r_k=.2 ==")
    h = w = 64
    radius = 0.25 * 64
    side = int(0.2 * 64)
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    cy = cx = (64 - 1) / 2.0
    disc = (rr - cy) ** 2 + (cc - cx) ** 2 <= radius**2
    corners = np.zeros((h, w), dtype=bool)
    corners[:side, :side] = corners[:side, -side:] = True
    corners[-side:, :side] = corners[-side:, -side:] = True
    print("disc px =", int(disc.sum()), " corner px =", int((corners & ~disc).sum()),
          " side =", side)

    print("== valid patch centers, 64x64 size=16 ==")
    size = 16
    lo, hi = size // 2, 64 - 1 - size // 2
    print("bounds =", (lo, hi))

    print("== contrast jitter example ==")
    pair = np.array([0.25, 0.75])
    mean = pair.mean()
    print("contrast 1.5 about mean ->", (pair - mean) * 1.5 + mean)

    print("== uniform ramp histogram bound, 256 bins ==")
    ramp = np.linspace(0.0, 1.0, 256 * 40)
    counts = np.bincount(np.minimum((ramp * 256).astype(int), 255), minlength=256)
    hist = counts / counts.sum()
    print("max-min bin mass =", float(hist.max() - hist.min()), "< 2/256 =", 2 / 256)

    print("== LoG variance ratio, noise vs blurred (seed 0, sigma 2) ==")
    rng = np.random.default_rng(0)
    noise = rng.random((64, 64))
    blurred = ndimage.gaussian_filter(noise, 2.0)
    def log_var(img):
        smoothed = ndimage.gaussian_filter(img, 1.0)
        resp = ndimage.laplace(smoothed)
        return float(resp.var())
    print("ratio =", log_var(noise) / log_var(blurred))


if __name__ == "__main__":
    main()

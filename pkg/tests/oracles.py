"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the package's numerical code.
"""

import math

import numpy as np


def reflect(j, n):
    """Index of padded coordinate ``j`` under 'reflect' (edge not repeated)."""
    if n == 1:
        return 0
    while j < 0 or j >= n:
        if j < 0:
            j = -j
        if j >= n:
            j = 2 * (n - 1) - j
    return j


def naive_convolve(img, weights):
    """Quadruple loop, reflect borders, per channel."""
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[..., None]
    H, W, C = img.shape
    k = weights.shape[0]
    r = k // 2
    out = np.zeros_like(img)
    for c in range(C):
        for i in range(H):
            for j in range(W):
                acc = 0.0
                for a in range(k):
                    for b in range(k):
                        acc += weights[a, b] * img[reflect(i + a - r, H), reflect(j + b - r, W), c]
                out[i, j, c] = acc
    return out[..., 0] if squeeze else out


def naive_rmse(a, b):
    a = np.asarray(a, dtype=np.float64).reshape(a.shape[0], a.shape[1], -1)
    b = np.asarray(b, dtype=np.float64).reshape(b.shape[0], b.shape[1], -1)
    total = 0.0
    count = 0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for c in range(a.shape[2]):
                total += (a[i, j, c] - b[i, j, c]) ** 2
                count += 1
    return math.sqrt(total / count)


def naive_psnr(a, b):
    e = naive_rmse(a, b)
    return 100.0 if e < 1e-5 else 20 * math.log10(1.0 / e)


def naive_ssim(a, b, size=11, sigma=1.5, k1=0.01, k2=0.03):
    """Explicit weighted statistics at every fully-contained window position."""
    a = np.asarray(a, dtype=np.float64).reshape(a.shape[0], a.shape[1], -1)
    b = np.asarray(b, dtype=np.float64).reshape(b.shape[0], b.shape[1], -1)
    c1, c2 = k1 ** 2, k2 ** 2
    half = (size - 1) / 2
    w = np.array([[math.exp(-((i - half) ** 2 + (j - half) ** 2) / (2 * sigma ** 2))
                   for j in range(size)] for i in range(size)])
    w /= w.sum()
    H, W, C = a.shape
    per_channel = []
    for c in range(C):
        vals = []
        for i in range(H - size + 1):
            for j in range(W - size + 1):
                pa = a[i:i + size, j:j + size, c]
                pb = b[i:i + size, j:j + size, c]
                ma = (w * pa).sum()
                mb = (w * pb).sum()
                va = (w * (pa - ma) ** 2).sum()
                vb = (w * (pb - mb) ** 2).sum()
                cov = (w * (pa - ma) * (pb - mb)).sum()
                vals.append(((2 * ma * mb + c1) * (2 * cov + c2))
                            / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
        per_channel.append(sum(vals) / len(vals))
    return sum(per_channel) / C


def sorted_quantile(values, q):
    """Linear interpolation between order statistics (position q * (n - 1))."""
    s = sorted(values)
    pos = q * (len(s) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (s[hi] - s[lo]) * (pos - lo)


def numeric_grad(f, x, h=1e-3):
    """Central differences of scalar ``f`` with respect to every entry of ``x`` (in place)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + h
        fp = f()
        x[idx] = old - h
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def rel_error(analytic, numeric):
    """Max abs deviation relative to the largest numeric gradient entry."""
    scale = max(np.abs(numeric).max(), np.abs(analytic).max(), 1e-12)
    return float(np.abs(analytic - numeric).max() / scale)

"""Small deterministic test images on the [0, 255] scale."""

import numpy as np

KINDS = ("shapes", "ramp", "texture")


def shapes(n):
    """Piecewise-constant: background, rectangle, disc and triangle."""
    img = np.full((n, n), 40.0)
    i, j = np.mgrid[0:n, 0:n] / n
    img[(i > 0.12) & (i < 0.45) & (j > 0.1) & (j < 0.55)] = 200.0
    img[(i - 0.68) ** 2 + (j - 0.68) ** 2 < 0.22 ** 2] = 120.0
    img[(i > 0.55) & (j < 0.45) & (j > 0.08) & (j - 0.08 < i - 0.55)] = 255.0
    img[(i > 0.2) & (i < 0.35) & (j > 0.65) & (j < 0.9)] = 0.0
    return img


def ramp(n):
    """Smooth diagonal ramp with a gentle bump."""
    i, j = np.mgrid[0:n, 0:n] / (n - 1)
    img = 0.6 * (i + j) / 2 + 0.4 * np.exp(-((i - 0.5) ** 2 + (j - 0.5) ** 2) / 0.05)
    return 255.0 * (img - img.min()) / (img.max() - img.min())


def texture(n):
    """Stripes and checks mixed with a blocky layout."""
    i, j = np.mgrid[0:n, 0:n]
    stripes = 0.5 + 0.5 * np.sin(2 * np.pi * i / 8.0)
    checks = ((i // 6 + j // 6) % 2).astype(float)
    img = np.where(j < n // 2, stripes, checks)
    img = 0.7 * img + 0.3 * shapes(n) / 255.0
    return 255.0 * (img - img.min()) / (img.max() - img.min())


def make(kind, n):
    try:
        fn = {"shapes": shapes, "ramp": ramp, "texture": texture}[kind]
    except KeyError:
        raise ValueError(f"unknown synthetic image {kind!r}; expected one of {', '.join(KINDS)}") from None
    if n < 8:
        raise ValueError("synthetic images need n >= 8")
    return fn(n)

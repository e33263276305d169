"""SNR and SSIM quality metrics."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import as_image
from .spectral import gaussian_kernel


def _pair(reference, test):
    reference = as_image(reference, "reference")
    test = as_image(test, "test")
    if reference.shape != test.shape:
        raise ValueError(f"dimension mismatch: {reference.shape} vs {test.shape}")
    return reference, test


def snr(reference, test):
    """``10 log10(||ref - mean(ref)||^2 / ||test - ref||^2)`` in dB; ``inf`` when identical."""
    reference, test = _pair(reference, test)
    err = float(np.sum((test - reference) ** 2))
    if err == 0:
        return math.inf
    signal = float(np.sum((reference - reference.mean()) ** 2))
    if signal == 0:
        return -math.inf
    return 10.0 * math.log10(signal / err)


@dataclass(frozen=True)
class SsimParams:
    window_size: int = 11
    window_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.window_size < 1 or self.window_size % 2 == 0:
            raise ValueError("SSIM window size must be odd and positive")
        if not (self.window_sigma > 0 and self.k1 > 0 and self.k2 > 0 and self.dynamic_range > 0):
            raise ValueError("SSIM window sigma, k1, k2 and dynamic range must be positive")


def ssim_map(reference, test, params=SsimParams()):
    """Local SSIM index under a periodic Gaussian window."""
    reference, test = _pair(reference, test)
    if min(reference.shape) < params.window_size:
        raise ValueError(
            f"image {reference.shape} is smaller than the {params.window_size}x{params.window_size} window"
        )
    w = gaussian_kernel(params.window_size, params.window_sigma)

    def filt(x):
        return ndimage.correlate(x, w, mode="wrap")

    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    mu_a = filt(reference)
    mu_b = filt(test)
    var_a = filt(reference * reference) - mu_a * mu_a
    var_b = filt(test * test) - mu_b * mu_b
    cov = filt(reference * test) - mu_a * mu_b
    num = (2.0 * (mu_a * mu_b) + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(reference, test, params=SsimParams()):
    return float(np.mean(ssim_map(reference, test, params)))

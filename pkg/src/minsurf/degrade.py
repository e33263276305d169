"""Linear-stretch normalization and the blur-then-noise degradation model."""

from dataclasses import dataclass

import numpy as np

from .grid import as_image
from .spectral import BlurSpec, apply_blur, spectrum_for


@dataclass(frozen=True)
class DegradeSpec:
    noise_sigma: float = 0.0
    blur: BlurSpec = BlurSpec()
    seed: int = 0

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise ValueError(f"noise sigma must be nonnegative, got {self.noise_sigma}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


def normalize(raw):
    """Stretch ``raw`` affinely onto [0, 255]."""
    raw = as_image(raw, "raw image")
    lo, hi = raw.min(), raw.max()
    if not hi > lo:
        raise ValueError("cannot normalize a constant image (zero dynamic range)")
    out = 255.0 * (raw - lo) / (hi - lo)
    # pin the endpoints against rounding in the division
    out[raw == lo] = 0.0
    out[raw == hi] = 255.0
    return out


def noise(spec, shape):
    """White Gaussian noise from a PCG64 stream seeded by ``spec.seed``."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    return spec.noise_sigma * rng.standard_normal(shape)


def degrade(spec, clean):
    """``K clean + eta``; the result is not clipped."""
    clean = as_image(clean, "clean image")
    height, width = clean.shape
    if spec.blur.is_identity:
        blurred = clean.copy()
    else:
        blurred = apply_blur(spectrum_for(spec.blur, width, height), clean)
    if spec.noise_sigma == 0:
        return blurred
    return blurred + noise(spec, clean.shape)

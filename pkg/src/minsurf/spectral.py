"""Gaussian PSFs and FFT-diagonalized circular convolution.

Forward transforms are unnormalized, inverse transforms scale by
``1 / (width * height)``. The identity operator is a delta PSF, so denoising
and deblurring share the same code path.
"""

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .grid import as_image


def fft_workers():
    """Worker count for FFTs, from ``MINSURF_THREADS`` (0 or unset = all cores)."""
    raw = os.environ.get("MINSURF_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"MINSURF_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("MINSURF_THREADS must be >= 0")
    return -1 if n == 0 else n


def fft2(u):
    return scipy.fft.fft2(u, workers=fft_workers())


def ifft2(u_hat):
    return scipy.fft.ifft2(u_hat, workers=fft_workers())


@dataclass(frozen=True)
class BlurSpec:
    """Symmetric Gaussian low-pass filter ``G(hsize, sigma)``.

    ``hsize=None`` denotes the identity operator (no blur).
    """

    hsize: int | None = None
    sigma: float | None = None

    def __post_init__(self):
        if self.hsize is None:
            if self.sigma is not None:
                raise ValueError("identity blur takes no sigma")
            return
        if int(self.hsize) != self.hsize or self.hsize < 1 or self.hsize % 2 == 0:
            raise ValueError(f"blur hsize must be an odd positive integer, got {self.hsize}")
        if self.sigma is None or not self.sigma > 0:
            raise ValueError(f"blur sigma must be positive, got {self.sigma}")

    @classmethod
    def identity(cls):
        return cls()

    @property
    def is_identity(self):
        return self.hsize is None

    def __str__(self):
        return "I" if self.is_identity else f"G({self.hsize},{self.sigma:g})"


def gaussian_kernel(hsize, sigma):
    """Sampled, truncated and normalized ``hsize x hsize`` Gaussian."""
    r = (hsize - 1) // 2
    a = np.arange(-r, r + 1, dtype=np.float64)
    w = np.exp(-(a[:, None] ** 2 + a[None, :] ** 2) / (2.0 * sigma * sigma))
    return w / w.sum()


def build_psf(spec, width, height):
    """Embed the PSF on a ``height x width`` lattice with its center tap at (0, 0)."""
    if width < 2 or height < 2:
        raise ValueError("lattice must be at least 2x2")
    psf = np.zeros((height, width))
    if spec.is_identity:
        psf[0, 0] = 1.0
        return psf
    if spec.hsize > min(width, height):
        raise ValueError(f"blur hsize {spec.hsize} exceeds lattice {height}x{width}")
    kernel = gaussian_kernel(spec.hsize, spec.sigma)
    r = (spec.hsize - 1) // 2
    offsets = np.arange(-r, r + 1)
    rows = offsets % height
    cols = offsets % width
    psf[np.ix_(rows, cols)] = kernel
    return psf


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Transfer functions of a circulant blur ``K`` and of ``K^T K``."""

    k_hat: np.ndarray
    ktk_hat: np.ndarray

    @property
    def shape(self):
        return self.k_hat.shape

    @property
    def height(self):
        return self.k_hat.shape[0]

    @property
    def width(self):
        return self.k_hat.shape[1]


def make_spectrum(psf):
    psf = as_image(psf, "psf")
    k_hat = fft2(psf)
    ktk_hat = k_hat.real ** 2 + k_hat.imag ** 2
    k_hat.flags.writeable = False
    ktk_hat.flags.writeable = False
    return Spectrum(k_hat, ktk_hat)


def spectrum_for(spec, width, height):
    return make_spectrum(build_psf(spec, width, height))


def _check_dims(spectrum, u):
    if u.shape != spectrum.shape:
        raise ValueError(f"dimension mismatch: spectrum {spectrum.shape} vs image {u.shape}")


def apply_blur(spectrum, u):
    """Circular convolution ``K u``."""
    u = as_image(u)
    _check_dims(spectrum, u)
    return ifft2(spectrum.k_hat * fft2(u)).real


def apply_blur_adjoint(spectrum, u):
    """Circular correlation ``K^T u``."""
    u = as_image(u)
    _check_dims(spectrum, u)
    return ifft2(np.conj(spectrum.k_hat) * fft2(u)).real


def solve_primal(spectrum, u_prev, ktf, div_p, lam, tau):
    """Exact solve of ``(I + lam*tau*K^T K) u = u_prev + lam*tau*K^T f + tau*div_p``."""
    if not (lam > 0 and tau > 0):
        raise ValueError("lambda and tau must be positive")
    rhs = np.asarray(u_prev) + (lam * tau) * np.asarray(ktf) + tau * np.asarray(div_p)
    _check_dims(spectrum, rhs)
    return ifft2(fft2(rhs) / (1.0 + (lam * tau) * spectrum.ktk_hat)).real

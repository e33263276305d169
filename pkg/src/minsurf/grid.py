"""Periodic lattice primitives.

Images are 2-D float64 arrays of shape ``(height, width)``. Dual fields are
arrays of shape ``(2, height, width)`` holding ``(p1, p2)``. The "x" direction
is the first (row) axis, "y" the second (column) axis, and every stencil wraps
periodically.
"""

import numpy as np

PROJECTION_EPS = 1e-12


def as_image(values, name="image"):
    """Validate and return ``values`` as a float64 image grid."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ValueError(f"{name} must be at least 2x2, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_dual(values, name="dual field"):
    """Validate and return ``values`` as a float64 dual field."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 2:
        raise ValueError(f"{name} must have shape (2, H, W), got {arr.shape}")
    if arr.shape[1] < 2 or arr.shape[2] < 2:
        raise ValueError(f"{name} must be at least 2x2, got {arr.shape[1:]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def inner_x(a, b):
    """Pixelwise scalar product of two images."""
    a = as_image(a)
    b = as_image(b)
    _same_shape(a, b)
    return float(np.sum(a * b))


def inner_y(p, q):
    """Scalar product of two dual fields, summed over both channels."""
    p = as_dual(p)
    q = as_dual(q)
    _same_shape(p, q)
    return float(np.sum(p * q))


def norm_x(a):
    return float(np.sqrt(np.sum(np.square(a))))


def gradient(u):
    """Forward differences with periodic wrap: returns ``(D+x u, D+y u)``."""
    u = np.asarray(u, dtype=np.float64)
    p = np.empty((2,) + u.shape)
    p[0] = np.roll(u, -1, axis=0) - u
    p[1] = np.roll(u, -1, axis=1) - u
    return p


def divergence(p):
    """Backward-difference divergence ``D-x p1 + D-y p2``, the negative adjoint of :func:`gradient`."""
    p = np.asarray(p, dtype=np.float64)
    return (p[0] - np.roll(p[0], 1, axis=0)) + (p[1] - np.roll(p[1], 1, axis=1))


def magnitude(p):
    """Pointwise Euclidean norm of a dual field."""
    p = np.asarray(p, dtype=np.float64)
    return np.sqrt(p[0] * p[0] + p[1] * p[1])


def laplacian(u):
    """Periodic 5-point Laplacian, ``div(grad u)``."""
    return divergence(gradient(u))


def project_unit_ball(z):
    """Pointwise projection ``z / max(1, |z|)`` onto the unit disc."""
    return z / np.maximum(1.0, magnitude(z))

"""Image restoration with the smoothed minimal-surface (sqrt(alpha + |grad u|^2)) regularizer."""

from .degrade import DegradeSpec, normalize
from .grid import divergence, gradient, inner_x, inner_y, magnitude
from .metrics import SsimParams, snr, ssim
from .model import ModelParams, StopRule, check_stop, conjugate_identity, energy, euler_lagrange
from .solvers import (
    SolveReport,
    SolverConfig,
    SolverError,
    operator_norm_check,
    solve,
    solve_fpm,
    solve_pdm,
    solve_tmm,
)
from .spectral import (
    BlurSpec,
    Spectrum,
    apply_blur,
    apply_blur_adjoint,
    build_psf,
    make_spectrum,
    solve_primal,
    spectrum_for,
)

__version__ = "0.1.0"

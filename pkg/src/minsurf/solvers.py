"""Iterative minimizers of the minimal-surface restoration energy.

``solve_pdm`` is the primal-dual scheme with FFT primal solves and a
projected dual ascent; ``solve_tmm`` is explicit gradient descent (time
marching) and ``solve_fpm`` is the lagged-diffusivity fixed point with inner
conjugate gradients. All three share :class:`SolverConfig` and return a
:class:`SolveReport`.
"""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .grid import as_image, divergence, gradient, magnitude, project_unit_ball
from .model import ModelParams, StopRule, energy, euler_lagrange, relative_change
from .spectral import apply_blur, apply_blur_adjoint, fft2, ifft2, solve_primal

log = logging.getLogger(__name__)

METHODS = ("pdm", "tmm", "fpm")
DUAL_STEPS = ("prox", "explicit")
STEP_PRODUCT_BOUND = 1.0 / 8.0


class SolverError(RuntimeError):
    """A solver produced non-finite iterates or diverged."""


class CGBreakdown(SolverError):
    """Conjugate gradients met a direction of non-positive curvature."""


def default_dt(lam, alpha):
    """Explicit-scheme step ``0.2 / (lam + 4/sqrt(alpha))``."""
    return 0.2 / (lam + 4.0 / math.sqrt(alpha))


@dataclass(frozen=True)
class SolverConfig:
    params: ModelParams
    stop: StopRule = StopRule()
    tau: float = 0.35
    sigma_step: float = 0.35
    dt: float | None = None
    cg_tol: float = 1e-6
    cg_max_iter: int = 200
    dual_step: str = "prox"

    def __post_init__(self):
        if self.dual_step not in DUAL_STEPS:
            raise ValueError(f"dual_step must be one of {DUAL_STEPS}, got {self.dual_step!r}")
        if not (self.tau > 0 and self.sigma_step > 0):
            raise ValueError("tau and sigma_step must be positive")
        if not self.tau * self.sigma_step < STEP_PRODUCT_BOUND:
            raise ValueError(
                f"step contract violated: tau*sigma = {self.tau * self.sigma_step:g} "
                f"must be < 1/8"
            )
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.cg_tol > 0:
            raise ValueError(f"cg_tol must be positive, got {self.cg_tol}")
        if int(self.cg_max_iter) != self.cg_max_iter or self.cg_max_iter < 1:
            raise ValueError(f"cg_max_iter must be a positive integer, got {self.cg_max_iter}")

    @property
    def effective_dt(self):
        if self.dt is not None:
            return self.dt
        if self.params.alpha == 0:
            raise ValueError("no default dt at alpha = 0")
        return default_dt(self.params.lam, self.params.alpha)

    def as_dict(self):
        dt = self.dt
        if dt is None and self.params.alpha > 0:
            dt = self.effective_dt
        return {
            "lambda": self.params.lam,
            "alpha": self.params.alpha,
            "tau": self.tau,
            "sigma_step": self.sigma_step,
            "dt": dt,
            "rel_tol": self.stop.rel_tol,
            "max_iter": self.stop.max_iter,
            "cg_tol": self.cg_tol,
            "cg_max_iter": self.cg_max_iter,
            "dual_step": self.dual_step,
        }


@dataclass
class SolveReport:
    method: str
    iterations: int
    energy_trace: list
    rel_change_trace: list
    wall_time_seconds: float
    converged: bool
    final_u: np.ndarray
    final_p: np.ndarray | None = None
    warnings: list = field(default_factory=list)
    inner_iterations: list = field(default_factory=list)


def _require_smooth(params, method):
    if not params.alpha > 0:
        raise ValueError(f"{method.upper()} needs alpha > 0: the Euler-Lagrange operator is singular at alpha = 0")


def _check_finite(arr, method, k):
    if not np.all(np.isfinite(arr)):
        raise SolverError(f"{method.upper()}: non-finite values at iteration {k}")


def _iterate(method, config, spectrum, f, step, may_stop=None):
    """Drive ``step(u, k) -> u_next`` under the shared stopping rule.

    ``may_stop(k)``, when given, can veto convergence at iteration ``k``.
    """
    t0 = time.perf_counter()
    f = as_image(f, "f")
    if f.shape != spectrum.shape:
        raise ValueError(f"dimension mismatch: spectrum {spectrum.shape} vs f {f.shape}")
    params, rule = config.params, config.stop
    u = f.copy()
    e = energy(params, spectrum, f, u)
    energies = [e]
    changes = []
    converged = False
    k = 0
    while k < rule.max_iter:
        k += 1
        u_next = step(u, k)
        _check_finite(u_next, method, k)
        e_next = energy(params, spectrum, f, u_next)
        if not math.isfinite(e_next):
            raise SolverError(f"{method.upper()}: non-finite energy at iteration {k}")
        rc = relative_change(u, u_next, e, e_next)
        energies.append(e_next)
        changes.append(rc)
        u, e = u_next, e_next
        if method == "tmm" and e > 10.0 * energies[0]:
            raise SolverError(
                f"TMM diverged at iteration {k} (energy {e:.4g} > 10x initial); use a smaller dt"
            )
        if rc <= rule.rel_tol and (may_stop is None or may_stop(k)):
            converged = True
            break
    return SolveReport(
        method=method,
        iterations=k,
        energy_trace=energies,
        rel_change_trace=changes,
        wall_time_seconds=time.perf_counter() - t0,
        converged=converged,
        final_u=u,
    )


def dual_prox(z, c, newton_steps=60):
    """Resolvent of the conjugate term: ``argmin_{|q|<=1} |q - z|^2/2 - c*sqrt(1 - |q|^2)``.

    The minimizer is ``q = r z/|z|`` with ``r = t/sqrt(1+t^2)`` and ``t`` the
    root of ``t/sqrt(1+t^2) + c*t = |z|``. Newton on this concave increasing
    function converges monotonically from any start left of the root.
    """
    if c == 0:
        return project_unit_ball(z)
    rho = magnitude(z)
    t = np.maximum((rho - 1.0) / c, rho / (1.0 + c))
    for _ in range(newton_steps):
        s = np.sqrt(1.0 + t * t)
        phi = t / s + c * t - rho
        t_next = t - phi / (1.0 / (s * s * s) + c)
        if np.all(np.abs(t_next - t) <= 1e-12 * np.maximum(1.0, t_next)):
            t = t_next
            break
        t = t_next
    r = t / np.sqrt(1.0 + t * t)
    scale = np.divide(r, rho, out=np.zeros_like(rho), where=rho > 0)
    return z * scale


def dual_explicit(p, g, sigma, sqrt_alpha):
    """Projected explicit step ``P(p + sigma*(g*sqrt(1-|p|^2) - sqrt(alpha)*p))``."""
    if sqrt_alpha == 0:
        return project_unit_ball(p + sigma * g)
    # clamp guards against |p| rounding slightly above 1
    scale = np.sqrt(np.maximum(0.0, 1.0 - (p[0] * p[0] + p[1] * p[1])))
    return project_unit_ball(p + sigma * (g * scale - sqrt_alpha * p))


def solve_pdm(config, spectrum, f):
    """Primal-dual iteration started from ``u = f``, ``p = 0``.

    Each step solves the primal system exactly in Fourier space, extrapolates
    ``ubar = 2 u_next - u`` and updates the dual field from ``grad ubar``.
    ``config.dual_step`` selects the exact resolvent (``"prox"``) or the
    linearized projected step (``"explicit"``); both share the fixed point
    ``p = grad u / sqrt(alpha + |grad u|^2)``, and at ``alpha = 0`` both reduce
    to ``P(p + sigma*grad ubar)``.
    """
    f = as_image(f, "f")
    params = config.params
    lam, tau, sigma = params.lam, config.tau, config.sigma_step
    sqrt_alpha = math.sqrt(params.alpha)
    ktf = apply_blur_adjoint(spectrum, f)
    p = np.zeros((2,) + f.shape)
    state = {"p": p, "p_bar": p}

    def step(u, k):
        p = state["p"]
        u_next = solve_primal(spectrum, u, ktf, divergence(state["p_bar"]), lam, tau)
        g = gradient(2.0 * u_next - u)
        if config.dual_step == "prox":
            p_next = dual_prox(p + sigma * g, sigma * sqrt_alpha)
        else:
            p_next = dual_explicit(p, g, sigma, sqrt_alpha)
        _check_finite(p_next, "pdm", k)
        state["p"] = state["p_bar"] = p_next
        return u_next

    def may_stop(k):
        # u^1 = f and pbar = 0 make the first primal step the identity, so a
        # zero first u-change only signals a fixed point if p stayed at 0 too
        return k > 1 or not np.any(state["p"])

    report = _iterate("pdm", config, spectrum, f, step, may_stop)
    report.final_p = state["p"]
    return report


def solve_tmm(config, spectrum, f):
    """Explicit descent ``u <- u - dt*(lam K^T(K u - f) - E_alpha(u))`` from ``u = f``."""
    _require_smooth(config.params, "tmm")
    f = as_image(f, "f")
    params = config.params
    dt = config.effective_dt

    def step(u, k):
        residual = apply_blur(spectrum, u) - f
        grad_e = params.lam * apply_blur_adjoint(spectrum, residual) - euler_lagrange(params, u)
        return u - dt * grad_e

    return _iterate("tmm", config, spectrum, f, step)


def lagged_operator(u, alpha):
    """Frozen-coefficient operator ``v -> -div(grad v / sqrt(|grad u|^2 + alpha))``."""
    coeff = 1.0 / np.sqrt(magnitude(gradient(u)) ** 2 + alpha)

    def apply(v):
        return -divergence(coeff * gradient(v))

    return apply


def apply_gram(spectrum, v):
    """``K^T K v``."""
    return ifft2(spectrum.ktk_hat * fft2(v)).real


def conjugate_gradient(apply_a, b, x0, tol, max_iter):
    """Plain CG for an SPD operator; returns ``(x, iterations, reached_tol)``.

    Raises :class:`CGBreakdown` on non-positive curvature.
    """
    b_norm = np.linalg.norm(b)
    if b_norm == 0:
        return np.zeros_like(b), 0, True
    x = x0.copy()
    r = b - apply_a(x)
    d = r.copy()
    rr = float(np.sum(r * r))
    threshold = (tol * b_norm) ** 2
    if rr <= threshold:
        return x, 0, True
    for i in range(1, max_iter + 1):
        ad = apply_a(d)
        curvature = float(np.sum(d * ad))
        if not curvature > 0:
            raise CGBreakdown(f"non-positive curvature {curvature:.3g} at CG step {i}")
        a = rr / curvature
        x += a * d
        r -= a * ad
        rr_next = float(np.sum(r * r))
        if rr_next <= threshold:
            return x, i, True
        d = r + (rr_next / rr) * d
        rr = rr_next
    return x, max_iter, False


def solve_fpm(config, spectrum, f):
    """Lagged diffusivity: solve ``(lam K^T K + L_k) u = lam K^T f`` by CG each step."""
    _require_smooth(config.params, "fpm")
    f = as_image(f, "f")
    params = config.params
    rhs = params.lam * apply_blur_adjoint(spectrum, f)
    notes = []
    inner = []

    def step(u, k):
        lagged = lagged_operator(u, params.alpha)

        def apply_a(v):
            return params.lam * apply_gram(spectrum, v) + lagged(v)

        u_next, n_cg, ok = conjugate_gradient(apply_a, rhs, u, config.cg_tol, config.cg_max_iter)
        inner.append(n_cg)
        if not ok:
            msg = f"CG hit its cap of {config.cg_max_iter} iterations at outer iteration {k}"
            log.warning(msg)
            notes.append(msg)
        return u_next

    report = _iterate("fpm", config, spectrum, f, step)
    report.warnings = notes
    report.inner_iterations = inner
    return report


SOLVERS = {"pdm": solve_pdm, "tmm": solve_tmm, "fpm": solve_fpm}


def solve(method, config, spectrum, f):
    try:
        solver = SOLVERS[method.lower()]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}") from None
    return solver(config, spectrum, f)


def operator_norm_check(width, height, tol=1e-6, max_iter=20000, seed=0):
    """Power-iteration estimate of ``||grad||^2``, the top eigenvalue of ``-div grad``."""
    if width < 2 or height < 2:
        raise ValueError("lattice must be at least 2x2")
    x = np.random.default_rng(seed).standard_normal((height, width))
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(max_iter):
        y = -divergence(gradient(x))
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        new = float(ny)
        x = y / ny
        if abs(new - estimate) <= tol * new:
            return new
        estimate = new
    return estimate

"""
Measured quantities and verification instruments: conserved integrals, boundary
fluxes, error norms, power-law fits and PDE residuals.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate, stats

from selfsim import kernel
from selfsim.kernel import NonlinearityContext, SuperposedParams
from selfsim.solver import FieldState

logger = logging.getLogger(__name__)

DEFAULT_FLOOR = 1e-3
FRONT_COLLAR = 2


class DiagnosticsError(ValueError):
    """Raised when a diagnostic cannot be computed from its inputs."""


@dataclass(frozen=True)
class TimeSeries:
    """Samples (tau, value) with strictly increasing tau."""
    taus: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        taus = np.array(self.taus, dtype=float)
        values = np.array(self.values, dtype=float)
        if taus.ndim != 1 or taus.shape != values.shape:
            raise DiagnosticsError("TimeSeries needs two 1-D arrays of equal length")
        if not (np.all(np.isfinite(taus)) and np.all(np.isfinite(values))):
            raise DiagnosticsError("TimeSeries values must be finite")
        if np.any(np.diff(taus) <= 0):
            raise DiagnosticsError("TimeSeries times must be strictly increasing")
        taus.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.taus)

    def magnitude(self) -> "TimeSeries":
        return TimeSeries(self.taus, np.abs(self.values))

    def shifted(self, offset: float) -> "TimeSeries":
        return TimeSeries(self.taus + offset, self.values)

    def to_dict(self) -> Dict[str, Any]:
        return {"tau": self.taus.tolist(), "value": self.values.tolist()}


@dataclass(frozen=True)
class ErrorReport:
    l2_rel: float
    linf_rel: float
    support_mask_fraction: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "l2_rel": self.l2_rel,
            "linf_rel": self.linf_rel,
            "support_mask_fraction": self.support_mask_fraction,
        }


class PowerLawFit(NamedTuple):
    exponent: float
    prefactor: float
    r2: float


def total_mass(s: FieldState) -> float:
    """Trapezoidal integral of theta over the grid."""
    return float(integrate.trapezoid(s.theta, s.xi))


def first_moment(s: FieldState) -> float:
    """Trapezoidal integral of xi * theta over the grid."""
    xi = s.xi
    return float(integrate.trapezoid(xi * s.theta, xi))


def boundary_flux(s: FieldState, n: float) -> float:
    """Fick flux -d(theta^(n+1))/d(xi) at xi = 0, second-order one-sided."""
    if s.grid.cells < 2:
        raise DiagnosticsError("boundary_flux needs at least three nodes")
    u = s.theta[:3] ** (n + 1.0)
    return float(-(-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * s.grid.h))


def corner_value(s: FieldState, n: float) -> float:
    """Corner flux at xi = 0, which reduces to theta(0)^(n+1)."""
    return float(s.theta[0] ** (n + 1.0))


def support_mask(analytic: np.ndarray, xi: np.ndarray, h: float, floor: float = DEFAULT_FLOOR,
                 front: Optional[float] = None) -> np.ndarray:
    """
    Nodes where the analytic field exceeds ``floor`` times its maximum, minus
    the collar of FRONT_COLLAR*h around the front.

    When ``front`` is not given it is estimated as the first dry node beyond
    the wetted region.
    """
    peak = float(analytic.max()) if analytic.size else 0.0
    if peak <= 0:
        return np.zeros(analytic.shape, dtype=bool)
    mask = analytic > floor * peak
    if front is None:
        wet = np.nonzero(analytic > 0)[0]
        last = int(wet[-1])
        front = xi[last + 1] if last + 1 < xi.size else math.inf
    if math.isfinite(front):
        mask &= np.abs(xi - front) > FRONT_COLLAR * h
    return mask


def rel_error(numeric: FieldState, analytic: FieldState, floor: float = DEFAULT_FLOOR,
              front: Optional[float] = None) -> ErrorReport:
    """
    Relative L2 and Linf errors of ``numeric`` against ``analytic`` on the support mask.

    Raises:
        DiagnosticsError: If the grids differ or the mask is empty
    """
    if numeric.grid != analytic.grid:
        raise DiagnosticsError("rel_error needs both fields on the same grid")
    if not math.isclose(numeric.tau, analytic.tau, rel_tol=1e-12, abs_tol=1e-12):
        raise DiagnosticsError(f"Fields are at different times: {numeric.tau} vs {analytic.tau}")
    reference = analytic.theta
    mask = support_mask(reference, analytic.xi, analytic.grid.h, floor, front)
    if not np.any(mask):
        raise DiagnosticsError("Error mask is empty; the analytic field has no support")
    diff = numeric.theta[mask] - reference[mask]
    ref = reference[mask]
    return ErrorReport(
        l2_rel=float(np.linalg.norm(diff) / np.linalg.norm(ref)),
        linf_rel=float(np.max(np.abs(diff)) / np.max(np.abs(ref))),
        support_mask_fraction=float(np.count_nonzero(mask) / mask.size),
    )


def fit_powerlaw(ts: TimeSeries) -> PowerLawFit:
    """
    Least-squares line through (log tau, log value).

    Raises:
        DiagnosticsError: With fewer than four points or non-positive values
    """
    if len(ts) < 4:
        raise DiagnosticsError(f"Power-law fit needs >= 4 points, got {len(ts)}")
    if np.any(ts.values <= 0) or np.any(ts.taus <= 0):
        raise DiagnosticsError("Power-law fit needs positive times and values")
    result = stats.linregress(np.log(ts.taus), np.log(ts.values))
    return PowerLawFit(
        exponent=float(result.slope),
        prefactor=float(math.exp(result.intercept)),
        r2=float(result.rvalue ** 2),
    )


def pde_residual_analytic(p: SuperposedParams, xi: float, tau: float, stencil_h: float,
                          stencil_dt: float) -> float:
    """
    Centered-difference residual d(theta)/d(tau) - d2(theta^(n+1))/d(xi)2 of the
    superposed solution at (xi, tau).

    Raises:
        DiagnosticsError: If the stencil reaches xi <= 0, non-positive shifted
            time, or a point outside the support
    """
    if stencil_h <= 0 or stencil_dt <= 0:
        raise DiagnosticsError("Stencil spacings must be > 0")
    if xi - stencil_h <= 0:
        raise DiagnosticsError(f"Stencil at xi={xi} crosses the boundary xi=0")
    if tau - stencil_dt + p.tau_shift <= 0:
        raise DiagnosticsError(f"Stencil at tau={tau} reaches non-positive shifted time")

    n = p.n
    space = np.asarray(kernel.eval_superposed(
        p, np.array([xi - stencil_h, xi, xi + stencil_h]), tau))
    time = np.asarray(kernel.eval_superposed(
        p, np.array([xi, xi]), np.array([tau - stencil_dt, tau + stencil_dt])))
    if np.any(space <= 0) or np.any(time <= 0):
        raise DiagnosticsError(f"Stencil at (xi={xi}, tau={tau}) crosses the front")

    u = space ** (n + 1.0)
    d2u = (u[2] - 2.0 * u[1] + u[0]) / (stencil_h * stencil_h)
    dtheta = (time[1] - time[0]) / (2.0 * stencil_dt)
    return float(dtheta - d2u)


def extrapolated_residual(p: SuperposedParams, xi: float, tau: float, stencil_h: float,
                          stencil_dt: float) -> float:
    """Richardson combination of the residual at (h, dt) and (h/2, dt/2)."""
    coarse = pde_residual_analytic(p, xi, tau, stencil_h, stencil_dt)
    fine = pde_residual_analytic(p, xi, tau, 0.5 * stencil_h, 0.5 * stencil_dt)
    return (4.0 * fine - coarse) / 3.0


def residual_expression(ctx: NonlinearityContext, gamma0: float, phi0: float, xi: float,
                        tau: float) -> float:
    """
    Three-term condition for the superposed form to solve the PDE, with Gamma
    and Phi following their power laws in ``tau``.

        (tau Phi'/Phi + alpha) xi^2 Phi^2
      + (tau Gamma'/Gamma + tau Phi'/Phi + 2) xi Gamma Phi
      + (tau Gamma'/Gamma + beta) Gamma^2

    The ratios are multiplied out so vanishing gauges need no special case.
    """
    if tau <= 0:
        raise kernel.DomainError(f"tau must be > 0, got {tau}")
    p = SuperposedParams(ctx, gamma0=gamma0, phi0=phi0)
    gamma = kernel.gamma_of_tau(p, tau)
    phi = kernel.phi_of_tau(p, tau)
    gamma_rate = -ctx.beta * gamma / tau
    phi_rate = -ctx.alpha * phi / tau

    first = (tau * phi_rate * phi + ctx.alpha * phi * phi) * xi * xi
    second = (tau * gamma_rate * phi + tau * phi_rate * gamma + 2.0 * gamma * phi) * xi
    third = tau * gamma_rate * gamma + ctx.beta * gamma * gamma
    return float(first + second + third)


def observed_order(errors: Sequence[float], ratio: float = 2.0) -> np.ndarray:
    """Empirical convergence orders log(e_i / e_{i+1}) / log(ratio)."""
    e = np.asarray(errors, dtype=float)
    if e.size < 2 or np.any(e <= 0):
        raise DiagnosticsError("observed_order needs at least two positive errors")
    return np.log(e[:-1] / e[1:]) / math.log(ratio)

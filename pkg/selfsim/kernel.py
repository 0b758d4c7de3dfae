"""
Closed-form solutions of the nonlinear heat equation

    d(theta)/d(tau) = d^2(theta^(n+1))/d(xi)^2

All evaluators are pure functions. They accept scalars or numpy arrays for
``xi`` and ``tau`` (broadcast together) and return a float for scalar input,
an array otherwise.
"""
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Union

import numpy as np
from scipy import integrate, optimize

ArrayLike = Union[float, np.ndarray]


class DomainError(ValueError):
    """Raised when a formula is evaluated outside its domain."""


class Solution(str, Enum):
    """Identifiers of the analytic solutions the kernel can evaluate."""
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"
    SUPERPOSED = "superposed"
    LINEAR = "linear"


@dataclass(frozen=True)
class NonlinearityContext:
    """The nonlinearity parameter n and the constants derived from it."""
    n: float

    def __post_init__(self):
        if not math.isfinite(self.n) or self.n < 0:
            raise DomainError(f"Nonlinearity parameter must be finite and >= 0, got {self.n}")

    @property
    def k(self) -> float:
        return self.n / (2.0 * (self.n + 1.0) * (self.n + 2.0))

    @property
    def alpha(self) -> float:
        """Decay exponent of the Fick flux at the boundary."""
        return 1.0 + 1.0 / (2.0 * (self.n + 1.0))

    @property
    def beta(self) -> float:
        """Decay exponent of the corner flux at the boundary."""
        return 1.0 - 1.0 / (self.n + 2.0)

    @property
    def is_linear(self) -> bool:
        return self.n == 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "k": self.k, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class SuperposedParams:
    """
    Parameters of the superposed family.

    Attributes:
        ctx: Nonlinearity context
        gamma0: Gauge constant of the corner flux law Gamma(t) = gamma0 * t^-beta
        phi0: Gauge constant of the Fick flux law Phi(t) = -phi0 * t^-alpha
        tau_shift: Time shift; every formula is evaluated at t = tau + tau_shift
    """
    ctx: NonlinearityContext
    gamma0: float = 0.0
    phi0: float = 0.0
    tau_shift: float = 0.0

    def __post_init__(self):
        for name in ("gamma0", "phi0", "tau_shift"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value}")

    @classmethod
    def create(cls, n: float, gamma0: float = 0.0, phi0: float = 0.0,
               tau_shift: float = 0.0) -> "SuperposedParams":
        return cls(NonlinearityContext(n), gamma0=gamma0, phi0=phi0, tau_shift=tau_shift)

    @property
    def n(self) -> float:
        return self.ctx.n

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "gamma0": self.gamma0,
            "phi0": self.phi0,
            "tau_shift": self.tau_shift,
        }


@dataclass(frozen=True)
class SteadyParams:
    """Integration constants of the steady state (Gamma - Phi*xi)^(1/(n+1))."""
    gamma: float
    phi: float
    n: float

    def __post_init__(self):
        NonlinearityContext(self.n)


def _result(value: np.ndarray, *inputs: ArrayLike) -> ArrayLike:
    if all(np.ndim(x) == 0 for x in inputs):
        return float(value)
    return value


def _shifted_time(tau: ArrayLike, tau_shift: float) -> np.ndarray:
    t = np.asarray(tau, dtype=float) + tau_shift
    if not np.all(np.isfinite(t)) or np.any(t <= 0):
        raise DomainError(f"Shifted time tau + tau_shift must be > 0 (tau_shift={tau_shift})")
    return t


def _check_xi(xi: ArrayLike) -> np.ndarray:
    xi_arr = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi_arr)) or np.any(xi_arr < 0):
        raise DomainError("xi must be finite and >= 0")
    return xi_arr


def _root(base: ArrayLike, n: float) -> ArrayLike:
    # base^(1/(n+1)); shared by the evaluator and the boundary law so both agree exactly
    return base ** (1.0 / (n + 1.0))


def gamma_of_tau(p: SuperposedParams, tau: ArrayLike) -> ArrayLike:
    """Corner flux law Gamma0 * (tau + tau_shift)^-beta."""
    t = _shifted_time(tau, p.tau_shift)
    return _result(p.gamma0 * t ** -p.ctx.beta, tau)


def phi_of_tau(p: SuperposedParams, tau: ArrayLike) -> ArrayLike:
    """Fick flux law -Phi0 * (tau + tau_shift)^-alpha; never positive."""
    t = _shifted_time(tau, p.tau_shift)
    return _result(0.0 - p.phi0 * t ** -p.ctx.alpha, tau)


def boundary_value(p: SuperposedParams, tau: ArrayLike) -> ArrayLike:
    """Value law theta(0, tau) = Gamma(tau)^(1/(n+1)) of the superposed solution."""
    return _root(gamma_of_tau(p, tau), p.n)


def eval_linear_superposed(gamma0: float, phi0: float, xi: ArrayLike, tau: ArrayLike,
                           tau_shift: float = 0.0) -> ArrayLike:
    """
    Exact superposition of the two n = 0 solutions.

    theta = (Gamma - xi*Phi) * exp(-xi^2 / 4t) with Gamma = gamma0 * t^-1/2 and
    Phi = -phi0 * t^-3/2, t = tau + tau_shift.

    Raises:
        DomainError: If the shifted time is not positive or a gauge is negative
    """
    if gamma0 < 0 or phi0 < 0:
        raise DomainError("Gauge constants must be >= 0")
    xi_arr = _check_xi(xi)
    t = _shifted_time(tau, tau_shift)
    gamma = gamma0 * t ** -0.5
    phi = 0.0 - phi0 * t ** -1.5
    theta = (gamma - xi_arr * phi) * np.exp(-xi_arr * xi_arr / (4.0 * t))
    return _result(theta, xi, tau)


def eval_superposed(p: SuperposedParams, xi: ArrayLike, tau: ArrayLike) -> ArrayLike:
    """
    Nonlinearly superposed approximate solution.

    With B = Gamma(t) - xi*Phi(t) and C = 1 - k*xi^2/t * B^(1/(n+1) - 1) the
    value is B^(1/(n+1)) * C^(1/n) where C > 0 and 0 beyond the front. The
    n = 0 case is the exact exponential superposition.

    Args:
        p: Family parameters
        xi: Positions (>= 0)
        tau: Times; tau + p.tau_shift must be > 0

    Returns:
        Non-negative temperature values, never NaN
    """
    if p.ctx.is_linear:
        return eval_linear_superposed(p.gamma0, p.phi0, xi, tau, p.tau_shift)

    xi_arr = _check_xi(xi)
    t = _shifted_time(tau, p.tau_shift)
    n = p.n
    gamma = p.gamma0 * t ** -p.ctx.beta
    phi = 0.0 - p.phi0 * t ** -p.ctx.alpha
    base = gamma - xi_arr * phi
    shape = base.shape
    xi_b, t_b, base = (np.broadcast_to(a, shape).ravel() for a in (xi_arr, t, base))

    theta = np.zeros(base.size)
    live = base > 0
    if np.any(live):
        b = base[live]
        x = xi_b[live]
        # k xi^2/t * B^(-n/(n+1)), in log form so B -> 0 never meets a negative power
        crowding = p.ctx.k * x * x / t_b[live] * np.exp(-(n / (n + 1.0)) * np.log(b))
        inside = crowding < 1.0
        values = np.zeros_like(b)
        values[inside] = _root(b[inside], n) * np.exp(np.log1p(-crowding[inside]) / n)
        theta[live] = values
    return _result(theta.reshape(shape), xi, tau)


def eval_dirichlet_flux_form(p: SuperposedParams, xi: ArrayLike, tau: ArrayLike) -> ArrayLike:
    """Exact absorbing-boundary solution written through Phi(tau); theta(0, tau) = 0."""
    return eval_superposed(replace(p, gamma0=0.0), xi, tau)


def eval_neumann_flux_form(p: SuperposedParams, xi: ArrayLike, tau: ArrayLike) -> ArrayLike:
    """Exact insulated-boundary solution written through Gamma(tau)."""
    return eval_superposed(replace(p, phi0=0.0), xi, tau)


def eval_steady(s: SteadyParams, xi: ArrayLike) -> ArrayLike:
    """
    Steady state (Gamma - Phi*xi)^(1/(n+1)).

    Raises:
        DomainError: If Gamma - Phi*xi is negative anywhere in ``xi``
    """
    xi_arr = np.asarray(xi, dtype=float)
    base = s.gamma - s.phi * xi_arr
    if np.any(base < 0):
        raise DomainError("Steady state base Gamma - Phi*xi is negative on the requested domain")
    return _result(_root(base, s.n), xi)


def superposition_defect(ctx: NonlinearityContext, gamma: ArrayLike, phi: ArrayLike,
                         xi: ArrayLike) -> ArrayLike:
    """The term k*xi*Gamma*Phi left over when the superposed form is put into the PDE."""
    return ctx.k * xi * gamma * phi


def restrict(which: Union[Solution, str], p: SuperposedParams) -> SuperposedParams:
    """Parameters actually used by solution ``which`` (gauges forced to zero where needed)."""
    which = Solution(which)
    if which is Solution.NEUMANN:
        return replace(p, phi0=0.0)
    if which is Solution.DIRICHLET:
        return replace(p, gamma0=0.0)
    if which is Solution.LINEAR:
        return replace(p, ctx=NonlinearityContext(0.0))
    return p


def evaluate(which: Union[Solution, str], p: SuperposedParams, xi: ArrayLike,
             tau: ArrayLike) -> ArrayLike:
    """Evaluate a solution by identifier."""
    which = Solution(which)
    if which is Solution.NEUMANN:
        return eval_neumann_flux_form(p, xi, tau)
    if which is Solution.DIRICHLET:
        return eval_dirichlet_flux_form(p, xi, tau)
    if which is Solution.LINEAR:
        return eval_linear_superposed(p.gamma0, p.phi0, xi, tau, p.tau_shift)
    return eval_superposed(p, xi, tau)


def front_position(p: SuperposedParams, tau: float) -> float:
    """
    Position of the compact-support front of the superposed family at ``tau``.

    Returns inf for n = 0 and 0.0 when both gauges vanish.
    """
    if p.ctx.is_linear:
        return math.inf
    t = float(_shifted_time(tau, p.tau_shift))
    gamma = gamma_of_tau(p, tau)
    phi = phi_of_tau(p, tau)
    if gamma == 0 and phi == 0:
        return 0.0

    k = p.ctx.k
    q = p.n / (p.n + 1.0)
    neumann_front = math.sqrt(t * gamma ** q / k) if gamma > 0 else 0.0
    dirichlet_front = (t * (-phi) ** q / k) ** (1.0 / (2.0 - q)) if phi < 0 else 0.0
    if phi == 0:
        return neumann_front
    if gamma == 0:
        return dirichlet_front

    def excess(x: float) -> float:
        return math.log(k * x * x / t) - q * math.log(gamma - x * phi)

    # the superposed front lies beyond both pure fronts
    lo = 0.5 * max(neumann_front, dirichlet_front)
    hi = 2.0 * max(neumann_front, dirichlet_front)
    while excess(hi) <= 0:
        hi *= 2.0
    return optimize.brentq(excess, lo, hi, xtol=1e-13)


def support_extent(p: SuperposedParams, tau: float, rtol: float = 1e-8) -> float:
    """
    Extent of the numerically relevant support.

    The front for n > 0. For n = 0 the position beyond the peak where the
    Gaussian tail falls below ``rtol`` times the peak value.
    """
    if not p.ctx.is_linear:
        return front_position(p, tau)

    t = float(_shifted_time(tau, p.tau_shift))
    gamma = p.gamma0 * t ** -0.5
    outflux = p.phi0 * t ** -1.5
    if gamma == 0 and outflux == 0:
        return 0.0
    if outflux > 0:
        disc = gamma * gamma + 8.0 * t * outflux * outflux
        peak_xi = (-gamma + math.sqrt(disc)) / (2.0 * outflux)
    else:
        peak_xi = 0.0
    log_floor = math.log(rtol) + math.log(gamma + peak_xi * outflux) - peak_xi ** 2 / (4.0 * t)

    def log_profile(x: float) -> float:
        return math.log(gamma + x * outflux) - x * x / (4.0 * t) - log_floor

    hi = max(2.0 * peak_xi, 2.0 * math.sqrt(t))
    while log_profile(hi) > 0:
        hi *= 2.0
    return optimize.brentq(log_profile, peak_xi, hi, xtol=1e-12)


def solution_moment(which: Union[Solution, str], p: SuperposedParams, tau: float,
                    order: int = 0) -> float:
    """Moment of order ``order`` of a kernel solution over [0, inf), by adaptive quadrature."""
    if order < 0:
        raise DomainError(f"Moment order must be >= 0, got {order}")
    restricted = restrict(which, p)
    upper = support_extent(restricted, tau, rtol=1e-16)
    if upper == 0.0:
        return 0.0
    if restricted.ctx.is_linear:
        upper = np.inf
    value, _ = integrate.quad(lambda x: x ** order * evaluate(which, p, x, tau), 0.0, upper,
                              limit=200, epsabs=1e-14, epsrel=1e-12)
    return float(value)


def solution_mass(which: Union[Solution, str], p: SuperposedParams, tau: float) -> float:
    """Integral of a kernel solution over [0, inf)."""
    return solution_moment(which, p, tau, 0)

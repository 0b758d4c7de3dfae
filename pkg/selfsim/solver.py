"""
Conservative explicit finite-difference integrator for the nonlinear heat equation
on a truncated half line [0, L].
"""
import logging
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from selfsim import kernel
from selfsim.kernel import SuperposedParams

logger = logging.getLogger(__name__)

MIN_CELLS = 16
CLIP_TOLERANCE = 1e-12


class StabilityError(ValueError):
    """Raised when an explicit step exceeds the stability bound."""


class StepLimitExceeded(RuntimeError):
    """
    Raised when an integration runs out of steps.

    The state reached and the snapshots collected so far are kept on the
    exception so callers can report partial results.
    """

    def __init__(self, message: str, state: "FieldState", snapshots: List["FieldState"]):
        super().__init__(message)
        self.state = state
        self.snapshots = snapshots
        self.partial = True


@dataclass(frozen=True)
class Grid1D:
    """Uniform node-centred mesh xi_i = i*h, i = 0..cells, on [0, length]."""
    length: float
    cells: int

    def __post_init__(self):
        if not math.isfinite(self.length) or self.length <= 0:
            raise ValueError(f"Grid length must be > 0, got {self.length}")
        if int(self.cells) != self.cells or self.cells < MIN_CELLS:
            raise ValueError(f"Grid needs an integer cell count >= {MIN_CELLS}, got {self.cells}")
        object.__setattr__(self, "cells", int(self.cells))

    @property
    def h(self) -> float:
        return self.length / self.cells

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.cells + 1)

    def to_dict(self) -> Dict[str, Any]:
        return {"length": self.length, "cells": self.cells, "h": self.h}


@dataclass(frozen=True)
class FieldState:
    """Temperature values on a grid at simulation time ``tau``; immutable."""
    grid: Grid1D
    theta: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        values = np.array(self.theta, dtype=float)
        if values.shape != (self.grid.cells + 1,):
            raise ValueError(
                f"Field needs {self.grid.cells + 1} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("Field values must be finite and non-negative")
        if not math.isfinite(self.tau) or self.tau < 0:
            raise ValueError(f"Field time must be >= 0, got {self.tau}")
        values.setflags(write=False)
        object.__setattr__(self, "theta", values)

    @property
    def xi(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def max_theta(self) -> float:
        return float(self.theta.max())


class BoundaryKind(str, Enum):
    """Left boundary treatments; the right boundary is always theta(L) = 0."""
    NEUMANN_ZERO = "neumann_zero"
    GAMMA_DIRICHLET = "gamma_dirichlet"
    ABSORBING_ZERO = "absorbing_zero"


@dataclass(frozen=True)
class BoundaryCondition:
    kind: BoundaryKind
    params: Optional[SuperposedParams] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundaryKind(self.kind))
        if self.kind is BoundaryKind.GAMMA_DIRICHLET and self.params is None:
            raise ValueError("gamma_dirichlet boundary needs SuperposedParams")

    @classmethod
    def neumann_zero(cls) -> "BoundaryCondition":
        return cls(BoundaryKind.NEUMANN_ZERO)

    @classmethod
    def absorbing_zero(cls) -> "BoundaryCondition":
        return cls(BoundaryKind.ABSORBING_ZERO)

    @classmethod
    def gamma_dirichlet(cls, params: SuperposedParams) -> "BoundaryCondition":
        return cls(BoundaryKind.GAMMA_DIRICHLET, params)

    def left_value(self, tau: float) -> Optional[float]:
        """Imposed theta(0, tau), or None for the zero-flux boundary."""
        if self.kind is BoundaryKind.NEUMANN_ZERO:
            return None
        if self.kind is BoundaryKind.ABSORBING_ZERO:
            return 0.0
        return kernel.boundary_value(self.params, tau)


@dataclass(frozen=True)
class StepControl:
    safety: float = 0.4
    dt_min: float = 1e-12
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not 0 < self.safety <= 1:
            raise ValueError(f"safety must lie in (0, 1], got {self.safety}")
        if self.dt_min <= 0:
            raise ValueError(f"dt_min must be > 0, got {self.dt_min}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")


@dataclass
class RunMonitor:
    """
    Accumulates the discrete mass ledger and clipping statistics of a run.

    ``left_inflow`` and ``right_outflow`` are the time integrals of the scheme's
    own boundary fluxes, so that mass(end) - mass(start) equals
    left_inflow - right_outflow + clipped_mass up to round-off.
    """
    steps: int = 0
    left_inflow: float = 0.0
    right_outflow: float = 0.0
    clipped_mass: float = 0.0
    max_clip_ratio: float = 0.0
    flagged_steps: int = 0

    def record(self, dt: float, left_flux: float, right_flux: float, clipped_mass: float,
               clip_ratio: float) -> None:
        self.steps += 1
        self.left_inflow += dt * left_flux
        self.right_outflow += dt * right_flux
        self.clipped_mass += clipped_mass
        self.max_clip_ratio = max(self.max_clip_ratio, clip_ratio)
        if clip_ratio >= CLIP_TOLERANCE:
            self.flagged_steps += 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "steps": self.steps,
            "left_inflow": self.left_inflow,
            "right_outflow": self.right_outflow,
            "clipped_mass": self.clipped_mass,
            "max_clip_ratio": self.max_clip_ratio,
            "flagged_steps": self.flagged_steps,
        }


def make_grid(length: float, cells: int) -> Grid1D:
    return Grid1D(float(length), cells)


def gaussian_ic(grid: Grid1D, amplitude: float, center: float = 0.0,
                width: float = 1.0) -> FieldState:
    """Gaussian profile amplitude * exp(-(xi - center)^2 / (2 width^2)) at tau = 0."""
    if amplitude <= 0 or width <= 0:
        raise ValueError("Gaussian amplitude and width must be > 0")
    xi = grid.nodes
    theta = amplitude * np.exp(-((xi - center) ** 2) / (2.0 * width * width))
    return FieldState(grid, theta, 0.0)


def project_analytic(grid: Grid1D, p: SuperposedParams, tau: float,
                     which: Union[kernel.Solution, str]) -> FieldState:
    """Sample a kernel solution onto the grid nodes."""
    return FieldState(grid, kernel.evaluate(which, p, grid.nodes, tau), tau)


def _diffusivity_bound(theta_max: float, n: float) -> float:
    if n == 0:
        return 1.0
    return (n + 1.0) * theta_max ** n


def stability_limit(s: FieldState, n: float) -> float:
    """Largest explicit step h^2 / (2 (n+1) max(theta)^n); inf for a dry nonlinear state."""
    diffusivity = _diffusivity_bound(s.max_theta, n)
    if diffusivity == 0:
        return math.inf
    return s.grid.h ** 2 / (2.0 * diffusivity)


def stable_dt(s: FieldState, n: float, c: StepControl) -> float:
    """Step size used by ``integrate``: the stability limit scaled by ``c.safety``."""
    h = s.grid.h
    theta_max = s.max_theta
    if theta_max <= 0:
        return c.safety * h * h / 2.0
    dt = c.safety * h * h / (2.0 * _diffusivity_bound(theta_max, n))
    return max(dt, c.dt_min)


def clipped_mass(clipped: np.ndarray, h: float, insulated: bool) -> float:
    """
    Trapezoidal mass added by clipping one step.

    The left node is a half cell the scheme updates only when the wall is
    insulated; an imposed value overwrites it and the right node is held at 0.
    """
    mass = h * float(clipped[1:-1].sum())
    if insulated:
        mass += 0.5 * h * float(clipped[0])
    return mass


def _advance(s: FieldState, bc: BoundaryCondition, n: float, dt: float, tau_new: float,
             monitor: Optional[RunMonitor]) -> FieldState:
    limit = stability_limit(s, n)
    if not dt > 0:
        raise ValueError(f"Step size must be > 0, got {dt}")
    if dt > limit * (1.0 + 1e-12):
        raise StabilityError(f"Step {dt:.6g} exceeds the stability bound {limit:.6g}")

    h = s.grid.h
    theta = s.theta
    u = theta ** (n + 1.0)
    flux = -(u[1:] - u[:-1]) / h

    new = theta.copy()
    new[1:-1] -= dt / h * (flux[1:] - flux[:-1])
    left = bc.left_value(tau_new)
    if left is None:
        # mirror ghost node: zero flux through xi = 0, half cell at the wall
        new[0] -= 2.0 * dt / h * flux[0]
    else:
        new[0] = left
    new[-1] = 0.0

    clipped = np.maximum(-new, 0.0)
    np.maximum(new, 0.0, out=new)
    clip_ratio = float(clipped.max()) / max(s.max_theta, np.finfo(float).tiny)
    if clip_ratio >= CLIP_TOLERANCE:
        logger.warning("Clipped %d negative values (max %.3e of max theta) at tau=%.6g",
                       int(np.count_nonzero(clipped)), clip_ratio, tau_new)

    if monitor is not None:
        # boundary half cells: h/2 * d(theta)/dt = inflow - outflow
        insulated = left is None
        left_flux = 0.0 if insulated else 0.5 * h * (new[0] - theta[0]) / dt + flux[0]
        right_flux = flux[-1] - 0.5 * h * (new[-1] - theta[-1]) / dt
        monitor.record(dt, left_flux, right_flux, clipped_mass(clipped, h, insulated),
                       clip_ratio)

    return FieldState(s.grid, new, tau_new)


def step_explicit(s: FieldState, bc: BoundaryCondition, n: float, dt: float,
                  monitor: Optional[RunMonitor] = None) -> FieldState:
    """
    One conservative explicit step.

    Interface fluxes F_{i+1/2} = -(u_{i+1} - u_i)/h with u = theta^(n+1) update
    every interior node; the left node follows ``bc`` and the right node is
    held at zero. Round-off negatives are clipped.

    Raises:
        StabilityError: If ``dt`` exceeds the stability bound of ``s``
    """
    return _advance(s, bc, n, dt, s.tau + dt, monitor)


def integrate(s: FieldState, bc: BoundaryCondition, n: float, tau_end: float,
              c: StepControl, snap_times: Sequence[float] = (),
              monitor: Optional[RunMonitor] = None) -> Tuple[FieldState, List[FieldState]]:
    """
    Integrate from ``s.tau`` to ``tau_end``.

    Steps are shortened to land exactly on every snapshot time and on
    ``tau_end``; no interpolation is involved.

    Args:
        s: Initial state
        bc: Left boundary condition
        n: Nonlinearity parameter
        tau_end: Final time (>= s.tau)
        c: Step control
        snap_times: Sorted times within [s.tau, tau_end]
        monitor: Optional ledger collecting fluxes and clipping statistics

    Returns:
        Final state and the snapshots, one per requested time

    Raises:
        StepLimitExceeded: If ``c.max_steps`` steps do not reach ``tau_end``
    """
    if tau_end < s.tau:
        raise ValueError(f"tau_end={tau_end} lies before the initial time {s.tau}")
    times = [float(t) for t in snap_times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("Snapshot times must be sorted")
    if times and (times[0] < s.tau or times[-1] > tau_end):
        raise ValueError(f"Snapshot times must lie within [{s.tau}, {tau_end}]")

    pending = deque(times)
    snapshots: List[FieldState] = []
    state = s
    while pending and pending[0] <= state.tau:
        snapshots.append(state)
        pending.popleft()

    steps = 0
    while state.tau < tau_end:
        if steps >= c.max_steps:
            raise StepLimitExceeded(
                f"Reached max_steps={c.max_steps} at tau={state.tau:.6g} before tau_end={tau_end}",
                state, snapshots,
            )
        target = pending[0] if pending else tau_end
        dt = stable_dt(state, n, c)
        if state.tau + dt >= target:
            dt = target - state.tau
            tau_new = target
        else:
            tau_new = state.tau + dt
        state = _advance(state, bc, n, dt, tau_new, monitor)
        steps += 1
        if steps % 100_000 == 0:
            logger.debug("step %d: tau=%.6g dt=%.3e max theta=%.6g",
                         steps, state.tau, dt, state.max_theta)
        while pending and pending[0] <= state.tau:
            logger.debug("Snapshot at tau=%.6g after %d steps", state.tau, steps)
            snapshots.append(state)
            pending.popleft()

    return state, snapshots

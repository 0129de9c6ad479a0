"""Numerical building blocks: ODE integration, quadrature, finite differences
and zero finding.

Everything here works on plain callables wrapped in :class:`ScalarFunction`
so that domain violations are caught early instead of silently
extrapolating.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _integrate
from scipy.interpolate import CubicSpline

__all__ = [
    "Interval",
    "IntegratorConfig",
    "Trajectory",
    "ScalarFunction",
    "ResidualReport",
    "DomainError",
    "IntegrationError",
    "BlowUpError",
    "StepLimitError",
    "QuadratureError",
    "integrate_ode",
    "quadrature",
    "derivative",
    "find_zeros",
]


class DomainError(ValueError):
    """Evaluation requested outside a function's domain."""


class IntegrationError(RuntimeError):
    """Base class for ODE integration failures."""


class BlowUpError(IntegrationError):
    """The integrated state became non-finite."""


class StepLimitError(IntegrationError):
    """The step budget ran out before reaching the end of the span."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"interval endpoints must be finite, got [{lo}, {hi}]")
        if not lo < hi:
            raise ValueError(f"interval needs lo < hi, got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.lo) & (x <= self.hi)))

    def linspace(self, n: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, n)


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings for :func:`integrate_ode`.

    ``method`` is ``"adaptive-RK45"`` (Dormand-Prince 5(4) with local error
    control) or ``"fixed-RK4"`` (classical RK4 with step ``initial_step``).
    ``max_step`` optionally caps the adaptive step, which is useful when the
    trajectory is later interpolated.
    """

    method: str = "adaptive-RK45"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    initial_step: float = 1e-3
    max_steps: int = 1_000_000
    max_step: float | None = None

    def __post_init__(self):
        if self.method not in ("fixed-RK4", "adaptive-RK45"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if not self.max_steps > 0:
            raise ValueError("max_steps must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if times.ndim != 1 or len(times) != len(states):
            raise ValueError("times and states must have matching lengths")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def interpolant(self, component: int = 0) -> "ScalarFunction":
        """Cubic-spline interpolant of one state component (C² in between nodes)."""
        spline = CubicSpline(self.times, self.states[:, component])
        return ScalarFunction(spline, Interval(self.times[0], self.times[-1]))


class ScalarFunction:
    """A real function of one real variable restricted to an interval.

    The wrapped evaluator should accept numpy arrays; scalars are also fine.
    Calling outside ``domain`` raises :class:`DomainError`.
    """

    __slots__ = ("evaluator", "domain")

    def __init__(self, evaluator: Callable, domain: Interval):
        self.evaluator = evaluator
        self.domain = domain

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        if not self.domain.contains(xa):
            raise DomainError(
                f"evaluation at {x} outside domain [{self.domain.lo}, {self.domain.hi}]"
            )
        out = self.evaluator(xa)
        if np.ndim(x) == 0:
            return float(np.asarray(out).reshape(()))
        return np.broadcast_to(np.asarray(out, dtype=float), xa.shape).copy()

    def __repr__(self):
        return f"ScalarFunction({self.evaluator!r}, [{self.domain.lo}, {self.domain.hi}])"

    @classmethod
    def constant(cls, value: float, domain: Interval) -> "ScalarFunction":
        return cls(lambda x: np.full(np.shape(x), float(value)), domain)


@dataclass(frozen=True)
class ResidualReport:
    """Residuals of one equation sampled on a grid.

    ``residuals`` holds magnitudes (absolute values, or moduli for complex
    residuals). ``inconclusive`` marks checks that could not be carried out,
    e.g. a gap test with fewer than two zeros.
    """

    tag: str
    grid: np.ndarray
    residuals: np.ndarray
    inconclusive: bool = False
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        res = np.abs(np.asarray(self.residuals))
        if grid.shape != res.shape:
            raise ValueError("grid and residuals must have matching lengths")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "residuals", res.astype(float))

    @property
    def max_abs(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0

    @property
    def rms(self) -> float:
        if not self.residuals.size:
            return 0.0
        return float(np.sqrt(np.mean(self.residuals**2)))

    def passed(self, tol: float) -> bool:
        return not self.inconclusive and self.max_abs < tol


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B_LOW = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B - _DP_B_LOW


def _check_finite(t, y):
    if not np.all(np.isfinite(y)):
        raise BlowUpError(f"non-finite state at t={t}")


def _rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _dopri_step(rhs, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_DP_A[i], ks))
        ks.append(np.asarray(rhs(t + _DP_C[i] * h, yi), dtype=float))
    y_new = y + h * sum(b * k for b, k in zip(_DP_B, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_DP_E, ks) if e != 0.0)
    return y_new, err, ks[6]


def integrate_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: Sequence[float],
    span: Interval,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``span.lo`` to exactly ``span.hi``.

    Raises
    ------
    BlowUpError
        If the state or a stage evaluation becomes non-finite.
    StepLimitError
        If ``cfg.max_steps`` steps do not reach the end of the span.
    """
    cfg = cfg or IntegratorConfig()
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    _check_finite(span.lo, y)

    def f(t, state):
        return np.atleast_1d(np.asarray(rhs(t, state), dtype=float))

    if f(span.lo, y).shape != y.shape:
        raise ValueError("rhs output dimension does not match y0")

    t, t_end = span.lo, span.hi
    times, states = [t], [y]

    if cfg.method == "fixed-RK4":
        n = max(1, math.ceil(span.width / cfg.initial_step - 1e-9))
        if n > cfg.max_steps:
            raise StepLimitError(f"fixed step would need {n} > {cfg.max_steps} steps")
        grid = np.linspace(t, t_end, n + 1)
        for t0, t1 in zip(grid[:-1], grid[1:]):
            y = _rk4_step(f, t0, y, t1 - t0)
            _check_finite(t1, y)
            times.append(t1)
            states.append(y)
        return Trajectory(np.array(times), np.array(states))

    h_max = cfg.max_step or span.width
    h = min(cfg.initial_step, h_max, span.width)
    k1 = f(t, y)
    for _ in range(cfg.max_steps):
        if t >= t_end:
            break
        last = t + h >= t_end - 1e-14 * max(1.0, abs(t_end))
        if last:
            h = t_end - t
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            y_new, err, k_last = _dopri_step(f, t, y, h, k1)
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(err))):
            if h < 1e-14 * max(1.0, abs(t)):
                raise BlowUpError(f"non-finite state near t={t}")
            h *= 0.25
            continue
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if err_norm <= 1.0:
            t = t_end if last else t + h
            y, k1 = y_new, k_last
            times.append(t)
            states.append(y)
            factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm**-0.2)
        else:
            factor = max(0.2, 0.9 * err_norm**-0.2)
        h = min(h * factor, h_max)
        if h < 1e-14 * max(1.0, abs(t)):
            raise BlowUpError(f"step size underflow at t={t}")
    else:
        raise StepLimitError(f"reached max_steps={cfg.max_steps} at t={t}")
    return Trajectory(np.array(times), np.array(states))


def quadrature(f: Callable, span: Interval, tol: float = 1e-10, limit: int = 200) -> float:
    """Adaptive Gauss-Kronrod estimate of the integral of ``f`` over ``span``.

    Raises :class:`QuadratureError` if the error estimate exceeds ``tol``.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        value, err = _integrate.quad(
            lambda x: float(f(x)), span.lo, span.hi, epsabs=tol, epsrel=0.0, limit=limit
        )
    if not math.isfinite(value) or err > tol:
        raise QuadratureError(f"quadrature error estimate {err:.3g} exceeds tol={tol:.3g}")
    return float(value)


def _central(f, x, order, h):
    if order == 1:
        return (f(x + h) - f(x - h)) / (2 * h)
    return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)


def derivative(f: ScalarFunction | Callable, x: float, order: int = 1, h: float | None = None):
    """Central difference of order 1 or 2 with one Richardson step (O(h^4)).

    ``h`` defaults to ``1e-4`` times the width of ``f.domain``. Plain
    callables without a domain need an explicit ``h``.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    domain = getattr(f, "domain", None)
    if h is None:
        if domain is None:
            raise ValueError("h is required for callables without a domain")
        h = 1e-4 * domain.width
    if domain is not None and not domain.contains([np.min(x) - h, np.max(x) + h]):
        raise DomainError(f"stencil around x={x} with h={h} leaves the domain")
    coarse = _central(f, x, order, h)
    fine = _central(f, x, order, h / 2)
    return (4 * fine - coarse) / 3


def find_zeros(f: ScalarFunction | Callable, span: Interval, scan_points: int = 1000) -> list[float]:
    """Sign-change zeros of ``f`` on ``span``, refined by bisection, ascending.

    Zeros of even multiplicity (touching without a sign change) are missed
    unless they land exactly on a scan node.
    """
    if scan_points < 2:
        raise ValueError("scan_points must be at least 2")
    xs = np.linspace(span.lo, span.hi, scan_points)
    ys = np.asarray(f(xs), dtype=float)
    width_tol = 1e-12 * span.width
    zeros = []
    for i in range(scan_points - 1):
        a, b = xs[i], xs[i + 1]
        fa, fb = ys[i], ys[i + 1]
        if fa == 0.0:
            zeros.append(float(a))
            continue
        if fa * fb >= 0.0:
            continue
        while b - a > width_tol:
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            fm = f(m)
            if fm == 0.0:
                a = b = m
                break
            if (fm < 0) == (fa < 0):
                a, fa = m, fm
            else:
                b = m
        zeros.append(float(0.5 * (a + b)))
    if ys[-1] == 0.0:
        zeros.append(float(xs[-1]))
    return zeros

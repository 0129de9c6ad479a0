"""Reduction of ``u'' + P u' + Q u = 0`` to the normal form ``chi'' + J chi = 0``.

With ``u = factor * chi`` and ``factor = exp(-1/2 ∫ P)`` the first-derivative
term disappears and ``J = Q - P**2/4 - P'/2``. When ``omega**2 < J < Omega**2``
the gaps between adjacent zeros of ``chi`` are bracketed by ``pi/Omega`` and
``pi/omega``; :func:`sturm_gap_check` measures that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numerics import (
    Interval,
    IntegratorConfig,
    ResidualReport,
    ScalarFunction,
    derivative,
    find_zeros,
    integrate_ode,
    quadrature,
)

__all__ = [
    "LinearODE2",
    "CanonicalForm",
    "SturmBounds",
    "BoundsViolation",
    "canonical_transform",
    "reconstruct_solution",
    "solve_canonical",
    "sturm_gap_check",
    "linear_residual",
]

BOUNDS_GRID_POINTS = 1001
ENDPOINT_ZERO_GUARD = 1e-9


class BoundsViolation(ValueError):
    """The potential leaves the band ``(omega**2, Omega**2)``."""


@dataclass(frozen=True)
class LinearODE2:
    P: ScalarFunction
    Q: ScalarFunction
    domain: Interval
    dP: ScalarFunction | None = None

    def __post_init__(self):
        probe = self.domain.linspace(201)[1:-1]
        step = 1e-3 * self.domain.width
        if self.dP is not None:
            slope = np.asarray(self.dP(probe))
        else:
            slope = np.array([derivative(self.P, x, 1, h=step) for x in probe])
        if not np.all(np.isfinite(slope)):
            raise ValueError("P is not differentiable on the domain interior")
        jumps = np.abs(np.diff(slope))
        # a jump in P' much larger than its typical variation signals a kink
        if jumps.size and jumps.max() > 1e3 * (np.median(jumps) + 1e-8 * (1 + np.abs(slope).max())):
            raise ValueError("P does not look continuously differentiable on the domain")


@dataclass(frozen=True)
class CanonicalForm:
    J: ScalarFunction
    integrating_factor: ScalarFunction
    domain: Interval


@dataclass(frozen=True)
class SturmBounds:
    omega: float
    Omega: float

    def __post_init__(self):
        if not 0 < self.omega < self.Omega:
            raise ValueError(f"need 0 < omega < Omega, got {self.omega}, {self.Omega}")

    @property
    def min_gap(self) -> float:
        return math.pi / self.Omega

    @property
    def max_gap(self) -> float:
        return math.pi / self.omega


def _vectorize(fn: Callable[[float], float]) -> Callable:
    def wrapped(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return fn(float(x))
        return np.array([fn(float(xi)) for xi in x.ravel()]).reshape(x.shape)

    return wrapped


def canonical_transform(eq: LinearODE2, quad_tol: float = 1e-12) -> CanonicalForm:
    """Potential ``J`` and integrating factor of ``eq``.

    ``P'`` comes from ``eq.dP`` when supplied, otherwise from finite
    differences, so ``J`` can only be evaluated a little inside the domain in
    that case. The factor is normalised to 1 at ``domain.lo``.
    """
    dom = eq.domain
    h = 1e-4 * dom.width

    if eq.dP is not None:
        dP = eq.dP
    else:
        dP = _vectorize(lambda x: derivative(eq.P, x, 1, h=h))

    def J(x):
        p = np.asarray(eq.P(x))
        return np.asarray(eq.Q(x)) - 0.25 * p * p - 0.5 * np.asarray(dP(x))

    def log_factor(x):
        if x == dom.lo:
            return 0.0
        return -0.5 * quadrature(eq.P, Interval(dom.lo, x), tol=quad_tol)

    factor = _vectorize(lambda x: math.exp(log_factor(x)))
    return CanonicalForm(ScalarFunction(J, dom), ScalarFunction(factor, dom), dom)


def reconstruct_solution(cf: CanonicalForm, chi: ScalarFunction) -> ScalarFunction:
    """``u = factor * chi`` on the common domain."""
    if chi.domain != cf.domain:
        raise ValueError("chi and the canonical form live on different domains")
    factor = cf.integrating_factor
    return ScalarFunction(lambda x: np.asarray(factor(x)) * np.asarray(chi(x)), cf.domain)


def solve_canonical(
    J: ScalarFunction,
    chi0: float,
    dchi0: float,
    span: Interval | None = None,
    cfg: IntegratorConfig | None = None,
) -> ScalarFunction:
    """Numerically integrate ``chi'' = -J chi`` from ``span.lo`` and interpolate."""
    span = span or J.domain
    # dense steps keep the spline interpolant accurate in its second derivative
    cfg = cfg or IntegratorConfig(max_step=0.005 * min(span.width, 1.0))

    def rhs(x, y):
        return np.array([y[1], -J(x) * y[0]])

    traj = integrate_ode(rhs, [chi0, dchi0], span, cfg)
    return traj.interpolant(0)


def linear_residual(eq: LinearODE2, u: ScalarFunction, x: float, h: float | None = None) -> float:
    """``u'' + P u' + Q u`` at ``x``."""
    h = h if h is not None else 1e-3 * u.domain.width
    return (
        derivative(u, x, 2, h=h)
        + eq.P(x) * derivative(u, x, 1, h=h)
        + eq.Q(x) * u(x)
    )


def sturm_gap_check(
    J: ScalarFunction,
    bounds: SturmBounds,
    chi: ScalarFunction,
    span: Interval,
    scan_points: int = 4000,
) -> ResidualReport:
    """Measure adjacent-zero gaps of ``chi`` against ``[pi/Omega, pi/omega]``.

    The report's grid holds the left zero of every gap and its residuals the
    distance by which the gap falls outside the band (0 when inside). The
    gaps and per-gap verdicts are in ``details``.

    Raises
    ------
    BoundsViolation
        If ``J`` is not strictly between ``omega**2`` and ``Omega**2`` on a
        1001-point grid over ``span``.
    """
    xs = span.linspace(BOUNDS_GRID_POINTS)
    js = np.asarray(J(xs))
    if not (np.all(js > bounds.omega**2) and np.all(js < bounds.Omega**2)):
        bad = xs[(js <= bounds.omega**2) | (js >= bounds.Omega**2)][0]
        raise BoundsViolation(
            f"J({bad:.6g}) = {float(J(bad)):.6g} outside ({bounds.omega**2:.6g}, {bounds.Omega**2:.6g})"
        )

    zeros = [
        z
        for z in find_zeros(chi, span, scan_points)
        if z - span.lo > ENDPOINT_ZERO_GUARD and span.hi - z > ENDPOINT_ZERO_GUARD
    ]
    gaps = np.diff(zeros)
    lo, hi = bounds.min_gap, bounds.max_gap
    excess = np.maximum(0.0, np.maximum(lo - gaps, gaps - hi))
    return ResidualReport(
        tag="zero_gap",
        grid=np.asarray(zeros[:-1], dtype=float),
        residuals=excess,
        inconclusive=len(zeros) < 2,
        details={
            "zeros": list(zeros),
            "gaps": gaps.tolist(),
            "within_bounds": [bool(lo <= g <= hi) for g in gaps],
            "bounds": (lo, hi),
        },
    )

"""Amplitude-phase ansatz and the Ermakov-Pinney equation ``u^3 u'' = tau^2``.

Writing a solution of ``chi'' = 0`` as ``chi = A + B x = u exp(i tau ∫ u^-2)``
and taking the logarithmic derivative gives the first-order complex relation

    u'/u + i tau / u^2 = B / (A + B x).

Its imaginary part fixes ``u`` algebraically,

    u(x) = sqrt(tau / W) |A + B x|,   W = Re(A) Im(B) - Im(A) Re(B),

and its real part then holds identically. Differentiating the first-order
relation (using ``R' + R^2 = 0`` for ``R = B/(A+Bx)``) recovers the
second-order equation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    Interval,
    IntegratorConfig,
    ScalarFunction,
    derivative,
    integrate_ode,
    quadrature,
)

__all__ = [
    "EPParams",
    "ComplexPair",
    "PinneySolution",
    "AnsatzSpec",
    "InvalidPairError",
    "PoleError",
    "pinney_closed_form",
    "pair_from_initial_data",
    "first_order_lhs",
    "first_order_residual",
    "second_order_residual",
    "recovered_second_order_residual",
    "rhs_identity_residual",
    "ansatz_residual",
    "chi_from_ansatz",
    "integrate_ep",
]

# Finite-difference steps tuned for solutions varying on O(0.1)-O(1) scales.
FIRST_DERIVATIVE_STEP = 1e-3
SECOND_DERIVATIVE_STEP = 5e-3
POLE_RELATIVE_STEP = 2e-4


class InvalidPairError(ValueError):
    """Integration constants that cannot produce a real, positive amplitude."""


class PoleError(ValueError):
    """``A + B x`` vanishes at the evaluation point."""


@dataclass(frozen=True)
class EPParams:
    tau: float

    def __post_init__(self):
        if self.tau == 0 or not math.isfinite(self.tau):
            raise ValueError("tau must be finite and nonzero")

    @property
    def q(self) -> float:
        return self.tau**2


@dataclass(frozen=True)
class ComplexPair:
    A: complex
    B: complex

    def __post_init__(self):
        object.__setattr__(self, "A", complex(self.A))
        object.__setattr__(self, "B", complex(self.B))
        if self.B == 0:
            raise InvalidPairError("B must be nonzero")
        if self.W == 0:
            raise InvalidPairError("A and B are real-proportional (W = 0)")

    @property
    def W(self) -> float:
        return self.A.real * self.B.imag - self.A.imag * self.B.real

    def line(self, x):
        return self.A + self.B * np.asarray(x, dtype=float)

    def R(self, x):
        """``B / (A + B x)``; raises :class:`PoleError` on the pole."""
        z = self.line(x)
        if np.any(z == 0):
            raise PoleError(f"A + B x vanishes at x={x}")
        return self.B / z


@dataclass(frozen=True)
class PinneySolution:
    pair: ComplexPair
    params: EPParams
    u: ScalarFunction

    @property
    def domain(self) -> Interval:
        return self.u.domain


@dataclass(frozen=True)
class AnsatzSpec:
    u: ScalarFunction
    pi_fn: ScalarFunction
    lam: float = 2.0


def pinney_closed_form(pair: ComplexPair, params: EPParams, domain: Interval) -> PinneySolution:
    """Closed-form positive solution ``u = sqrt(tau/W) |A + B x|``.

    Raises
    ------
    InvalidPairError
        If ``tau/W <= 0`` (no real amplitude).
    PoleError
        If ``|A + B x|`` gets numerically close to zero on ``domain``.
    """
    ratio = params.tau / pair.W
    if not ratio > 0:
        raise InvalidPairError(f"tau/W = {ratio:.6g} must be positive for a real amplitude")
    # the minimum of |A + B x| over the real line is |W| / |B|
    x_min = -(pair.A * pair.B.conjugate()).real / abs(pair.B) ** 2
    x_star = min(max(x_min, domain.lo), domain.hi)
    if abs(pair.line(x_star)) < 1e-12 * (abs(pair.A) + abs(pair.B)):
        raise PoleError("|A + B x| vanishes on the domain")
    scale = math.sqrt(ratio)

    def u(x):
        return scale * np.abs(pair.line(x))

    return PinneySolution(pair, params, ScalarFunction(u, domain))


def pair_from_initial_data(u0: float, du0: float, tau: float) -> ComplexPair:
    """Constants reproducing ``u(0) = u0``, ``u'(0) = du0``.

    Normalised with ``A = u0`` real, so ``B = du0 + i tau/u0`` and ``W = tau``.
    """
    if not u0 > 0:
        raise InvalidPairError("u0 must be positive")
    return ComplexPair(complex(u0), complex(du0, tau / u0))


def first_order_lhs(sol: PinneySolution, x: float, h: float = FIRST_DERIVATIVE_STEP) -> complex:
    """``u'/u + i tau/u^2`` with ``u'`` from finite differences."""
    ux = sol.u(x)
    du = derivative(sol.u, x, 1, h=h)
    return complex(du / ux, sol.params.tau / ux**2)


def first_order_residual(sol: PinneySolution, x: float, h: float = FIRST_DERIVATIVE_STEP) -> complex:
    """``u'/u + i tau/u^2 - B/(A + B x)`` at ``x``."""
    rhs = complex(sol.pair.R(x))
    return first_order_lhs(sol, x, h) - rhs


def second_order_residual(
    u: ScalarFunction, params: EPParams, x: float, h: float = SECOND_DERIVATIVE_STEP
) -> float:
    """``u^3 u'' - tau^2`` at ``x``."""
    return float(u(x) ** 3 * derivative(u, x, 2, h=h) - params.q)


def recovered_second_order_residual(sol: PinneySolution, x: float, h: float = 2e-3) -> complex:
    """Second-order residual rebuilt from the first-order relation alone.

    With ``L = u'/u + i tau/u^2`` one has ``u^4 (L' + L^2) = u^3 u'' - tau^2``,
    so differentiating the first-order left-hand side reproduces the
    Ermakov-Pinney residual without evaluating ``u''`` directly.
    """
    dL = derivative(lambda s: first_order_lhs(sol, s), x, 1, h=h)
    L = first_order_lhs(sol, x)
    return sol.u(x) ** 4 * (dL + L * L)


def _reciprocal_line(A: complex, B: complex):
    def R(x):
        z = A + B * x
        if z == 0:
            raise PoleError(f"A + B x vanishes at x={x}")
        return B / z

    return R


def rhs_identity_residual(
    pair: ComplexPair | tuple[complex, complex], x: float, h: float | None = None
) -> complex:
    """``R'(x) + R(x)^2`` for ``R = B/(A + B x)``, ``R'`` by finite differences.

    The identity holds for any constants, so a bare ``(A, B)`` tuple is
    accepted as well (real-proportional pairs included). By default the step
    is a fixed fraction of the distance ``|A + B x| / |B|`` to the pole, which
    keeps the truncation error relative to ``|R|**2`` independent of ``x``.
    """
    A, B = (pair.A, pair.B) if isinstance(pair, ComplexPair) else map(complex, pair)
    R = _reciprocal_line(A, B)
    Rx = R(x)
    if h is None:
        h = POLE_RELATIVE_STEP / abs(Rx) if Rx != 0 else 1e-3
    dR = derivative(R, x, 1, h=h)
    return dR + Rx * Rx


def ansatz_residual(spec: AnsatzSpec, x: float, h: float = SECOND_DERIVATIVE_STEP) -> complex:
    """Left-hand side of the ansatz equation with ``chi'' = 0`` imposed.

    ``u'' + i pi' u^(1-lam) + i (2-lam) pi u' u^(-lam) - pi^2 u^(1-2 lam)``
    """
    u, p, lam = spec.u, spec.pi_fn, spec.lam
    ux, px = u(x), p(x)
    d2u = derivative(u, x, 2, h=h)
    du = derivative(u, x, 1, h=FIRST_DERIVATIVE_STEP)
    dp = derivative(p, x, 1, h=FIRST_DERIVATIVE_STEP)
    return complex(
        d2u - px**2 * ux ** (1 - 2 * lam),
        dp * ux ** (1 - lam) + (2 - lam) * px * du * ux ** (-lam),
    )


def chi_from_ansatz(spec: AnsatzSpec, x0: float, x: float, tol: float = 1e-12) -> complex:
    """``u(x) exp(i ∫_{x0}^{x} pi u^-lam)``."""
    if x == x0:
        return complex(spec.u(x))
    lo, hi = min(x0, x), max(x0, x)
    integrand = lambda s: spec.pi_fn(s) * spec.u(s) ** (-spec.lam)  # noqa: E731
    angle = quadrature(integrand, Interval(lo, hi), tol=tol)
    if x < x0:
        angle = -angle
    return spec.u(x) * cmath.exp(1j * angle)


def integrate_ep(
    params: EPParams,
    u0: float,
    du0: float,
    span: Interval,
    cfg: IntegratorConfig | None = None,
) -> ScalarFunction:
    """Numerical solution of ``u'' = tau^2 / u^3`` from ``span.lo``.

    Raises
    ------
    BlowUpError
        If ``u`` collapses to zero (the right-hand side diverges).
    """
    if not u0 > 0:
        raise ValueError("u0 must be positive")
    cfg = cfg or IntegratorConfig(max_step=0.02 * span.width)
    q = params.q

    def rhs(x, y):
        return np.array([y[1], q / y[0] ** 3])

    traj = integrate_ode(rhs, [u0, du0], span, cfg)
    return traj.interpolant(0)

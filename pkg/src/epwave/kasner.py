"""Kasner geometry for objects that depend on ``t`` only.

Metric ``-dt^2 + sum_k t^(2 p_k) dx_k^2`` with ``sum p_k = 1`` and
``sum p_k^2 = 1``. The only Christoffel symbols that enter a contraction with
the inverse metric for time-only 1-forms are ``Gamma^0_kk = p_k t^(2 p_k - 1)``,
and ``g^kk Gamma^0_kk = p_k / t``. Summed over k this is ``1/t``, which is why
divergence and d'Alembertian below do not need the exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import Interval, ScalarFunction, derivative

__all__ = [
    "KasnerExponents",
    "TimeOneForm",
    "ComplexTimeOneForm",
    "ExponentError",
    "make_exponents",
    "christoffel_t",
    "trace_christoffel",
    "divergence",
    "rho_residual",
    "box_scalar",
    "relative_step",
]

CONSTRAINT_TOL = 1e-12
# finite-difference steps as a fraction of t (keeps stencils clear of t = 0);
# second differences need the larger step to stay above rounding noise
RELATIVE_STEP = {1: 5e-4, 2: 3e-3}
INVERSE_METRIC_TT = -1.0


class ExponentError(ValueError):
    """Exponents off the Kasner circle, or a p1 with no real completion."""


def relative_step(t: float, order: int = 1) -> float:
    return RELATIVE_STEP[order] * abs(t)


@dataclass(frozen=True)
class KasnerExponents:
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        s1 = self.p1 + self.p2 + self.p3
        s2 = self.p1**2 + self.p2**2 + self.p3**2
        if abs(s1 - 1) >= CONSTRAINT_TOL or abs(s2 - 1) >= CONSTRAINT_TOL:
            raise ExponentError(
                f"({self.p1}, {self.p2}, {self.p3}) violates sum p = 1 or sum p^2 = 1"
            )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p1, self.p2, self.p3)

    @property
    def sum_residual(self) -> float:
        return sum(self.as_tuple()) - 1.0

    @property
    def sphere_residual(self) -> float:
        return sum(p * p for p in self.as_tuple()) - 1.0


@dataclass(frozen=True)
class TimeOneForm:
    """Real 1-form whose only nonzero component is the time component."""

    comp0: ScalarFunction

    def __post_init__(self):
        if not self.comp0.domain.lo > 0:
            raise ValueError("time-only forms must live on t > 0")

    @property
    def domain(self) -> Interval:
        return self.comp0.domain


@dataclass(frozen=True)
class ComplexTimeOneForm:
    """Complex time-only 1-form ``beta1 + i beta2``."""

    beta1: ScalarFunction
    beta2: ScalarFunction

    def __post_init__(self):
        if self.beta1.domain != self.beta2.domain:
            raise ValueError("real and imaginary parts need the same domain")
        if not self.beta1.domain.lo > 0:
            raise ValueError("time-only forms must live on t > 0")

    @property
    def domain(self) -> Interval:
        return self.beta1.domain

    def __call__(self, t):
        return np.asarray(self.beta1(t)) + 1j * np.asarray(self.beta2(t))


def make_exponents(p1: float) -> tuple[KasnerExponents, KasnerExponents]:
    """Both completions ``(p1, p2, p3)`` and ``(p1, p3, p2)`` of a given ``p1``.

    ``p2`` and ``p3`` are the roots of ``z^2 - (1 - p1) z - p1 (1 - p1) = 0``.

    Raises
    ------
    ExponentError
        If ``p1`` lies outside ``[-1/3, 1]``.
    """
    p1 = float(p1)
    disc = (1 - p1) * (1 + 3 * p1)
    if disc < 0:
        if disc > -1e-14:
            disc = 0.0
        else:
            raise ExponentError(
                f"p1 = {p1} outside [-1/3, 1]: discriminant {disc:.6g} is negative"
            )
    root = math.sqrt(disc)
    a = 0.5 * ((1 - p1) + root)
    b = 0.5 * ((1 - p1) - root)
    return KasnerExponents(p1, a, b), KasnerExponents(p1, b, a)


def christoffel_t(exps: KasnerExponents, t: float) -> tuple[float, float, float]:
    """``Gamma^0_kk = p_k t^(2 p_k - 1)`` for k = 1, 2, 3 (``Gamma^0_00 = 0``)."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    return tuple(p * t ** (2 * p - 1) for p in exps.as_tuple())


def trace_christoffel(t: float, exps: KasnerExponents | None = None) -> float:
    """``sum_k g^kk Gamma^0_kk``; equals ``1/t`` on the Kasner circle.

    Without exponents the collapsed value ``1/t`` is returned; with them the
    sum is carried out term by term.
    """
    if exps is None:
        return 1.0 / t
    gammas = christoffel_t(exps, t)
    return sum(t ** (-2 * p) * g for p, g in zip(exps.as_tuple(), gammas))


def divergence(
    form: TimeOneForm,
    t: float,
    h: float | None = None,
    exps: KasnerExponents | None = None,
) -> float:
    """Covariant divergence ``-psi0'(t) - psi0(t)/t`` of a time-only 1-form."""
    h = h if h is not None else relative_step(t)
    f = form.comp0
    dpsi = derivative(f, t, 1, h=h)
    return INVERSE_METRIC_TT * dpsi - f(t) * trace_christoffel(t, exps)


def rho_residual(
    form: ComplexTimeOneForm,
    t: float,
    h: float | None = None,
    exps: KasnerExponents | None = None,
) -> complex:
    """``div(rho) + g^00 rho0^2 = -rho0' - rho0/t - rho0^2``.

    The real and imaginary parts are the two real equations

        beta1' + beta1/t + beta1^2 - beta2^2 = 0
        beta2' + beta2/t + 2 beta1 beta2    = 0

    up to an overall sign.
    """
    h = h if h is not None else relative_step(t)
    rho = complex(form(t))
    drho = complex(derivative(form.beta1, t, 1, h=h), derivative(form.beta2, t, 1, h=h))
    return INVERSE_METRIC_TT * drho - rho * trace_christoffel(t, exps) + INVERSE_METRIC_TT * rho * rho


def box_scalar(
    f: ScalarFunction,
    t: float,
    h: float | None = None,
    exps: KasnerExponents | None = None,
) -> float:
    """Wave operator on a function of ``t``: ``-(f'' + f'/t)``."""
    d2f = derivative(f, t, 2, h=h if h is not None else relative_step(t, 2))
    df = derivative(f, t, 1, h=h if h is not None else relative_step(t, 1))
    return INVERSE_METRIC_TT * d2f - df * trace_christoffel(t, exps)

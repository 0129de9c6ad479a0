"""Amplitude and phase of the wave-equation parametrix in Kasner spacetime.

Pipeline, all on time-only quantities:

* divergence-free covector ``psi0 = kappa / t``;
* ``rho0 = beta1 + i beta2`` solving ``div(rho) + rho^2 = 0``, obtained from
  ``B(t) = (sigma/kappa) log(t/T)`` through ``beta2 = B'/(1 + B^2)`` and
  ``beta1 = B beta2``;
* amplitude ``alpha = sqrt(D)`` with ``D = kappa^2/sigma + sigma log^2(t/T)``;
* phase ``phi = phi_T + arctan((sigma/kappa) log(t/T))``.

:func:`verify_recipe` evaluates every defining relation as a residual on a
grid, using only finite differences and the Kasner operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kasner
from .kasner import ComplexTimeOneForm, TimeOneForm
from .numerics import (
    Interval,
    IntegratorConfig,
    ResidualReport,
    ScalarFunction,
    derivative,
    integrate_ode,
)

__all__ = [
    "ParametrixParams",
    "AmplitudePhase",
    "ResidualReport",
    "EQUATION_TAGS",
    "default_domain",
    "psi_kasner",
    "B_function",
    "log_dispersion",
    "beta_closed_form",
    "integrate_beta_system",
    "amplitude",
    "phase",
    "amplitude_phase",
    "rho_components",
    "verify_recipe",
]

# One tag per verified relation, in report order.
EQUATION_TAGS = (
    "transport",          # div(alpha^2 dphi) = 0
    "eikonal",            # g(dphi, dphi) = box(alpha)/alpha
    "psi_divergence",     # div(psi) = 0
    "amplitude",          # alpha^3 box(alpha) = g(psi, psi)
    "phase_gradient",     # dphi = psi / alpha^2
    "first_order",        # dlog(alpha) + i psi/alpha^2 = rho
    "rho_riccati",        # div(rho) + g(rho, rho) = 0
)


@dataclass(frozen=True)
class ParametrixParams:
    kappa: float
    sigma: float
    T: float
    phi_T: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "sigma", "T", "phi_T"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.kappa == 0:
            raise ValueError("kappa must be nonzero")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive (D must stay positive)")
        if not self.T > 0:
            raise ValueError("T must be positive")


@dataclass(frozen=True)
class AmplitudePhase:
    alpha: ScalarFunction
    phi: ScalarFunction
    domain: Interval


def default_domain(params: ParametrixParams) -> Interval:
    """``[1e-3 T, 1e4 T]``: the closed forms are smooth on all of ``t > 0``."""
    return Interval(1e-3 * params.T, 1e4 * params.T)


def _log_ratio(params, t):
    return np.log(np.asarray(t, dtype=float) / params.T)


def log_dispersion(params: ParametrixParams, domain: Interval | None = None) -> ScalarFunction:
    """``D(t) = kappa^2/sigma + sigma log^2(t/T)``, always positive."""
    k, s = params.kappa, params.sigma

    def D(t):
        L = _log_ratio(params, t)
        return k * k / s + s * L * L

    return ScalarFunction(D, domain or default_domain(params))


def psi_kasner(params: ParametrixParams, domain: Interval | None = None) -> TimeOneForm:
    """Divergence-free time-only covector ``kappa / t``."""
    k = params.kappa
    return TimeOneForm(ScalarFunction(lambda t: k / t, domain or default_domain(params)))


def B_function(params: ParametrixParams, domain: Interval | None = None) -> ScalarFunction:
    """Ratio ``beta1/beta2 = (sigma/kappa) log(t/T)``, normalised to vanish at ``T``."""
    ratio = params.sigma / params.kappa
    return ScalarFunction(lambda t: ratio * _log_ratio(params, t), domain or default_domain(params))


def beta_closed_form(params: ParametrixParams, domain: Interval | None = None) -> ComplexTimeOneForm:
    """Exact ``(beta1, beta2)`` with ``beta1 = sigma L/(t D)``, ``beta2 = kappa/(t D)``."""
    domain = domain or default_domain(params)
    D = log_dispersion(params, domain).evaluator
    s, k = params.sigma, params.kappa

    def beta1(t):
        return s * _log_ratio(params, t) / (t * D(t))

    def beta2(t):
        return k / (t * D(t))

    return ComplexTimeOneForm(ScalarFunction(beta1, domain), ScalarFunction(beta2, domain))


def rho_components(params: ParametrixParams, domain: Interval | None = None) -> ComplexTimeOneForm:
    """``rho0 = (sigma log(t/T) + i kappa) / (t D)`` evaluated as one complex expression."""
    domain = domain or default_domain(params)
    D = log_dispersion(params, domain).evaluator
    s, k = params.sigma, params.kappa

    def rho(t):
        t = np.asarray(t, dtype=float)
        return (s * _log_ratio(params, t) + 1j * k) / (t * D(t))

    return ComplexTimeOneForm(
        ScalarFunction(lambda t: rho(t).real, domain),
        ScalarFunction(lambda t: rho(t).imag, domain),
    )


def beta_rhs(t: float, beta: np.ndarray) -> np.ndarray:
    """Right-hand side of the real system equivalent to ``div(rho) + rho^2 = 0``."""
    b1, b2 = beta
    return np.array([-b1 / t - b1 * b1 + b2 * b2, -b2 / t - 2 * b1 * b2])


def integrate_beta_system(
    params: ParametrixParams,
    span: Interval,
    cfg: IntegratorConfig | None = None,
    initial: tuple[float, float] | None = None,
) -> ComplexTimeOneForm:
    """Integrate the ``beta`` system from ``span.lo``.

    Initial data default to the closed-form values at ``span.lo``, which for
    ``span.lo = T`` are ``(0, sigma/(kappa T))``.
    """
    if not span.lo > 0:
        raise ValueError("span must start at t > 0")
    cfg = cfg or IntegratorConfig(max_step=0.01 * span.width)
    if initial is None:
        exact = beta_closed_form(params, Interval(span.lo, span.hi))
        initial = (exact.beta1(span.lo), exact.beta2(span.lo))
    traj = integrate_ode(beta_rhs, list(initial), span, cfg)
    return ComplexTimeOneForm(traj.interpolant(0), traj.interpolant(1))


def amplitude(params: ParametrixParams, domain: Interval | None = None) -> ScalarFunction:
    """``alpha(t) = sqrt(D(t))``; ``alpha(T) = |kappa|/sqrt(sigma)``."""
    D = log_dispersion(params, domain)
    return ScalarFunction(lambda t: np.sqrt(D.evaluator(t)), D.domain)


def phase(params: ParametrixParams, domain: Interval | None = None) -> ScalarFunction:
    """``phi(t) = phi_T + arctan((sigma/kappa) log(t/T))`` (principal branch)."""
    ratio = params.sigma / params.kappa
    phi_T = params.phi_T
    return ScalarFunction(
        lambda t: phi_T + np.arctan(ratio * _log_ratio(params, t)),
        domain or default_domain(params),
    )


def amplitude_phase(params: ParametrixParams, domain: Interval | None = None) -> AmplitudePhase:
    domain = domain or default_domain(params)
    return AmplitudePhase(amplitude(params, domain), phase(params, domain), domain)


def _report(tag, grid, values):
    return ResidualReport(tag=tag, grid=np.asarray(grid, dtype=float), residuals=np.abs(values))


def verify_recipe(
    params: ParametrixParams,
    grid: Sequence[float],
    *,
    psi: TimeOneForm | None = None,
    alpha: ScalarFunction | None = None,
    phi: ScalarFunction | None = None,
    rho: ComplexTimeOneForm | None = None,
) -> list[ResidualReport]:
    """Residuals of the seven defining relations, one report per ``EQUATION_TAGS`` entry.

    Any of ``psi``, ``alpha``, ``phi`` or ``rho`` may be replaced, e.g. by a
    deliberately wrong candidate for a negative control. Derivatives use a
    step proportional to ``t``; ``g^00 = -1`` is applied to every time-index
    contraction.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or not np.all(grid > 0):
        raise ValueError("grid must be non-empty and lie in t > 0")
    domain = default_domain(params)
    lo, hi = float(grid.min()), float(grid.max())
    if lo < domain.lo * 1.01 or hi > domain.hi / 1.01:
        domain = Interval(0.5 * lo, 2.0 * hi)

    psi = psi or psi_kasner(params, domain)
    alpha = alpha or amplitude(params, domain)
    phi = phi or phase(params, domain)
    rho = rho or beta_closed_form(params, domain)
    g00 = kasner.INVERSE_METRIC_TT

    def dphi(t):
        return derivative(phi, t, 1, h=kasner.relative_step(t))

    flux = TimeOneForm(
        ScalarFunction(
            lambda t: np.vectorize(lambda s: alpha(s) ** 2 * dphi(s))(t), alpha.domain
        )
    )

    rows = {tag: [] for tag in EQUATION_TAGS}
    for t in grid:
        a = alpha(t)
        box_a = kasner.box_scalar(alpha, t)
        dp = dphi(t)
        psi0 = psi.comp0(t)
        dlog_a = derivative(alpha, t, 1, h=kasner.relative_step(t)) / a
        # nested difference: use the wider second-order step against rounding
        rows["transport"].append(kasner.divergence(flux, t, h=kasner.relative_step(t, 2)))
        rows["eikonal"].append(g00 * dp * dp - box_a / a)
        rows["psi_divergence"].append(kasner.divergence(psi, t))
        rows["amplitude"].append(a**3 * box_a - g00 * psi0 * psi0)
        rows["phase_gradient"].append(dp - psi0 / a**2)
        rows["first_order"].append(complex(dlog_a, psi0 / a**2) - complex(rho(t)))
        rows["rho_riccati"].append(kasner.rho_residual(rho, t))
    return [_report(tag, grid, rows[tag]) for tag in EQUATION_TAGS]

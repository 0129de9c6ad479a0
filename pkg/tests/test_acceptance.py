"""End-to-end acceptance checks, one ``criterion`` marker per gate.

The conftest hook prints a single PASS/FAIL line for each criterion at the
end of the run.
"""

import csv
import math

import numpy as np
import pytest

from epwave import kasner
from epwave.canonical import SturmBounds, solve_canonical, sturm_gap_check
from epwave.cli import main
from epwave.ermakov import (
    AnsatzSpec,
    ComplexPair,
    EPParams,
    chi_from_ansatz,
    first_order_residual,
    integrate_ep,
    pinney_closed_form,
    rhs_identity_residual,
    second_order_residual,
)
from epwave.kasner import ExponentError, TimeOneForm, make_exponents
from epwave.numerics import Interval, ScalarFunction
from epwave.parametrix import (
    EQUATION_TAGS,
    ParametrixParams,
    amplitude,
    beta_closed_form,
    integrate_beta_system,
    phase,
    psi_kasner,
    verify_recipe,
)

SEED = 20240611
PARAM_GRID = [
    ParametrixParams(k, s, T)
    for k in (1.0, 2.0)
    for s in (0.5, 1.0, 4.0)
    for T in (0.5, 1.0)
]
PARAM_IDS = [f"k{p.kappa:g}-s{p.sigma:g}-T{p.T:g}" for p in PARAM_GRID]


def random_pinney_cases(n, seed=SEED):
    """``n`` pairs with ``|W| >= 0.2`` and ``tau/W`` in ``[0.5, 2]``."""
    rng = np.random.default_rng(seed)
    cases = []
    while len(cases) < n:
        a, b = rng.uniform(-1.5, 1.5, 2) + 1j * rng.uniform(-1.5, 1.5, 2)
        w = a.real * b.imag - a.imag * b.real
        if abs(w) < 0.2:
            continue
        cases.append((complex(a), complex(b), float(w * rng.uniform(0.5, 2.0))))
    return cases


PINNEY_CASES = random_pinney_cases(20)
UNIT_SPAN = Interval(0.0, 2.0)
PAD_DOMAIN = Interval(-0.5, 2.5)


def _cli_rows(tmp_path, *argv):
    out = tmp_path / "out.csv"
    code = main([*argv, "-o", str(out)])
    rows = list(csv.reader(out.read_text().splitlines())) if out.exists() else None
    return code, rows, (out.read_bytes() if out.exists() else None)


# -- 1. closed form vs second-order, first-order and integrated solutions ----


@pytest.mark.criterion(1, "Pinney closed form vs Eqs. of motion and integrator")
@pytest.mark.parametrize("A, B, tau", PINNEY_CASES)
def test_pinney_equivalence(A, B, tau):
    params = EPParams(tau)
    sol = pinney_closed_form(ComplexPair(A, B), params, PAD_DOMAIN)
    xs = UNIT_SPAN.linspace(41)

    second = max(abs(second_order_residual(sol.u, params, x)) for x in xs)
    assert second < 1e-5
    first = max(abs(first_order_residual(sol, x)) for x in xs)
    assert first < 1e-6

    # seed the integrator with the closed form's value and slope at 0
    c = math.sqrt(tau / sol.pair.W)
    u0 = c * abs(A)
    du0 = c * (A.conjugate() * B).real / abs(A)
    numeric = integrate_ep(params, u0, du0, UNIT_SPAN)
    exact = np.asarray(sol.u(xs))
    assert np.max(np.abs(numeric(xs) - exact) / exact) < 1e-5


# -- 2. R' + R^2 = 0 --------------------------------------------------------


@pytest.mark.criterion(2, "R' + R^2 identity")
@pytest.mark.parametrize("A, B", [case[:2] for case in PINNEY_CASES])
def test_rhs_identity(A, B):
    pair = ComplexPair(A, B)
    # complex pairs have their pole off the real axis
    for x in np.linspace(-2, 2, 41):
        assert abs(rhs_identity_residual(pair, x)) < 1e-8


# -- 3. chi built from a Pinney solution is affine -------------------------


@pytest.mark.criterion(3, "chi from the ansatz is affine")
@pytest.mark.parametrize("A, B, tau", PINNEY_CASES)
def test_chi_affinity(A, B, tau):
    sol = pinney_closed_form(ComplexPair(A, B), EPParams(tau), PAD_DOMAIN)
    spec = AnsatzSpec(sol.u, ScalarFunction.constant(tau, PAD_DOMAIN), 2.0)
    xs = UNIT_SPAN.linspace(11)
    chi = np.array([chi_from_ansatz(spec, 0.0, x) for x in xs])
    dx = xs[1] - xs[0]
    second_diff = (chi[2:] - 2 * chi[1:-1] + chi[:-2]) / dx**2
    assert np.max(np.abs(second_diff)) < 1e-6
    # and the slope/intercept ratio is that of the pair
    assert (chi[1] - chi[0]) / dx / chi[0] == pytest.approx(B / A, rel=1e-8)


# -- 4. Kasner exponents ---------------------------------------------------


@pytest.mark.criterion(4, "Kasner exponent constraints")
def test_kasner_constraints():
    rng = np.random.default_rng(SEED)
    samples = np.concatenate([[-1 / 3, 1.0], rng.uniform(-1 / 3, 1.0, 98)])
    for p1 in samples:
        for exps in make_exponents(float(p1)):
            assert exps.p1 == p1
            assert abs(exps.sum_residual) < 1e-12
            assert abs(exps.sphere_residual) < 1e-12


@pytest.mark.criterion(4, "Kasner exponent constraints")
@pytest.mark.parametrize("p1", [-1 / 3 - 1e-3, -1.0, 1.0 + 1e-3, 2.0])
def test_kasner_out_of_range(p1):
    with pytest.raises(ExponentError):
        make_exponents(p1)


# -- 5. divergence-free psi ------------------------------------------------


@pytest.mark.criterion(5, "psi = kappa/t is divergence free")
@pytest.mark.parametrize("kappa", [-2.0, 1.0, 5.0])
@pytest.mark.parametrize("T", [0.5, 1.0])
def test_psi_divergence(kappa, T):
    p = ParametrixParams(kappa, 1.0, T)
    psi = psi_kasner(p)
    for t in np.geomspace(T, 100 * T, 60):
        assert abs(kasner.divergence(psi, t)) < 1e-8
    control = TimeOneForm(ScalarFunction(lambda s: kappa / s**2, psi.comp0.domain))
    assert abs(kasner.divergence(control, T)) > 1e-3


# -- 6. rho covector -------------------------------------------------------


@pytest.mark.criterion(6, "rho closed form and integrated beta system")
@pytest.mark.parametrize("p", PARAM_GRID, ids=PARAM_IDS)
def test_rho_equation(p):
    rho = beta_closed_form(p)
    for t in np.geomspace(p.T, 10 * p.T, 40):
        assert abs(kasner.rho_residual(rho, t)) < 1e-7
    span = Interval(p.T, 10 * p.T)
    sol = integrate_beta_system(p, span)
    ts = span.linspace(200)
    assert np.max(np.abs(sol(ts) - rho(ts))) < 1e-6


# -- 7. full recipe --------------------------------------------------------


@pytest.mark.criterion(7, "recipe verification and spot values")
@pytest.mark.parametrize("p", PARAM_GRID, ids=PARAM_IDS)
def test_recipe(p):
    reports = verify_recipe(p, np.geomspace(p.T, 20 * p.T, 50))
    assert [r.tag for r in reports] == list(EQUATION_TAGS)
    for r in reports:
        assert r.max_abs < 1e-6, r.tag


@pytest.mark.criterion(7, "recipe verification and spot values")
def test_recipe_spot_values():
    unit = ParametrixParams(1.0, 1.0, 1.0)
    assert abs(amplitude(unit)(math.e) - math.sqrt(2)) < 1e-9
    phi = phase(unit)
    assert abs(phi(math.e) - phi(1.0) - math.pi / 4) < 1e-9


# -- 8. zero gaps ----------------------------------------------------------


@pytest.mark.criterion(8, "zero-gap bounds")
@pytest.mark.parametrize("mu", [0.5, 1.0, 2.0, 3.7])
def test_constant_potential_gaps(mu):
    span = Interval(0.1, 0.1 + 12 * math.pi / mu)
    J = ScalarFunction.constant(mu * mu, span)
    chi = ScalarFunction(lambda x: np.sin(mu * x), span)
    report = sturm_gap_check(J, SturmBounds(0.95 * mu, 1.05 * mu), chi, span)
    gaps = np.asarray(report.details["gaps"])
    assert len(gaps) >= 10
    assert np.max(np.abs(gaps - math.pi / mu)) < 1e-8
    assert not report.inconclusive and all(report.details["within_bounds"])


@pytest.mark.criterion(8, "zero-gap bounds")
def test_slowly_varying_potential_gaps():
    span = Interval(5.0, 50.0)
    J = ScalarFunction(lambda x: 1 + 1 / (4 * x * x), span)
    chi = solve_canonical(J, 0.0, 1.0, span)
    report = sturm_gap_check(J, SturmBounds(1.0, 1.01), chi, span)
    gaps = np.asarray(report.details["gaps"])
    assert not report.inconclusive and len(gaps) >= 12
    assert np.all(gaps >= math.pi / 1.01) and np.all(gaps <= math.pi)
    assert all(report.details["within_bounds"])


# -- 9. CLI ----------------------------------------------------------------


@pytest.mark.criterion(9, "CLI examples, determinism and exit status")
def test_cli_verify_example(tmp_path):
    argv = ["verify", "--kappa", "1", "--sigma", "1", "--T", "1", "--t-max", "20", "--n", "50", "--spacing", "log"]
    code, rows, first = _cli_rows(tmp_path, *argv)
    assert code == 0
    assert [r[0] for r in rows[1:]] == list(EQUATION_TAGS)
    assert all(float(r[1]) < 1e-6 for r in rows[1:])
    _, _, second = _cli_rows(tmp_path, *argv)
    assert first == second


@pytest.mark.criterion(9, "CLI examples, determinism and exit status")
def test_cli_parametrix_example(tmp_path):
    code, rows, _ = _cli_rows(
        tmp_path, "parametrix", "--kappa", "1", "--sigma", "1", "--T", "1",
        "--t-min", "1", "--t-max", "2.71828182845905", "--n", "2",
    )
    assert code == 0
    assert rows[0] == ["t", "alpha", "phi", "beta1", "beta2", "psi0"]
    assert f"{float(rows[-1][1]):.7f}" == "1.4142136"
    assert f"{float(rows[-1][2]):.7f}" == "0.7853982"


@pytest.mark.criterion(9, "CLI examples, determinism and exit status")
def test_cli_kasner_example(tmp_path, capsys):
    code, rows, _ = _cli_rows(tmp_path, "kasner", "--p1", "2")
    assert code != 0 and rows is None
    assert "discriminant" in capsys.readouterr().err


@pytest.mark.criterion(9, "CLI examples, determinism and exit status")
def test_cli_corrupted_psi(tmp_path):
    code, rows, _ = _cli_rows(tmp_path, "verify", "--corrupt", "psi", "--spacing", "log")
    assert code == 1
    assert float(dict((r[0], r[1]) for r in rows[1:])["psi_divergence"]) > 1e-6

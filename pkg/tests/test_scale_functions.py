import math

import numpy as np
import pytest
from scipy import integrate

from fluidq.errors import DomainError, InversionError
from fluidq.levy_model import LevyModel
from fluidq.presets import PRESETS, example2
from fluidq.scale_functions import (
    InversionMethod,
    InversionParams,
    ScaleFunctionSpec,
    W_q,
    Z_q,
    exit_down_lt,
    exit_up_lt,
    invert_both,
    q_over_phi,
)
from fluidq.transforms import phi_Y

GRID = np.linspace(0.1, 5.0, 50)


def _cpp_roots(d, lam, delta, q):
    # d b^2 + (d delta - lam - q) b - q delta = 0 -> (Phi(q), -R)
    B = d * delta - lam - q
    disc = math.sqrt(B * B + 4 * d * q * delta)
    return (-B + disc) / (2 * d), (B + disc) / (2 * d)


def _cpp_W(d, lam, delta, q, x):
    """Partial fractions of (delta + b) / (d (b - Phi)(b + R))."""
    phi, r = _cpp_roots(d, lam, delta, q)
    return ((delta + phi) * math.exp(phi * x) + (r - delta) * math.exp(-r * x)) / (d * (phi + r))


def _cpp_exit_down(d, lam, delta, q, x):
    # undershoot is Exp(delta), so the transform is a single exponential in x
    _, r = _cpp_roots(d, lam, delta, q)
    return (1.0 - r / delta) * math.exp(-r * x)


def test_brownian_W0_closed_form():
    spec = ScaleFunctionSpec(LevyModel("negative", 1.0, -0.5), 0.0)
    assert abs(W_q(spec, 1.0) - 2 * (math.e - 1)) <= 1e-8


@pytest.mark.parametrize("q", [0.0, 0.7])
def test_brownian_Wq_closed_form(q):
    # W^(q)(x) = (e^{Phi x} - e^{-r x}) / (sigma^2/2 (Phi + r)) for psi = a t + t^2/2
    spec = ScaleFunctionSpec(LevyModel("negative", 1.0, 0.5), q)
    phi, r = -0.5 + math.sqrt(0.25 + 2 * q), 0.5 + math.sqrt(0.25 + 2 * q)
    for x in (0.2, 1.0, 4.0):
        exact = (math.exp(phi * x) - math.exp(-r * x)) / (0.5 * (phi + r))
        assert W_q(spec, x) == pytest.approx(exact, rel=1e-9)


@pytest.mark.parametrize("q", [0.0, 0.5, 2.0])
def test_cpp_W_partial_fractions(q):
    spec = ScaleFunctionSpec(example2(), q)
    for x in GRID[::7]:
        assert W_q(spec, x) == pytest.approx(_cpp_W(1.2, 1.0, 2.0, q, x), rel=1e-9)


@pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 3.0])
def test_cpp_exit_down_closed_form(x):
    spec = ScaleFunctionSpec(example2(), 1.0)
    assert exit_down_lt(spec, x) == pytest.approx(_cpp_exit_down(1.2, 1.0, 2.0, 1.0, x),
                                                  rel=1e-9)


@pytest.mark.parametrize("name", sorted(PRESETS)[:4])
@pytest.mark.parametrize("q", [0.0, 0.5])
def test_methods_agree_on_grid(name, q):
    spec = ScaleFunctionSpec(PRESETS[name](), q)
    for x in GRID:
        vals = invert_both(spec, "W", float(x))
        a, b = vals["talbot"], vals["euler"]
        assert abs(a - b) <= 1e-7 * max(abs(a), abs(b))


def test_Z_is_one_plus_q_integral_of_W(preset):
    spec = ScaleFunctionSpec(preset, 0.8)
    for x in (0.5, 2.0):
        integral, _ = integrate.quad(lambda y: W_q(spec, y), 0.0, x, epsabs=1e-12)
        assert Z_q(spec, x) == pytest.approx(1 + 0.8 * integral, rel=1e-7)


def test_Z_trivial_cases(preset):
    assert Z_q(ScaleFunctionSpec(preset, 0.0), 2.0) == 1.0
    assert Z_q(ScaleFunctionSpec(preset, 1.0), 0.0) == 1.0


def test_W_at_zero(ex1, ex2, ex3, ex4):
    assert W_q(ScaleFunctionSpec(ex1, 1.0), 0.0) == 0.0
    assert W_q(ScaleFunctionSpec(ex4, 1.0), 0.0) == 0.0
    assert W_q(ScaleFunctionSpec(ex2, 1.0), 0.0) == pytest.approx(1 / 1.2)
    assert W_q(ScaleFunctionSpec(ex3, 1.0), 0.0) == pytest.approx(1 / 2.0)
    # right-continuity at 0 for bounded variation
    assert W_q(ScaleFunctionSpec(ex2, 1.0), 1e-4) == pytest.approx(1 / 1.2, rel=1e-3)


def test_W_increasing_and_positive(preset):
    spec = ScaleFunctionSpec(preset, 0.3)
    vals = [W_q(spec, x) for x in GRID[::5]]
    assert all(v > 0 for v in vals) and np.all(np.diff(vals) > 0)


def test_exit_up(ex1, ex3):
    assert exit_up_lt(ex1, 1.0, 0.0) == 1.0
    assert exit_up_lt(ex1, 1.0, 2.0) == pytest.approx(math.exp(-2.0 * phi_Y(ex1, 1.0)))
    # spectrally negative with Phi(0) > 0: the level may never be reached
    assert exit_up_lt(ex3, 0.0, 1.0) == pytest.approx(math.exp(-0.25))


def test_exit_down_limits(ex1, ex2):
    assert exit_down_lt(ScaleFunctionSpec(ex1, 1.0), 0.0) == 1.0
    # bounded variation starts by drifting up, so exit at 0 is not immediate
    phi = phi_Y(ex2, 1.0)
    assert exit_down_lt(ScaleFunctionSpec(ex2, 1.0), 0.0) == pytest.approx(1 - 1 / (phi * 1.2))
    v = [exit_down_lt(ScaleFunctionSpec(ex1, 1.0), x) for x in (0.5, 1.0, 2.0)]
    assert all(0 < a < 1 for a in v) and v[0] > v[1] > v[2]


def test_q_over_phi_limits(ex1, ex2, ex3):
    # Phi(0) > 0 gives 0; Phi(0) = 0 gives psi'(0+)
    assert q_over_phi(ex3, 0.0) == 0.0
    assert q_over_phi(ex1, 0.0) == pytest.approx(0.5)
    assert q_over_phi(ex2, 0.0) == pytest.approx(0.7)
    assert q_over_phi(ex1, 2.0) == pytest.approx(2.0 / phi_Y(ex1, 2.0))


def test_single_methods(ex1):
    for method in ("talbot", "euler"):
        spec = ScaleFunctionSpec(ex1, 0.5, method)
        assert spec.method is InversionMethod(method)
        assert W_q(spec, 1.0) == pytest.approx(W_q(ScaleFunctionSpec(ex1, 0.5), 1.0), rel=1e-8)


def test_disagreement_raises(ex1):
    # too few Euler terms to meet a strict agreement tolerance
    spec = ScaleFunctionSpec(ex1, 0.5, params=InversionParams(euler_terms=4,
                                                               agreement_rtol=1e-14))
    with pytest.raises(InversionError) as err:
        W_q(spec, 1.0)
    assert {"talbot", "euler"} <= set(err.value.diagnostics)


def test_domain_errors(ex1):
    with pytest.raises(DomainError):
        ScaleFunctionSpec(ex1, -1.0)
    with pytest.raises(DomainError):
        W_q(ScaleFunctionSpec(ex1, 0.0), -1.0)
    with pytest.raises(DomainError):
        Z_q(ScaleFunctionSpec(ex1, 0.0), -1.0)
    with pytest.raises(DomainError):
        exit_up_lt(ex1, -1.0, 1.0)

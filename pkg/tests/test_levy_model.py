import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluidq.errors import AssumptionError, DomainError
from fluidq.levy_model import (
    CompoundPoissonExp,
    InverseBMLocalTime,
    LevyModel,
    NoJumps,
    SpectralSign,
    StableSubordinator,
    classify,
    laplace_exponent,
    laplace_exponent_derivative,
    psi_complex,
    require_valid,
    validate_assumptions,
)
from fluidq.presets import PRESETS, example1, example2


def test_exponent_brownian_value(ex1):
    # 0.5 theta^2 + 0.5 theta at theta = 1
    assert laplace_exponent(ex1, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_exponent_stable_value(ex3):
    # b theta - c theta^alpha = 8 - 2
    assert laplace_exponent(ex3, 4.0) == pytest.approx(6.0, abs=1e-14)


def test_exponent_cpp_and_invbm_closed_forms(ex2, ex4):
    for t in (0.3, 1.0, 7.0):
        assert laplace_exponent(ex2, t) == pytest.approx(1.2 * t - t / (2 + t), rel=1e-14)
        assert laplace_exponent(ex4, t) == pytest.approx(
            1.5 * t + 0.5 * t * t - 1.6 * math.sqrt(t), rel=1e-13)


def test_exponent_zero_at_origin(preset):
    assert laplace_exponent(preset, 0.0) == 0.0


def test_exponent_rejects_negative_argument(ex1):
    with pytest.raises(DomainError):
        laplace_exponent(ex1, -0.1)
    with pytest.raises(DomainError):
        laplace_exponent_derivative(ex1, -0.1)


def test_derivative_at_zero(ex1, ex2, ex3, ex4):
    assert laplace_exponent_derivative(ex1, 0.0) == pytest.approx(0.5)
    assert laplace_exponent_derivative(ex2, 0.0) == pytest.approx(0.7)
    assert laplace_exponent_derivative(ex3, 0.0) == -math.inf
    assert laplace_exponent_derivative(ex4, 0.0) == -math.inf


def test_classify_presets(ex1, ex2, ex3, ex4):
    assert classify(ex1).kind == "UnboundedVariation"
    assert classify(ex4).kind == "UnboundedVariation"
    assert classify(ex2) == classify(ex2).__class__(True, -1.2)
    assert classify(ex3).bounded and classify(ex3).drift == 2.0


def test_validation_presets_pass(preset):
    rep = validate_assumptions(preset)
    assert rep.ok
    assert {c.name for c in rep.checks} == {"non_monotone", "drift_sign", "A1", "A2"}


def test_validation_failures():
    assert validate_assumptions(example2(drift=0.9)).failed == ("A2",)
    assert "A1" in validate_assumptions(example1(mu=1.5)).failed
    with pytest.raises(AssumptionError) as err:
        require_valid(example1(mu=1.5))
    assert "A1" in err.value.failed


def test_validation_monotone_paths():
    # no Gaussian part and drift in the direction of the jumps
    m = LevyModel("negative", 0.0, -1.0, StableSubordinator(0.5, 1.0))
    assert "non_monotone" in validate_assumptions(m).failed
    assert "non_monotone" in validate_assumptions(LevyModel("negative", 0.0, 1.0)).failed


def test_validation_to_dict(ex1):
    d = validate_assumptions(ex1).to_dict()
    assert d["A1"]["passed"] is True


def test_jump_specs_reject_bad_parameters():
    with pytest.raises(DomainError):
        CompoundPoissonExp(-1.0, 2.0)
    with pytest.raises(DomainError):
        StableSubordinator(1.0, 1.0)
    with pytest.raises(DomainError):
        InverseBMLocalTime(0.0)
    with pytest.raises(DomainError):
        LevyModel("negative", -1.0, 0.0)


def test_orientation_flips_sign_and_keeps_exponent(ex2):
    r = ex2.oriented()
    assert r.spectral_sign is SpectralSign.NEGATIVE and r.linear_drift == 1.2
    for t in (0.1, 2.0, 30.0):
        assert laplace_exponent(r, t) == laplace_exponent(ex2, t)


def test_complex_continuation_matches_real(preset):
    for t in (0.2, 1.0, 5.0):
        assert complex(psi_complex(preset, complex(t, 0.0))).real == pytest.approx(
            laplace_exponent(preset, t), rel=1e-13)


def test_vectorised_arguments(ex3):
    t = np.array([0.0, 1.0, 4.0])
    np.testing.assert_allclose(laplace_exponent(ex3, t), [0.0, 1.0, 6.0], atol=1e-14)


positive = st.floats(0.01, 50.0)


@pytest.mark.parametrize("name", sorted(PRESETS))
@settings(max_examples=60, deadline=None)
@given(a=positive, b=positive, c=positive)
def test_convexity(name, a, b, c):
    model = PRESETS[name]()
    t1, t2, t3 = sorted((a, b, c))
    if t3 - t1 < 1e-6:
        return
    w = (t3 - t2) / (t3 - t1)
    chord = w * laplace_exponent(model, t1) + (1 - w) * laplace_exponent(model, t3)
    mid = laplace_exponent(model, t2)
    assert mid <= chord + 1e-12 * max(1.0, abs(chord))


@pytest.mark.parametrize("name", sorted(PRESETS))
@settings(max_examples=60, deadline=None)
@given(t=st.floats(0.05, 20.0))
def test_derivative_matches_central_difference(name, t):
    model = PRESETS[name]()
    h = 1e-4 * t
    fd = (laplace_exponent(model, t + h) - laplace_exponent(model, t - h)) / (2 * h)
    d = laplace_exponent_derivative(model, t)
    # O(h^2) truncation plus rounding of order eps |psi| / h
    scale = max(1.0, abs(laplace_exponent(model, t))) / h
    assert abs(d - fd) <= 1e-5 * max(1.0, abs(d)) + 1e-13 * scale


def test_bounded_variation_proxy_total_variation(ex2, ex3):
    # refining the grid leaves the total variation over [0, 1] bounded
    from fluidq.simulator.paths import sample_path

    for model in (ex2, ex3):
        tv = [np.abs(sample_path(model, dt, 1.0, seed=3)).sum() for dt in (1e-2, 1e-3, 1e-4)]
        assert tv[-1] < 3.0 * tv[0] + 5.0
    bm = [np.abs(sample_path(example1(), dt, 1.0, seed=3)).sum() for dt in (1e-2, 1e-4)]
    assert bm[1] > 5.0 * bm[0]


def test_no_jumps_is_default():
    assert LevyModel("positive", 1.0, -0.5).jumps == NoJumps()

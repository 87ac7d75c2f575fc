import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluidq.errors import DomainError, UndefinedEstimateError
from fluidq.levy_model import LevyModel, StableSubordinator
from fluidq.presets import example1, example2, example3
from fluidq.simulator.paths import (
    PathGrid,
    PeriodSet,
    extract_periods,
    local_time_path,
    palm_local_time_expectation,
    period_transform_estimates,
    queue_path,
    reflect,
    reflect_bruteforce,
    reflect_with_regulator,
    right_cont_inverse,
    sample_path,
    simulate_path,
    stable_increments,
    step_value,
    write_path_csv,
)
from fluidq.simulator.rng import stream

# --- sampling ---------------------------------------------------------------------------


def test_deterministic_drift_increments():
    y = sample_path(LevyModel("positive", 0.0, -1.0), 0.01, 1.0, seed=0)
    assert len(y) == 100 and np.all(y == -0.01)


def test_cpp_mean_increment(ex2):
    dt = 1e-3
    y = sample_path(ex2, dt, 1e3, seed=11) / dt
    se = y.std(ddof=1) / math.sqrt(len(y))
    assert len(y) == 10 ** 6
    assert abs(y.mean() + 0.7) <= 3 * se


def test_stable_transform():
    dt = 1e-3
    s = stable_increments(0.5, 1.0, dt, 10 ** 6, stream(5, 0, "jumps", "grid"))
    v = np.exp(-s)
    assert abs(v.mean() - math.exp(-dt)) <= 3 * v.std(ddof=1) / math.sqrt(len(v))
    assert np.all(s >= 0)


def test_sample_path_rejects_bad_grid(ex1):
    with pytest.raises(DomainError):
        sample_path(ex1, 0.0, 1.0, 0)
    with pytest.raises(DomainError):
        sample_path(ex1, 1.0, 0.5, 0)


def test_sample_path_deterministic(ex3):
    a = sample_path(ex3, 1e-3, 5.0, seed=9)
    b = sample_path(ex3, 1e-3, 5.0, seed=9)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_path(ex3, 1e-3, 5.0, seed=10))


# --- reflection --------------------------------------------------------------------------


def test_reflect_pure_drain_and_fill():
    t = np.arange(1, 11) * 0.25
    np.testing.assert_allclose(reflect(1.0, np.full(10, -0.25)), np.maximum(1 - t, 0))
    np.testing.assert_allclose(reflect(0.0, np.full(10, 0.25)), t)


def test_reflect_hand_example():
    assert list(reflect(0.0, [2.0, -3.0, 1.0])) == [2.0, 0.0, 1.0]
    assert list(reflect_bruteforce(0.0, [2.0, -3.0, 1.0])) == [2.0, 0.0, 1.0]


def test_reflect_rejects_negative_start():
    with pytest.raises(DomainError):
        reflect(-1.0, [1.0])


def test_reflection_bruteforce_equivalence_1e4():
    # dyadic increments make every partial sum exact, so equality is bitwise
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        inc = rng.integers(-256, 257, size=20) / 64.0
        x0 = rng.integers(0, 129) / 64.0
        assert np.array_equal(reflect(x0, inc), reflect_bruteforce(x0, inc))


@settings(max_examples=200, deadline=None)
@given(inc=st.lists(st.integers(-1000, 1000), min_size=2, max_size=40),
       x0=st.integers(0, 500), data=st.data())
def test_flow_property(inc, x0, data):
    inc = np.array(inc) / 128.0
    x0 = x0 / 128.0
    u = data.draw(st.integers(1, len(inc) - 1))
    whole = reflect(x0, inc)[-1]
    first = reflect(x0, inc[:u])[-1]
    assert whole == reflect(first, inc[u:])[-1]
    assert whole == reflect_bruteforce(reflect_bruteforce(x0, inc[:u])[-1], inc[u:])[-1]


def test_regulator_is_minimal_push():
    x, reg = reflect_with_regulator(0.5, [-1.0, 0.25, -2.0])
    assert list(x) == [0.0, 0.25, 0.0] and list(reg) == [0.5, 0.0, 1.75]


# --- local time ---------------------------------------------------------------------------


def test_local_time_pure_drain_regulator():
    model = LevyModel("positive", 0.0, -1.0)
    y = np.full(50, -0.01)
    x = reflect(0.0, y)
    np.testing.assert_allclose(local_time_path(model, x, y, 0.01, 0), 0.01)


@pytest.mark.parametrize("model", [example1(), example2()], ids=["regulator", "abs-cts"])
def test_local_time_support(model):
    p = simulate_path(model, 1e-3, 50.0, seed=4)
    assert np.all(p.local_time_increments >= 0)
    assert p.local_time_increments[p.x > 0].sum() == 0.0


def test_local_time_marks_only_at_zeros(ex3):
    p = simulate_path(ex3, 1e-3, 50.0, seed=4)
    assert np.all(p.local_time_increments[p.x > 0] == 0.0)
    assert (p.local_time_increments > 0).sum() == (p.x == 0).sum()


def test_local_time_brownian_negative_scale():
    model = LevyModel("negative", 2.0, 1.0)
    y = sample_path(model, 1e-3, 20.0, seed=1)
    x, reg = reflect_with_regulator(0.0, y)
    np.testing.assert_allclose(local_time_path(model, x, y, 1e-3, 1), 0.5 * reg)


def test_local_time_eps_marks_warns(ex4):
    y = sample_path(ex4, 1e-3, 200.0, seed=2)
    x = reflect(0.0, y)
    with pytest.warns(UserWarning, match="eps-excursion"):
        dl = local_time_path(ex4, x, y, 1e-3, 2)
    assert np.all(dl[x > 0] == 0)


def test_path_invariants_and_conservation(ex1):
    p = simulate_path(ex1, 1e-3, 30.0, seed=8)
    n = math.ceil(30.0 / 1e-3)
    assert len(p.y_increments) == len(p.x) == len(p.local_time_increments) == len(p.q) == n
    assert np.all(p.x >= 0) and np.all(p.q >= 0)
    prev = np.concatenate([[0.0], p.q[:-1]])
    push = p.q - (prev + p.local_time_increments - p.dt)
    assert np.all(push >= -1e-12)
    assert np.all(p.q[push > 1e-12] == 0.0)


def test_simulate_path_determinism(ex2):
    a, b = simulate_path(ex2, 1e-3, 10.0, seed=3), simulate_path(ex2, 1e-3, 10.0, seed=3)
    for f in ("y_increments", "x", "local_time_increments", "q"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


# --- queue and periods --------------------------------------------------------------------


def test_queue_pure_drain():
    np.testing.assert_array_equal(queue_path(np.zeros(7), 1.0, 5.0), [4, 3, 2, 1, 0, 0, 0])


def test_queue_subcritical_constant_input():
    assert np.all(queue_path(np.full(100, 0.3 * 0.01), 0.01, 0.0) == 0.0)


def test_extract_periods_hand_example():
    ps = extract_periods([0, 0, 1, 0.5, 0, 0, 2, 1, 0], 1.0)
    assert list(ps.d_times) == [2.0, 6.0]
    assert list(ps.g_times) == [4.0, 8.0]
    assert list(ps.idle_lengths()) == [2.0]
    assert list(ps.busy_lengths()) == [2.0, 2.0]


def test_extract_periods_degenerate():
    assert len(extract_periods(np.zeros(10), 1.0)) == 0
    assert len(extract_periods(np.ones(10), 1.0)) == 0


def test_period_set_requires_interleaving():
    with pytest.raises(ValueError):
        PeriodSet(np.array([1.0, 2.0]), np.array([3.0]))


def test_grid_period_rate(ex1):
    p = simulate_path(ex1, 1e-3, 2000.0, seed=21)
    ps = extract_periods(p.q, p.dt)
    rate = len(ps.d_times) / p.horizon
    # period counts are close to Poisson; 3 SE with sd ~ sqrt(n)
    assert abs(rate - 0.5) <= 3 * math.sqrt(rate / p.horizon) + 0.02


def test_period_transform_estimates(ex1):
    p = simulate_path(ex1, 1e-3, 1000.0, seed=3)
    r = period_transform_estimates(extract_periods(p.q, p.dt), [1.0, 2.0])
    assert r.exchange_residual <= 1e-12
    assert r.typical_busy[0].within(2 / 3, n_se=4, rel=0.05)
    assert r.observed_idle[1].value < r.typical_idle[1].value


def test_period_transform_estimates_too_few():
    from fluidq.errors import SampleSizeError

    with pytest.raises(SampleSizeError):
        period_transform_estimates(extract_periods([0, 1, 0, 1, 0], 1.0), [1.0])


# --- Palm expectations --------------------------------------------------------------------


def test_palm_normalisation(ex1):
    p = simulate_path(ex1, 1e-3, 50.0, seed=1)
    e = palm_local_time_expectation(np.ones(len(p.q)), p)
    assert e.value == pytest.approx(1.0, abs=1e-12)


def test_palm_tail_example1(ex1):
    p = simulate_path(ex1, 1e-3, 3000.0, seed=6)
    e = palm_local_time_expectation(lambda path: path.q > 1.0, p)
    assert e.within(math.exp(-1), n_se=4, rel=0.05)


def test_palm_zero_local_time():
    p = PathGrid(1.0, 3.0, np.ones(3), np.ones(3), np.zeros(3), np.zeros(3))
    with pytest.raises(UndefinedEstimateError):
        palm_local_time_expectation(np.ones(3), p)


def test_write_path_csv(tmp_path, ex1):
    p = simulate_path(ex1, 0.1, 1.0, seed=0)
    f = tmp_path / "path.csv"
    write_path_csv(p, f)
    lines = f.read_text().splitlines()
    assert lines[0] == "t,Y,X,L,Q" and len(lines) == 11


# --- right-continuous inverse -------------------------------------------------------------


def test_inverse_identity():
    t = np.arange(0, 1001) / 1000.0
    for x in (0.0, 0.25, 0.5):
        assert right_cont_inverse(t, t, x) == pytest.approx(x + 1e-3)
    # in the continuum limit the inverse of h(t) = t is the identity


def test_inverse_single_step():
    times, values = [0.0, 1.0], [0.0, 2.0]
    assert right_cont_inverse(times, values, 1.0) == 1.0
    assert right_cont_inverse(times, values, 2.0) == math.inf
    assert right_cont_inverse(times, values, -1.0) == 0.0


def _random_step(rng):
    n = int(rng.integers(1, 12))
    times = np.cumsum(rng.integers(1, 5, size=n)).astype(float)
    # nondecreasing values with ties allowed
    values = np.cumsum(rng.integers(0, 3, size=n)).astype(float)
    return times, values


def _probe_times(rng, times):
    # grid points, midpoints and points outside the recorded range
    mids = (times[:-1] + times[1:]) / 2
    extra = rng.uniform(times[0] - 2, times[-1] + 2, size=3)
    return np.concatenate([times, mids, extra])


def test_invcomp_chain_on_random_step_functions():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        times, values = _random_step(rng)
        hinv = lambda x, left=False: right_cont_inverse(times, values, x, left=left)
        for t in _probe_times(rng, times):
            h_t, h_tm = step_value(times, values, t), step_value(times, values, t, left=True)
            chain = [hinv(h_tm, left=True), hinv(h_t, left=True), t, hinv(h_tm), hinv(h_t)]
            assert all(a <= b for a, b in zip(chain, chain[1:])), (times, values, t, chain)


def test_double_inverse_recovers_function():
    rng = np.random.default_rng(8)
    for _ in range(1000):
        n = int(rng.integers(2, 12))
        times = np.cumsum(rng.integers(1, 5, size=n)).astype(float)
        values = np.cumsum(rng.integers(1, 4, size=n)).astype(float)  # strictly increasing
        # the inverse is itself a step function: times[i+1] on [values[i], values[i+1])
        inv_vals = np.append(times[1:], math.inf)
        for t in np.concatenate([times[:-1], (times[:-1] + times[1:]) / 2]):
            assert right_cont_inverse(values, inv_vals, t) == step_value(times, values, t)

"""Fixed-grid path operations: sampling, reflection, local time, queue, periods.

These are the plain, inspectable building blocks.  Long acceptance runs use
the compiled kernels in :mod:`fluidq.simulator.engine`, which apply the same
recursions with adaptive steps and in-place statistics.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import DomainError, UndefinedEstimateError
from ..levy_model import (
    CompoundPoissonExp,
    InverseBMLocalTime,
    LevyModel,
    NoJumps,
    StableSubordinator,
    classify,
)
from ..transforms import queue_exponents
from .rng import stream


@dataclass(frozen=True)
class PathGrid:
    dt: float
    horizon: float
    y_increments: np.ndarray
    x: np.ndarray
    local_time_increments: np.ndarray
    q: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(1, len(self.x) + 1)


# --- sampling ---------------------------------------------------------------------

def stable_increments(index: float, scale: float, h: float, n: int, g) -> np.ndarray:
    """``n`` draws with ``E exp(-theta S) = exp(-scale h theta^index)`` (Kanter)."""
    u = np.pi * (1.0 - g.random(n))
    e = g.exponential(1.0, n)
    a = np.sin(index * u) / np.sin(u) ** (1.0 / index)
    b = (np.sin((1.0 - index) * u) / e) ** ((1.0 - index) / index)
    return (scale * h) ** (1.0 / index) * a * b


def jump_increments(jumps, h: float, n: int, g) -> np.ndarray:
    if isinstance(jumps, NoJumps):
        return np.zeros(n)
    if isinstance(jumps, CompoundPoissonExp):
        k = g.poisson(jumps.rate * h, n)
        out = np.zeros(n)
        pos = k > 0
        out[pos] = g.gamma(k[pos], 1.0 / jumps.jump_rate)
        return out
    if isinstance(jumps, StableSubordinator):
        return stable_increments(jumps.index, jumps.scale, h, n, g)
    if isinstance(jumps, InverseBMLocalTime):
        lev = math.sqrt(2.0) * jumps.scale * h
        return lev ** 2 / g.standard_normal(n) ** 2
    raise TypeError(jumps)


def n_cells(dt: float, horizon: float) -> int:
    return int(math.ceil(horizon / dt - 1e-9))


def sample_path(model: LevyModel, dt: float, horizon: float, seed: int) -> np.ndarray:
    """Increments of ``Y`` over ``ceil(horizon/dt)`` cells of width ``dt``."""
    if not (dt > 0 and horizon >= dt):
        raise DomainError("need dt > 0 and horizon >= dt")
    n = n_cells(dt, horizon)
    y = np.full(n, model.linear_drift * dt)
    if model.gaussian_sigma > 0:
        g = stream(seed, 0, "gaussian", "grid")
        y += model.gaussian_sigma * math.sqrt(dt) * g.standard_normal(n)
    if model.has_jumps:
        jumps = jump_increments(model.jumps, dt, n, stream(seed, 0, "jumps", "grid"))
        y += -model.orientation * jumps
    return y


# --- reflection -----------------------------------------------------------------

@njit(cache=True)
def _reflect(x0, inc):
    n = inc.shape[0]
    x = np.empty(n)
    reg = np.empty(n)
    v = x0
    for k in range(n):
        w = v + inc[k]
        if w < 0.0:
            reg[k] = -w
            v = 0.0
        else:
            reg[k] = 0.0
            v = w
        x[k] = v
    return x, reg


def reflect(x0: float, increments) -> np.ndarray:
    """Skorokhod reflection at 0 on the grid: ``v_{k+1} = max(v_k + dW_k, 0)``."""
    return reflect_with_regulator(x0, increments)[0]


def reflect_with_regulator(x0: float, increments) -> tuple[np.ndarray, np.ndarray]:
    if x0 < 0:
        raise DomainError("x0 must be nonnegative")
    return _reflect(float(x0), np.asarray(increments, dtype=float))


def reflect_bruteforce(x0: float, increments) -> np.ndarray:
    """``sup_{0<=u<=t} (W_t - W_u) v (x0 + W_t)`` evaluated directly on the grid."""
    w = np.concatenate([[0.0], np.cumsum(increments)])
    out = np.empty(len(increments))
    for k in range(1, len(w)):
        out[k - 1] = max(np.max(w[k] - w[: k + 1]), x0 + w[k])
    return out


# --- local time -------------------------------------------------------------------

def _eps_marks(x, hits, eps, scale, g):
    dl = np.zeros(len(x))
    armed = False
    for k in range(len(x)):
        if hits[k] and armed:
            dl[k] = g.exponential(scale)
            armed = False
        if x[k] >= eps:
            armed = True
    return dl


def local_time_path(model: LevyModel, x_path, y_increments, dt: float, seed: int,
                    x0: float = 0.0, eps: float = 0.05, mark_scale: float | None = None):
    """Per-cell local-time increments at zero for a reflected grid path.

    * spectrally positive, ``sigma > 0``: the reflection regulator;
    * spectrally negative Brownian motion: ``2/sigma^2`` times the regulator;
    * spectrally positive, bounded variation: ``|d_Y| dt 1(x_k = 0)``;
    * spectrally negative, bounded variation: one Exp mark of mean ``1/d_Y`` per visit;
    * otherwise: one Exp mark per completed excursion above ``eps``, with the mark
      mean calibrated on an independent path so that the rate is ``Phi(0)``.
    """
    x = np.asarray(x_path, dtype=float)
    y = np.asarray(y_increments, dtype=float)
    prev = np.concatenate([[x0], x[:-1]])
    reg = np.maximum(x - (prev + y), 0.0)
    hits = x == 0.0
    var = classify(model)
    marks = stream(seed, 0, "marks", "grid")
    if not model.is_negative:
        if model.gaussian_sigma > 0:
            return reg
        return abs(var.drift) * dt * hits.astype(float)
    if not model.has_jumps:
        return 2.0 / model.gaussian_sigma ** 2 * reg
    if var.bounded:
        dl = np.zeros(len(x))
        dl[hits] = marks.exponential(1.0 / var.drift, int(hits.sum()))
        return dl
    if mark_scale is None:
        y2 = sample_path(model, dt, dt * len(x), seed + 1)
        x2 = reflect(0.0, y2)
        rate = _eps_marks(x2, x2 == 0.0, eps, 1.0, stream(seed + 1, 0, "marks", "grid")).sum()
        rate /= dt * len(x)
        if rate <= 0:
            raise DomainError("no eps-excursions in the calibration path")
        mark_scale = queue_exponents(model).mu / rate
    dl = _eps_marks(x, hits, eps, mark_scale, marks)
    realised = dl.sum() / (dt * len(x))
    mu = queue_exponents(model).mu
    warnings.warn(f"eps-excursion local time: rate {realised:.5g} vs {mu:.5g}", stacklevel=2)
    return dl


# --- queue and periods ------------------------------------------------------------

def queue_path(local_time_increments, dt: float, q0: float = 0.0) -> np.ndarray:
    """``q_{k+1} = max(q_k + dL_k - dt, 0)``: reflection of ``L(0, t] - t``."""
    dl = np.asarray(local_time_increments, dtype=float)
    return reflect(q0, dl - dt)


@dataclass(frozen=True)
class PeriodSet:
    """Grid times where ``Q`` reaches zero (``g``) and leaves zero (``d``)."""

    g_times: np.ndarray
    d_times: np.ndarray

    def __post_init__(self):
        # boundaries must alternate
        events = sorted([(t, 0) for t in self.g_times] + [(t, 1) for t in self.d_times])
        kinds = [k for _, k in events]
        if any(a == b for a, b in zip(kinds, kinds[1:])):
            raise ValueError("g and d times must interleave")

    def __len__(self) -> int:
        return len(self.g_times) + len(self.d_times)

    def idle_lengths(self) -> np.ndarray:
        """Complete idle periods ``d(n) - g(n)``."""
        if len(self.g_times) == 0:
            return np.zeros(0)
        d = self.d_times[self.d_times > self.g_times[0]]
        k = min(len(d), len(self.g_times))
        return d[:k] - self.g_times[:k]

    def busy_lengths(self) -> np.ndarray:
        """Complete busy periods ``g(n + 1) - d(n)``."""
        if len(self.d_times) == 0:
            return np.zeros(0)
        g = self.g_times[self.g_times > self.d_times[0]]
        k = min(len(g), len(self.d_times))
        return g[:k] - self.d_times[:k]


def extract_periods(q, dt: float) -> PeriodSet:
    """Boundaries of idle and busy periods of a grid queue path.

    ``q[k]`` is the value at time ``k dt``.  ``d`` is the first positive
    grid point after a zero, ``g`` the first zero after a positive value.
    """
    q = np.asarray(q, dtype=float)
    pos = q > 0
    change = np.flatnonzero(pos[1:] != pos[:-1]) + 1
    d = change[pos[change]] * dt
    g = change[~pos[change]] * dt
    return PeriodSet(np.asarray(g, dtype=float), np.asarray(d, dtype=float))


# --- Palm expectations --------------------------------------------------------------

def palm_local_time_expectation(f, path: PathGrid, n_batches: int = 20, seed: int = 0):
    """``E_L f = E int f(theta_t) L(dt) / E L(0, 1]`` by local-time weighting.

    ``f`` is a per-cell array or a callable taking the :class:`PathGrid`.
    """
    from .estimators import Estimate, jackknife

    values = np.asarray(f(path) if callable(f) else f, dtype=float)
    dl = np.asarray(path.local_time_increments, dtype=float)
    if dl.sum() <= 0:
        raise UndefinedEstimateError("zero accumulated local time")
    nb = max(2, min(n_batches, len(dl)))
    chunks = np.array_split(np.arange(len(dl)), nb)
    num = np.array([np.sum(values[c] * dl[c]) for c in chunks])
    den = np.array([np.sum(dl[c]) for c in chunks])
    v, se = jackknife(lambda a, b: a / b if b > 0 else np.nan, num, den)
    return Estimate(v, 0.0 if not np.isfinite(se) else se, nb, seed)


def simulate_path(model: LevyModel, dt: float, horizon: float, seed: int, q0: float = 0.0,
                  **lt_kwargs) -> PathGrid:
    """Sample, reflect, build local time and the queue on a fixed grid."""
    y = sample_path(model, dt, horizon, seed)
    x = reflect(0.0, y)
    dl = local_time_path(model, x, y, dt, seed, **lt_kwargs)
    q = queue_path(dl, dt, q0)
    return PathGrid(dt, horizon, y, x, dl, q)


def write_path_csv(path: PathGrid, filename) -> None:
    """Columnar dump ``t, Y, X, L, Q`` for debugging."""
    t = path.times
    data = np.column_stack([t, np.cumsum(path.y_increments), path.x,
                            np.cumsum(path.local_time_increments), path.q])
    np.savetxt(filename, data, delimiter=",", header="t,Y,X,L,Q", comments="", fmt="%.17g")


# --- right-continuous inverse ----------------------------------------------------------

def right_cont_inverse(times, values, x: float, left: bool = False) -> float:
    """``inf{t : h(t) > x}`` for the right-continuous step function
    ``h(t) = values[i]`` on ``[times[i], times[i+1])`` (``-inf`` before
    ``times[0]``, ``values[-1]`` after the last time).

    ``left=True`` gives the left limit ``h^{-1}(x-) = inf{t : h(t) >= x}``.
    Returns ``+inf`` if ``h`` never exceeds ``x``.
    """
    if left and x == -math.inf:
        return -math.inf  # every t has h(t) >= -inf
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    idx = np.searchsorted(values, x, side="left" if left else "right")
    if idx >= len(values):
        return math.inf
    return float(times[idx])


def step_value(times, values, t: float, left: bool = False) -> float:
    """``h(t)`` (or ``h(t-)``) for the step function of :func:`right_cont_inverse`."""
    idx = np.searchsorted(np.asarray(times, dtype=float), t, side="left" if left else "right") - 1
    return -math.inf if idx < 0 else float(values[idx])


# --- period transforms from a single grid path ------------------------------------------

@dataclass(frozen=True)
class PeriodTransformEstimates:
    alphas: tuple[float, ...]
    typical_idle: tuple
    typical_busy: tuple
    observed_idle: tuple
    observed_busy: tuple
    exchange_residual: float


def period_transform_estimates(periods: PeriodSet, alphas, n_batches: int = 20,
                               seed: int = 0, min_periods: int = 200) -> PeriodTransformEstimates:
    """Typical (per-period) and observed (length-biased) transforms at each ``alpha``.

    Observed transforms use the exact time average over each period:
    ``int_g^d exp(-alpha (d - t)) dt / (d - g) = (1 - exp(-alpha l)) / (alpha l)``.
    ``exchange_residual`` is the largest gap between the observed idle transform
    and ``(1 - typical) / (alpha * mean typical length)``, which the Palm
    exchange formula makes zero.
    """
    from ..errors import SampleSizeError
    from .estimators import Estimate, jackknife

    idle, busy = periods.idle_lengths(), periods.busy_lengths()
    if min(len(idle), len(busy)) < min_periods:
        raise SampleSizeError(f"need at least {min_periods} complete periods of each kind")

    def batches(lengths, fn):
        chunks = np.array_split(lengths, max(2, min(n_batches, len(lengths))))
        return (np.array([fn(c).sum() for c in chunks]),
                np.array([len(c) for c in chunks], dtype=float),
                np.array([c.sum() for c in chunks]))

    def est(v, se, n):
        return Estimate(v, se, n, seed)

    out = {"typical_idle": [], "typical_busy": [], "observed_idle": [], "observed_busy": []}
    residual = 0.0
    for a in alphas:
        for kind, lengths in (("idle", idle), ("busy", busy)):
            s, n, tot = batches(lengths, lambda l: np.exp(-a * l))
            out[f"typical_{kind}"].append(est(*jackknife(lambda x, y: x / y, s, n), len(s)))
            o, _, tot = batches(lengths, lambda l: (1.0 - np.exp(-a * l)) / a)
            out[f"observed_{kind}"].append(est(*jackknife(lambda x, y: x / y, o, tot), len(o)))
        # (1 - E_g e^{-a l}) / (a E_g l) equals the observed transform
        typ = np.exp(-a * idle).mean()
        residual = max(residual, abs((1 - typ) / (a * idle.mean())
                                     - out["observed_idle"][-1].value))
    return PeriodTransformEstimates(tuple(alphas), *(tuple(out[k]) for k in
                                    ("typical_idle", "typical_busy", "observed_idle",
                                     "observed_busy")), residual)

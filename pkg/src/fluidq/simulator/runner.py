"""Replication orchestration: regime dispatch, calibration and merging."""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from ..levy_model import (
    CompoundPoissonExp,
    InverseBMLocalTime,
    LevyModel,
    NoJumps,
    StableSubordinator,
    laplace_exponent_derivative,
    require_valid,
)
from ..transforms import queue_exponents
from . import engine
from .rng import streams


class ApproximationWarning(UserWarning):
    """Local time is only approximated (calibrated) for this model."""


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 1e-3
    horizon: float = 1e4
    n_reps: int = 16
    seed: int = 0
    burn_in: float | None = None
    n_segments: int = 8
    n_levels: int = 8
    refine_k: float = 5.0
    inspect_every: float = 10.0
    eps: float = 0.05
    calibration_horizon: float | None = None
    a_grid: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0)
    thetas: tuple[float, ...] = (0.5, 1.0, 2.0)
    dg_pairs: tuple[tuple[float, float], ...] = ((1.0, 0.0), (2.0, 1.0))

    def __post_init__(self):
        if not (self.dt > 0 and self.horizon >= self.dt):
            raise DomainError("need dt > 0 and horizon >= dt")
        if self.n_reps < 2:
            raise DomainError("n_reps must be at least 2")
        if self.n_segments < 1:
            raise DomainError("n_segments must be positive")
        if any(t <= 0 for t in self.thetas):
            raise DomainError("thetas must be positive")
        if any(a == b for a, b in self.dg_pairs):
            raise DomainError("dg_pairs need distinct arguments")


@dataclass(frozen=True)
class Regime:
    """How a model is simulated and how its local time is built."""

    name: str
    exact: bool
    lt_mode: int
    lt_scale: float
    jump_kind: int
    jp1: float = 0.0
    jp2: float = 0.0


def default_burn_in(model: LevyModel) -> float:
    """``50 max(1/|psi'(0+)|, 1/theta*)`` (an infinite slope contributes 0)."""
    slope = abs(laplace_exponent_derivative(model, 0.0))
    ts = queue_exponents(model).theta_star
    return 50.0 * max(0.0 if math.isinf(slope) else 1.0 / slope, 1.0 / ts)


def _jump_params(jumps):
    if isinstance(jumps, NoJumps):
        return engine.J_NONE, 0.0, 0.0
    if isinstance(jumps, CompoundPoissonExp):
        return engine.J_CPP, jumps.rate, jumps.jump_rate
    if isinstance(jumps, StableSubordinator):
        return engine.J_STABLE, jumps.index, jumps.scale
    if isinstance(jumps, InverseBMLocalTime):
        return engine.J_INVBM, jumps.scale, 0.0
    raise TypeError(jumps)


def regime_for(model: LevyModel) -> Regime:
    kind, p1, p2 = _jump_params(model.jumps)
    sigma = model.gaussian_sigma
    if not model.is_negative:
        if sigma > 0:
            return Regime("regulator", True, engine.LT_REGULATOR, 1.0, kind, p1, p2)
        if kind != engine.J_CPP:
            raise DomainError("bounded-variation positive inputs need compound Poisson jumps")
        return Regime("event", True, -1, abs(model.linear_drift), kind, p1, p2)
    if sigma > 0 and kind == engine.J_NONE:
        # reflected Brownian motion: local time is 2/sigma^2 times the regulator
        return Regime("regulator", True, engine.LT_REGULATOR, 2.0 / sigma ** 2, kind)
    if sigma == 0:
        # marks have mean 1/d_Y so that E L_t = t Phi(0)
        return Regime("visit-marks", True, engine.LT_VISIT_MARKS, 1.0 / model.linear_drift,
                      kind, p1, p2)
    return Regime("calibrated-approximate", False, engine.LT_EPS_MARKS, float("nan"),
                  kind, p1, p2)


@dataclass
class RawRun:
    """Per-batch accumulators of one replication (rows are segments)."""

    scalars: np.ndarray
    tail: np.ndarray
    palm: np.ndarray
    d: np.ndarray
    dg: np.ndarray
    idle: np.ndarray
    busy: np.ndarray
    inspections: np.ndarray


def _threads() -> int:
    env = os.environ.get("FLUIDQ_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _arrays(cfg: SimulationConfig):
    a = np.asarray(cfg.a_grid, dtype=float)
    th = np.asarray(cfg.thetas, dtype=float)
    pa = np.asarray([p[0] for p in cfg.dg_pairs], dtype=float)
    pb = np.asarray([p[1] for p in cfg.dg_pairs], dtype=float)
    return a, th, pa, pb


def _one_rep(model, regime, lt_scale, cfg, burn_in, horizon, rep, purpose):
    a, th, pa, pb = _arrays(cfg)
    g = streams(cfg.seed, rep, purpose)
    if regime.name == "event":
        out = engine.event_kernel(
            abs(model.linear_drift), regime.jp1, regime.jp2,
            burn_in, horizon, cfg.n_segments, cfg.inspect_every,
            a, th, pa, pb, g["jumps"])
    else:
        out = engine.grid_kernel(
            model.linear_drift, model.gaussian_sigma, regime.jump_kind, regime.jp1,
            regime.jp2, not model.is_negative,
            regime.lt_mode, lt_scale, cfg.eps,
            cfg.dt, cfg.n_levels, cfg.refine_k,
            burn_in, horizon, cfg.n_segments, cfg.inspect_every,
            a, th, pa, pb,
            g["gaussian"], g["uniform"], g["jumps"], g["marks"])
    return RawRun(*out)


def _run_reps(model, regime, lt_scale, cfg, burn_in, horizon, purpose):
    task = lambda rep: _one_rep(model, regime, lt_scale, cfg, burn_in, horizon, rep, purpose)
    n = min(_threads(), cfg.n_reps)
    if n == 1:
        return [task(r) for r in range(cfg.n_reps)]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(task, range(cfg.n_reps)))


def calibrate_mark_scale(model: LevyModel, cfg: SimulationConfig, burn_in: float) -> float:
    """Mark mean making the excursion-mark local time have rate ``Phi(0)``.

    Runs an independent pre-pass with unit marks to estimate the rate of
    completed excursions above ``eps``.
    """
    regime = regime_for(model)
    horizon = cfg.calibration_horizon or cfg.horizon / 4.0
    runs = _run_reps(model, regime, 1.0, cfg, burn_in, horizon, "calibration")
    total_l = sum(r.scalars[:, engine.S_L].sum() for r in runs)
    total_t = sum(r.scalars[:, engine.S_TIME].sum() for r in runs)
    rate = total_l / total_t
    if rate <= 0:
        raise DomainError("no completed eps-excursions in the calibration pass; lower eps")
    return queue_exponents(model).mu / rate


@dataclass
class SimulationResult:
    model: LevyModel
    config: SimulationConfig
    regime: Regime
    burn_in: float
    mark_scale: float
    runs: list[RawRun] = field(repr=False)

    # pooled views, batches ordered (rep, segment)
    def stack(self, name: str) -> np.ndarray:
        return np.concatenate([getattr(r, name) for r in self.runs], axis=0)

    def periods(self, kind: str) -> tuple[np.ndarray, np.ndarray]:
        """Lengths and global batch ids of completed idle or busy periods."""
        lengths, batches = [], []
        for i, r in enumerate(self.runs):
            arr = getattr(r, kind)
            lengths.append(arr[:, 0])
            batches.append(arr[:, 1].astype(int) + i * self.config.n_segments)
        return np.concatenate(lengths), np.concatenate(batches)

    @property
    def n_batches(self) -> int:
        return len(self.runs) * self.config.n_segments


def simulate(model: LevyModel, cfg: SimulationConfig) -> SimulationResult:
    """Run ``cfg.n_reps`` stationary replications of the queue driven by ``model``."""
    require_valid(model)
    regime = regime_for(model)
    burn_in = cfg.burn_in if cfg.burn_in is not None else default_burn_in(model)
    scale = regime.lt_scale
    if regime.lt_mode == engine.LT_EPS_MARKS:
        scale = calibrate_mark_scale(model, cfg, burn_in)
    runs = _run_reps(model, regime, scale, cfg, burn_in, cfg.horizon, "main")
    result = SimulationResult(model, cfg, regime, burn_in, scale, runs)
    if not regime.exact:
        from .estimators import local_time_rate

        est = local_time_rate(result)
        mu = queue_exponents(model).mu
        warnings.warn(
            f"{regime.name} local time: rate {est.value:.5g} vs {mu:.5g} "
            f"(residual {abs(est.value / mu - 1):.3%})",
            ApproximationWarning,
            stacklevel=2,
        )
    return result

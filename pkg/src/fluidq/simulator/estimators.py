"""Monte Carlo estimators over a :class:`SimulationResult`.

Every estimator is a smooth function of per-batch sums (a batch is one
segment of one replication); standard errors come from the delete-one-batch
jackknife, which reduces to batch means for plain averages and handles
ratio estimators without special cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import SampleSizeError, UndefinedEstimateError
from ..transforms import queue_exponents
from . import engine
from .runner import SimulationResult

MIN_PERIODS = 200


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    n_reps: int
    seed: int

    def z(self, target: float) -> float:
        return (self.value - target) / self.std_error if self.std_error > 0 else (
            0.0 if self.value == target else math.inf)

    def within(self, target: float, n_se: float = 3.0, rel: float = 0.0) -> bool:
        err = abs(self.value - target)
        return err <= n_se * self.std_error or err <= rel * abs(target)

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error,
                "n_reps": self.n_reps, "seed": self.seed}


def jackknife(fn, *batch_arrays) -> tuple[float, float]:
    """Value and jackknife SE of ``fn(*sums)`` where sums run over the first axis."""
    totals = [a.sum(axis=0) for a in batch_arrays]
    value = fn(*totals)
    n = batch_arrays[0].shape[0]
    loo = np.array([fn(*[t - a[i] for t, a in zip(totals, batch_arrays)]) for i in range(n)])
    se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return float(value), se


def _est(res: SimulationResult, fn, *arrays) -> Estimate:
    v, se = jackknife(fn, *arrays)
    return Estimate(v, se, res.config.n_reps, res.config.seed)


def _scalar(res, col):
    return res.stack("scalars")[:, col]


def _col(values, grid, x, what):
    idx = np.flatnonzero(np.isclose(np.asarray(grid), x))
    if idx.size == 0:
        raise KeyError(f"{what} {x} was not accumulated; add it to the config grid")
    return values[:, idx[0]]


# --- time-stationary and Palm quantities ------------------------------------------

def local_time_rate(res: SimulationResult) -> Estimate:
    """``L(0, T] / T``."""
    return _est(res, lambda l, t: l / t, _scalar(res, engine.S_L), _scalar(res, engine.S_TIME))


def tail_probability(res: SimulationResult, a: float) -> Estimate:
    """Time-stationary ``P(Q_0 > a)``."""
    tail = _col(res.stack("tail"), res.config.a_grid, a, "level")
    return _est(res, lambda x, t: x / t, tail, _scalar(res, engine.S_TIME))


def palm_tail(res: SimulationResult, a: float) -> Estimate:
    """``P_L(Q_0 > a) = E int 1(Q_t > a) L(dt) / E L(0, T]``."""
    palm = _col(res.stack("palm"), res.config.a_grid, a, "level")
    l = _scalar(res, engine.S_L)
    if l.sum() <= 0:
        raise UndefinedEstimateError("no local time accumulated")
    return _est(res, lambda p, s: p / s, palm, l)


def little_ratio(res: SimulationResult, a: float) -> Estimate:
    """Time-stationary tail divided by the Palm tail; equals ``mu``."""
    tail = _col(res.stack("tail"), res.config.a_grid, a, "level")
    palm = _col(res.stack("palm"), res.config.a_grid, a, "level")
    return _est(res, lambda x, t, p, l: (x / t) / (p / l),
                tail, _scalar(res, engine.S_TIME), palm, _scalar(res, engine.S_L))


def atom_of_X(res: SimulationResult) -> Estimate:
    """Fraction of time ``X = 0`` (nonzero only for bounded-variation positive inputs)."""
    return _est(res, lambda z, t: z / t, _scalar(res, engine.S_ZERO_TIME),
                _scalar(res, engine.S_TIME))


def D_transform(res: SimulationResult, theta: float) -> Estimate:
    """``E exp(-theta D)`` from time integrals over excursions of ``X``."""
    d = _col(res.stack("d"), res.config.thetas, theta, "theta")
    return _est(res, lambda x, t: x / t, d, _scalar(res, engine.S_TIME))


def DG_transform(res: SimulationResult, alpha: float, beta: float) -> Estimate:
    """``E exp(-alpha D + beta G)``."""
    pairs = res.config.dg_pairs
    idx = [i for i, p in enumerate(pairs) if np.isclose(p[0], alpha) and np.isclose(p[1], beta)]
    if not idx:
        raise KeyError(f"pair {(alpha, beta)} was not accumulated")
    dg = res.stack("dg")[:, idx[0]]
    return _est(res, lambda x, t: x / t, dg, _scalar(res, engine.S_TIME))


# --- periods ------------------------------------------------------------------------

def _per_batch(res, kind, fn):
    """Per-batch sums of ``fn(lengths)`` and period counts."""
    lengths, batch = res.periods(kind)
    if lengths.size < MIN_PERIODS:
        raise SampleSizeError(f"only {lengths.size} complete {kind} periods (< {MIN_PERIODS})")
    n = res.n_batches
    return (np.bincount(batch, weights=fn(lengths), minlength=n),
            np.bincount(batch, minlength=n).astype(float))


def period_rate(res: SimulationResult) -> Estimate:
    """Rate of busy-period beginnings (equals the rate of idle-period beginnings)."""
    return _est(res, lambda n, t: n / t, _scalar(res, engine.S_N_BUSY_START),
                _scalar(res, engine.S_TIME))


def typical_lt(res: SimulationResult, kind: str, alpha: float) -> Estimate:
    """Palm transform ``E exp(-alpha length)`` of a typical ``kind`` period."""
    s, n = _per_batch(res, kind, lambda l: np.exp(-alpha * l))
    return _est(res, lambda a, b: a / b, s, n)


def typical_mean(res: SimulationResult, kind: str) -> Estimate:
    s, n = _per_batch(res, kind, lambda l: l)
    return _est(res, lambda a, b: a / b, s, n)


def observed_lt(res: SimulationResult, kind: str, alpha: float, beta: float = 0.0) -> Estimate:
    """Transform of the period straddling a stationary time point.

    For an idle period of length ``l`` containing time ``t``, integrating
    ``exp(-alpha (d - t) - beta (t - g))`` over ``t`` gives
    ``(exp(-beta l) - exp(-alpha l)) / (alpha - beta)``; dividing the sum by the
    total time spent in such periods is the exact time-average estimator.
    For busy periods the roles are ``(alpha, beta) -> (g(1), -d(0))``.
    """
    if alpha == beta:
        raise ValueError("alpha and beta must differ")
    f = lambda l: (np.exp(-beta * l) - np.exp(-alpha * l)) / (alpha - beta)
    s, _ = _per_batch(res, kind, f)
    tot, _ = _per_batch(res, kind, lambda l: l)
    return _est(res, lambda a, b: a / b, s, tot)


def observed_mean(res: SimulationResult, kind: str) -> Estimate:
    """Mean full length of the period straddling a stationary time point."""
    sq, _ = _per_batch(res, kind, lambda l: l * l)
    tot, _ = _per_batch(res, kind, lambda l: l)
    return _est(res, lambda a, b: a / b, sq, tot)


def exchange_residual(res: SimulationResult, kind: str, alpha: float, beta: float) -> float:
    """``observed(alpha, beta) - [alpha F(alpha) - beta F(beta)]/(alpha - beta)``
    with ``F`` the single-argument observed transform (Palm exchange identity)."""
    joint = observed_lt(res, kind, alpha, beta).value
    F = lambda a: observed_lt(res, kind, a, 0.0).value if a > 0 else 1.0
    return joint - (alpha * F(alpha) - beta * F(beta)) / (alpha - beta)


# --- Lemma-level structure at inspection times -----------------------------------------

@dataclass(frozen=True)
class IndependenceReport:
    n: int
    ks_statistic: float
    ks_critical_1pct: float
    ks_pass: bool
    corr_qg_g: float
    corr_qg_d: float
    corr_halfwidth_99: float
    corr_pass: bool
    idle_event_agreement: float
    d0_D_coincidence: float
    n_idle_inspections: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def independence_checks(res: SimulationResult, n_max: int | None = None,
                        tol: float | None = None) -> IndependenceReport:
    """Checks at sparse inspection times ``t``:

    * ``Q_G`` (queue at the last zero of ``X``) against Exp(theta*) by KS;
    * correlations of ``Q_G`` with ``G`` and with ``D``;
    * agreement of ``{Q_t = 0}`` with ``{Q_G + G <= 0}``;
    * on ``{Q_t = 0}``, coincidence of the end of the idle period with ``D``.
    """
    ins = res.stack("inspections")
    ins = ins[np.isfinite(ins[:, engine.I_D])]
    if n_max is not None:
        ins = ins[:n_max]
    n = ins.shape[0]
    if n < 30:
        raise SampleSizeError(f"only {n} inspection records")
    tol = res.config.dt if tol is None else tol
    theta_star = queue_exponents(res.model).theta_star

    qg, g, d = ins[:, engine.I_QG], ins[:, engine.I_G], ins[:, engine.I_D]
    ks = stats.kstest(qg, "expon", args=(0, 1.0 / theta_star)).statistic
    crit = 1.63 / math.sqrt(n)

    def corr(a, b):
        if np.std(a) == 0 or np.std(b) == 0:
            return 0.0
        return float(np.corrcoef(a, b)[0, 1])

    r1, r2 = corr(qg, g), corr(qg, d)
    half = 2.576 / math.sqrt(n)
    idle_now = ins[:, engine.I_Q] == 0.0
    lemma = (qg + g) <= tol
    agreement = float(np.mean(idle_now == lemma))
    d0 = ins[idle_now, engine.I_D0]
    dd = ins[idle_now, engine.I_D]
    ok = np.isfinite(d0)
    coincide = float(np.mean(np.abs(d0[ok] - dd[ok]) <= tol)) if ok.any() else float("nan")
    return IndependenceReport(
        n=n, ks_statistic=float(ks), ks_critical_1pct=crit, ks_pass=bool(ks < crit),
        corr_qg_g=r1, corr_qg_d=r2, corr_halfwidth_99=half,
        corr_pass=bool(abs(r1) < half and abs(r2) < half),
        idle_event_agreement=agreement, d0_D_coincidence=coincide,
        n_idle_inspections=int(ok.sum()),
    )


def correlation_ci(a: np.ndarray, b: np.ndarray, level: float = 0.99) -> tuple[float, float, float]:
    """Sample correlation with a Fisher-z confidence interval."""
    n = len(a)
    r = float(np.corrcoef(a, b)[0, 1])
    z = math.atanh(max(min(r, 1 - 1e-15), -1 + 1e-15))
    half = stats.norm.ppf(0.5 + level / 2) / math.sqrt(n - 3)
    return r, math.tanh(z - half), math.tanh(z + half)


# --- first passage ----------------------------------------------------------------------

def first_passage_lt(model, q: float, level: float, n_paths: int = 10**6, seed: int = 0,
                     t_max: float | None = None) -> Estimate:
    """Monte Carlo ``E exp(-q tau_{-level}^-)`` for a compound-Poisson model.

    The model is taken in its spectrally negative orientation
    ``Z_t = d t - CPP_t``; paths are simulated jump to jump, so the only
    error is truncation at ``t_max`` (default: ``exp(-q t_max) < 1e-16``).
    """
    from ..levy_model import CompoundPoissonExp
    from .rng import stream

    m = model.oriented()
    if not isinstance(m.jumps, CompoundPoissonExp) or m.gaussian_sigma > 0:
        raise TypeError("first_passage_lt needs a pure compound-Poisson model")
    if not (q > 0 and level >= 0):
        raise ValueError("need q > 0 and level >= 0")
    if t_max is None:
        t_max = 37.0 / q
    g = stream(seed, 0, "jumps", "first_passage")
    samples = engine.cpp_first_passage_kernel(m.linear_drift, m.jumps.rate, m.jumps.jump_rate,
                                              q, level, t_max, n_paths, g)
    return Estimate(float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(n_paths)),
                    n_paths, seed)

"""Closed-form performance quantities of the local-time fluid queue.

``Q`` is the reflection of ``L(0, t] - t`` where ``L`` is the local time at 0
of the stationary reflected process ``X``.  Idle periods are maximal
intervals with ``Q = 0``; ``g(n) < d(n) < g(n + 1)`` enumerate their
beginnings and ends with ``g(0) <= 0 < g(1)``.  ``D`` (``G``) is the first
zero of ``X`` after (last zero before) time 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import ConsistencyError, DegenerateArgumentError, DomainError
from .levy_model import (
    LevyModel,
    classify,
    laplace_exponent,
    laplace_exponent_derivative,
    require_valid,
)
from .transforms import (
    QueueExponents,
    phi_lambda,
    phi_Y,
    phi_Y_derivative,
    psi_lambda,
    queue_exponents,
)

# Below this distance from a removable singularity the analytic limit is used.
_SINGULAR_EPS = 1e-9


def _nonneg(*args):
    for a in args:
        if not a >= 0:
            raise DomainError("transform arguments must be nonnegative")


def _distinct(alpha, beta):
    if alpha == beta:
        raise DegenerateArgumentError(
            "alpha == beta: the two-argument transform is only defined for distinct "
            "arguments; perturb one of them by about 1e-6")


def _is_bv_positive(model: LevyModel) -> bool:
    return not model.is_negative and classify(model).bounded


# --- stationary laws ----------------------------------------------------------------

@dataclass(frozen=True)
class StationaryLaw:
    atom_at_zero: float
    decay_rate: float
    kind: str  # "QueueLaw" or "BackgroundLaw"

    def tail(self, a: float) -> float:
        """``P(V > a)`` for ``a >= 0`` (``a = 0`` means ``P(V > 0)``)."""
        return (1.0 - self.atom_at_zero) * math.exp(-self.decay_rate * a)


def stationary_X_lt(model: LevyModel, beta: float) -> float:
    """``E exp(-beta X_0)`` for the stationary reflected input."""
    require_valid(model)
    _nonneg(beta)
    if beta == 0:
        return 1.0
    if model.is_negative:
        phi0 = phi_Y(model, 0.0)
        return phi0 / (beta + phi0)
    if math.isinf(beta):
        return stationary_X_atom(model)
    return laplace_exponent_derivative(model, 0.0) * beta / laplace_exponent(model, beta)


def stationary_X_atom(model: LevyModel) -> float:
    """``P(X_0 = 0)``: zero unless ``Y`` is spectrally positive of bounded variation.

    Then ``beta / psi(beta) -> 1 / |d_Y|`` so the atom is ``psi'(0+) / |d_Y|``.
    """
    require_valid(model)
    if not _is_bv_positive(model):
        return 0.0
    return laplace_exponent_derivative(model, 0.0) / abs(classify(model).drift)


def stationary_Q_law(model: LevyModel) -> StationaryLaw:
    """``P(Q_0 > a) = mu exp(-theta* a)``."""
    ex = queue_exponents(model)
    return StationaryLaw(1.0 - ex.mu, ex.theta_star, "QueueLaw")


def palm_Q_tail(model: LevyModel, a: float) -> float:
    """``P_0(Q_0 > a) = exp(-theta* a)``, the queue seen from a local-time point."""
    return math.exp(-queue_exponents(model).theta_star * a)


def inverse_local_time_lt(model: LevyModel, q: float, x: float) -> float:
    """``E_0 exp(-q L^{-1}_x)``."""
    require_valid(model)
    _nonneg(q, x)
    if q == 0 or x == 0:
        return 1.0
    if model.is_negative:
        return math.exp(-x * q / phi_Y(model, q))
    return math.exp(-x * phi_Y(model, q))


# --- first hit of zero -----------------------------------------------------------

def D_lt(model: LevyModel, theta: float) -> float:
    """``E exp(-theta D)`` with ``D`` the first zero of the stationary ``X`` after 0."""
    require_valid(model)
    _nonneg(theta)
    if theta == 0:
        return 1.0
    if model.is_negative:
        return phi_Y(model, 0.0) / phi_Y(model, theta)
    return laplace_exponent_derivative(model, 0.0) * phi_Y(model, theta) / theta


def D_lt_derivative(model: LevyModel, theta: float) -> float:
    if not theta > 0:
        raise DomainError("D_lt_derivative requires theta > 0")
    phi, dphi = phi_Y(model, theta), phi_Y_derivative(model, theta)
    if model.is_negative:
        return -phi_Y(model, 0.0) * dphi / phi ** 2
    return laplace_exponent_derivative(model, 0.0) * (dphi * theta - phi) / theta ** 2


def DG_joint_lt(model: LevyModel, alpha: float, beta: float) -> float:
    """``E exp(-alpha D + beta G)``."""
    require_valid(model)
    _nonneg(alpha, beta)
    _distinct(alpha, beta)
    if model.is_negative:
        phi0 = phi_Y(model, 0.0)
        r = lambda t: t / phi_Y(model, t)
        return phi0 / (alpha - beta) * (r(alpha) - r(beta))
    mu = laplace_exponent_derivative(model, 0.0)
    return mu * (phi_Y(model, alpha) - phi_Y(model, beta)) / (alpha - beta)


# --- observed idle period -----------------------------------------------------------

def _idle_kernel(model: LevyModel, ex: QueueExponents, t: float) -> float:
    """``t`` times the bracketed single-argument term of the observed idle transform.

    Negative: ``t/(t - psi(1)) (Phi(t) - 1)/Phi(t)``;
    positive: ``(t - Phi(t))/(t - theta*)``; the removable singularity at
    ``t = theta*`` is filled with the inverse-function derivative.
    """
    if t == 0:
        return 0.0
    ts = ex.theta_star
    near = abs(t - ts) <= _SINGULAR_EPS * max(1.0, ts)
    phi = phi_Y(model, t)
    if model.is_negative:
        ratio = phi_Y_derivative(model, ts) if near else (phi - 1.0) / (t - ts)
        return t * ratio / phi
    return (1.0 - phi_Y_derivative(model, ts)) if near else (t - phi) / (t - ts)


def observed_idle_lt(model: LevyModel, alpha: float, beta: float) -> float:
    """``E[exp(-alpha d(0) + beta g(0)) | Q_0 = 0]``."""
    require_valid(model)
    _nonneg(alpha, beta)
    if alpha == 0 and beta == 0:
        return 1.0
    _distinct(alpha, beta)
    ex = queue_exponents(model)
    k = lambda t: _idle_kernel(model, ex, t)
    # One prefactor serves both orientations once mu and theta* are oriented.
    pre = ex.mu / (1.0 - ex.mu) * ex.theta_star / (alpha - beta)
    return pre * (k(alpha) - k(beta))


def observed_idle_lt_assembled(model: LevyModel, alpha: float, beta: float) -> float:
    """Same quantity built from ``P(Q_0 = 0)`` and the law of ``D`` only.

    Independent second route used to check :func:`observed_idle_lt`.
    """
    require_valid(model)
    _nonneg(alpha, beta)
    if alpha == 0 and beta == 0:
        return 1.0
    _distinct(alpha, beta)
    ex = queue_exponents(model)
    ts = ex.theta_star
    d_ts = D_lt(model, ts)

    def term(t):
        if t == 0:
            return 0.0
        if abs(t - ts) <= _SINGULAR_EPS * max(1.0, ts):
            return -ts * D_lt_derivative(model, ts)
        return t / (t - ts) * (d_ts - D_lt(model, t))

    return ts / ((1.0 - ex.mu) * (alpha - beta)) * (term(alpha) - term(beta))


# --- observed busy period ---------------------------------------------------------------

def g1_conditional_lt(model: LevyModel, alpha: float) -> float:
    """``E[exp(-alpha g(1)) | Q_0 > 0]``: residual busy time seen at a busy instant."""
    _nonneg(alpha)
    return queue_exponents(model).theta_star / phi_lambda(model, alpha)


def observed_busy_lt(model: LevyModel, alpha: float, beta: float) -> float:
    """``E[exp(-alpha g(1) + beta d(0)) | Q_0 > 0]``."""
    if not (alpha > 0 and beta > 0):
        raise DomainError("observed_busy_lt requires alpha, beta > 0")
    _distinct(alpha, beta)
    ts = queue_exponents(model).theta_star
    r = lambda t: t / phi_lambda(model, t)
    return ts / (alpha - beta) * (r(alpha) - r(beta))


def H_q(model: LevyModel, q: float, theta: float) -> float:
    """``(psi_Lambda(theta) - q)^{-1} (psi_Lambda(theta)/theta - q/Phi_Lambda(q))``."""
    _nonneg(q)
    bound = phi_lambda(model, q)
    if not theta > bound:
        raise DomainError(f"H_q requires theta > Phi_Lambda(q) = {bound}")
    pl = psi_lambda(model, theta)
    return (pl / theta - q / bound) / (pl - q)


# --- typical periods ---------------------------------------------------------------------

@dataclass(frozen=True)
class TypicalPeriod:
    """Rate of period starts and the Palm Laplace transform of the period length."""

    rate: float
    lt: Callable[[float], float]
    case: str


def typical_idle(model: LevyModel) -> TypicalPeriod:
    """Typical idle period under the Palm measure of idle-period beginnings.

    For spectrally positive ``Y`` the transform is
    ``1 - (alpha - Phi(alpha)) / ((alpha - theta*) c)`` with ``c = 1`` for
    unbounded variation and ``c = 1 - 1/|d_Y|`` for bounded variation, and
    the rate is ``mu theta* c``.
    """
    ex = queue_exponents(model)
    if model.is_negative:
        psi1 = ex.theta_star

        def lt(alpha):
            _nonneg(alpha)
            if alpha == 0:
                return 1.0
            return 1.0 - _idle_kernel(model, ex, alpha)

        return TypicalPeriod(ex.mu * psi1, lt, "negative")

    c = _bv_factor(model)
    case = "positive-bounded-variation" if c != 1.0 else "positive-unbounded-variation"

    def lt(alpha):
        _nonneg(alpha)
        if alpha == 0:
            return 1.0
        return 1.0 - _idle_kernel(model, ex, alpha) / c

    return TypicalPeriod(ex.mu * ex.theta_star * c, lt, case)


def _bv_factor(model: LevyModel) -> float:
    """``1 - 1/|d_Y|`` for bounded-variation positive inputs, else 1."""
    return 1.0 - 1.0 / abs(classify(model).drift) if _is_bv_positive(model) else 1.0


def typical_busy(model: LevyModel) -> TypicalPeriod:
    """Typical busy period: rate ``mu theta* c``, transform ``1 - alpha/(c Phi_Lambda(alpha))``.

    ``c`` is the factor of :func:`typical_idle`; it is 1 except for
    bounded-variation positive inputs, where busy periods start only at the
    instants ``X`` leaves zero and the Palm normalization changes accordingly.
    """
    ex = queue_exponents(model)
    c = _bv_factor(model)

    def lt(alpha):
        _nonneg(alpha)
        if alpha == 0:
            return 1.0
        return 1.0 - alpha / (c * phi_lambda(model, alpha))

    case = "positive-bounded-variation" if c != 1.0 else "busy"
    return TypicalPeriod(ex.mu * ex.theta_star * c, lt, case)


@dataclass(frozen=True)
class MeanPeriods:
    mean_idle: float
    mean_busy: float
    rate: float
    rate_busy_formula: float
    rates_agree: bool


def mean_periods(model: LevyModel, rtol: float = 1e-10) -> MeanPeriods:
    """Mean typical idle and busy durations ``((1 - mu)/lambda, mu/lambda)``.

    ``rate`` is the common rate of period starts.  ``rate_busy_formula`` is
    the plain ``mu theta*`` expression, which differs from ``rate`` by the
    factor ``1 - 1/|d_Y|`` for bounded-variation positive inputs; that case is
    reported through ``rates_agree`` instead of raised.
    """
    ex = queue_exponents(model)
    lam = typical_idle(model).rate
    if abs(lam - typical_busy(model).rate) > rtol * lam:
        raise ConsistencyError(f"idle rate {lam} and busy rate {typical_busy(model).rate} disagree")
    lam_plain = ex.mu * ex.theta_star
    agree = abs(lam - lam_plain) <= rtol * max(lam, lam_plain)
    if not agree and not _is_bv_positive(model):
        raise ConsistencyError(f"idle rate {lam} and mu theta* = {lam_plain} disagree")
    return MeanPeriods((1.0 - ex.mu) / lam, ex.mu / lam, lam, lam_plain, agree)


# --- inspection paradox --------------------------------------------------------------------

def _richardson_forward(f, h, levels=4):
    """Right derivative at 0 by forward differences with Richardson extrapolation.

    Returns ``(estimate, error_indicator)``.
    """
    f0 = f(0.0)
    table = [[(f(h / 2 ** i) - f0) / (h / 2 ** i)] for i in range(levels)]
    for j in range(1, levels):
        for i in range(j, levels):
            table[i].append((2 ** j * table[i][j - 1] - table[i - 1][j - 1]) / (2 ** j - 1))
    best = table[-1][-1]
    return best, abs(best - table[-2][-1])


@dataclass(frozen=True)
class InspectionReport:
    lhs: float
    rhs: float
    holds: bool
    typical_idle_mean: float
    observed_idle_mean: float
    means_hold: bool
    nearly_equal: bool
    derivative_discrepancy: float
    unstable: bool


def inspection_inequality(model: LevyModel) -> InspectionReport:
    """Typical versus observed mean idle period for spectrally negative inputs.

    The closed form ``(1 - Phi(0))^2 <= 2 (Phi(0)^2 - Phi(0) + Phi'(0) psi(1))``
    uses ``Phi'(0) = 1 / psi'(Phi(0))``.  The mean-based form is evaluated
    independently, differentiating ``F(alpha) = (1 - 1/Phi(alpha))/(alpha - psi(1))``
    numerically at 0.
    """
    if not model.is_negative:
        raise DomainError("inspection_inequality is stated for spectrally negative inputs")
    ex = queue_exponents(model)
    phi0, psi1 = ex.phi_Y0, ex.theta_star
    dphi0 = phi_Y_derivative(model, 0.0)
    lhs = (1.0 - phi0) ** 2
    rhs = 2.0 * (phi0 ** 2 - phi0 + dphi0 * psi1)

    F = lambda a: (1.0 - 1.0 / phi_Y(model, a)) / (a - psi1)
    h = 1e-3 * min(1.0, psi1)
    dF_num, err = _richardson_forward(F, h)
    dF = (-dphi0 * psi1 / phi0 ** 2 - (1.0 - 1.0 / phi0)) / psi1 ** 2
    disc = abs(dF_num - dF) / max(abs(dF), 1e-300)

    c = phi0 * psi1 / (1.0 - phi0)
    typical = F(0.0)
    observed = -2.0 * c * dF_num
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return InspectionReport(
        lhs=lhs,
        rhs=rhs,
        holds=lhs <= rhs * (1 + 1e-12) + 1e-15,
        typical_idle_mean=typical,
        observed_idle_mean=observed,
        means_hold=typical <= observed * (1 + 1e-8),
        nearly_equal=abs(rhs - lhs) <= 1e-6 * scale,
        derivative_discrepancy=disc,
        unstable=disc > 1e-5 or err > 1e-5 * max(abs(dF_num), 1e-300),
    )

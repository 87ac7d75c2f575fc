"""Right inverses of the Laplace exponents and the derived queue constants.

Every exponent handled here is convex with value 0 at the origin, so the
largest root of ``f(theta) = q`` lies to the right of the minimiser of ``f``.
Roots are bracketed from that minimiser with a geometrically growing upper
end and polished with Brent's method (``scipy.optimize.brentq``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.optimize import brentq

from .errors import DomainError, RootFindingError
from .levy_model import (
    LevyModel,
    laplace_exponent,
    laplace_exponent_derivative,
    require_valid,
)

DEFAULT_TOL = 1e-12
_XTOL = 1e-300
_RTOL = 4 * 2.220446049250313e-16
_MAX_GROW = 400


def _brent(f, lo, hi, what):
    try:
        return brentq(f, lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise RootFindingError(f"{what}: {exc}", (lo, hi)) from exc


def _grow_upper(f, start, target, what):
    """Smallest ``hi = start * 2**k`` with ``f(hi) > target``."""
    hi = max(start, 1.0)
    for _ in range(_MAX_GROW):
        if f(hi) > target:
            return hi
        hi *= 2.0
    raise RootFindingError(f"{what}: no upper bracket", (start, hi))


def _minimiser(df, what):
    """Minimiser of a convex function on ``[0, inf)`` from its derivative."""
    if df(0.0) >= 0:
        return 0.0
    # df(0+) may be -inf; probe from a tiny positive point instead.
    lo = 1e-300
    hi = _grow_upper(df, 1.0, 0.0, what)
    return _brent(df, lo, hi, what)


def _largest_root(f, df, q, what):
    m = _minimiser(df, what)
    if f(m) == q:
        return m
    if f(m) > q:
        raise DomainError(f"{what}: {q} lies below the range of the exponent")
    hi = _grow_upper(f, 2.0 * m, q, what)
    return _brent(lambda t: f(t) - q, m, hi, what)


# --- Phi_Y ---------------------------------------------------------------------

@lru_cache(maxsize=65536)
def _phi_cached(model: LevyModel, q: float) -> float:
    return _largest_root(
        lambda t: laplace_exponent(model, t),
        lambda t: laplace_exponent_derivative(model, t),
        q,
        f"Phi_Y({q})",
    )


def phi_Y(model: LevyModel, q: float) -> float:
    """Largest root of ``psi_Y(theta) = q``.

    >>> from fluidq.presets import example1
    >>> phi_Y(example1(), 1.0)
    1.0
    """
    if not q >= 0:
        raise DomainError("phi_Y requires q >= 0")
    return _phi_cached(model, float(q))


def phi_Y_derivative(model: LevyModel, q: float) -> float:
    """``Phi_Y'(q) = 1 / psi_Y'(Phi_Y(q))`` (right derivative at ``q = 0``)."""
    return 1.0 / laplace_exponent_derivative(model, phi_Y(model, q))


# --- mu and theta* ---------------------------------------------------------------

@dataclass(frozen=True)
class QueueExponents:
    mu: float
    theta_star: float
    phi_Y0: float


@lru_cache(maxsize=256)
def queue_exponents(model: LevyModel) -> QueueExponents:
    """Local-time rate ``mu`` and stationary queue decay rate ``theta*``."""
    require_valid(model)
    if model.is_negative:
        phi0 = phi_Y(model, 0.0)
        return QueueExponents(phi0, laplace_exponent(model, 1.0), phi0)
    mu = laplace_exponent_derivative(model, 0.0)
    # theta* is the positive fixed point of psi, i.e. the largest root of psi(t) - t = 0.
    theta_star = _largest_root(
        lambda t: laplace_exponent(model, t) - t,
        lambda t: laplace_exponent_derivative(model, t) - 1.0,
        0.0,
        "theta*",
    )
    return QueueExponents(mu, theta_star, 0.0)


# --- Lambda = x - L^{-1}_x -----------------------------------------------------------

def psi_lambda(model: LevyModel, theta: float) -> float:
    """Laplace exponent of the spectrally negative process ``x - L^{-1}_x``."""
    if not theta >= 0:
        raise DomainError("psi_lambda requires theta >= 0")
    if model.is_negative:
        return 0.0 if theta == 0 else theta - theta / phi_Y(model, theta)
    return theta - phi_Y(model, theta)


def psi_lambda_derivative(model: LevyModel, theta: float) -> float:
    if not theta > 0:
        raise DomainError("psi_lambda_derivative requires theta > 0")
    phi = phi_Y(model, theta)
    dphi = phi_Y_derivative(model, theta)
    if model.is_negative:
        return 1.0 - (phi - theta * dphi) / phi ** 2
    return 1.0 - dphi


@lru_cache(maxsize=65536)
def _phi_lambda_cached(model: LevyModel, alpha: float) -> float:
    theta_star = queue_exponents(model).theta_star
    if alpha == 0:
        return theta_star
    # psi_Lambda < 0 on (0, theta*) and increasing beyond, so the root sits above theta*.
    f = lambda t: psi_lambda(model, t)
    hi = _grow_upper(f, 2.0 * theta_star, alpha, f"Phi_Lambda({alpha})")
    return _brent(lambda t: f(t) - alpha, theta_star, hi, f"Phi_Lambda({alpha})")


def phi_lambda(model: LevyModel, alpha: float) -> float:
    """Right inverse of ``psi_lambda``; ``phi_lambda(0) = theta*``."""
    if not alpha >= 0:
        raise DomainError("phi_lambda requires alpha >= 0")
    return _phi_lambda_cached(model, float(alpha))

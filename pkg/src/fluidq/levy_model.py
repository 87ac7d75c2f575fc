"""Spectrally one-sided Levy inputs and their Laplace exponents.

A model stores the process ``Y`` itself::

    Y(s, t] = a (t - s) + sigma (B_t - B_s) + J(s, t]

where ``J`` is a pure-jump subordinator (finite variation for every supported
preset), added with sign ``+1`` when ``Y`` is spectrally positive and ``-1``
when it is spectrally negative.  Because every preset jump part has finite
variation the jumps are *not* compensated, so for ``sigma == 0`` the linear
coefficient ``a`` is exactly the bounded-variation drift ``d_Y``.

The Laplace exponent follows the one-sided convention

* spectrally negative: ``psi(theta) = log E exp(theta Y_1)``
* spectrally positive: ``psi(theta) = log E exp(-theta Y_1)``

so in both cases ``psi(theta) = s a theta + sigma^2 theta^2 / 2 - kappa(theta)``
with ``s = +1`` (negative) or ``s = -1`` (positive) and ``kappa`` the Laplace
exponent of the jump subordinator.  Equivalently ``psi`` is the ordinary
spectrally negative exponent of the oriented process ``Z = s Y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from .errors import AssumptionError, DomainError


class SpectralSign(str, Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"


@dataclass(frozen=True)
class NoJumps:
    """Brownian motion with drift."""

    kind = "none"


@dataclass(frozen=True)
class CompoundPoissonExp:
    """Compound Poisson jumps arriving at ``rate`` with Exp(``jump_rate``) sizes."""

    rate: float
    jump_rate: float
    kind = "compound_poisson_exp"

    def __post_init__(self):
        if not (self.rate > 0 and self.jump_rate > 0):
            raise DomainError("compound Poisson rate and jump_rate must be positive")


@dataclass(frozen=True)
class StableSubordinator:
    """One-sided stable jumps with ``E exp(-theta S_1) = exp(-scale theta^index)``."""

    index: float
    scale: float
    kind = "stable_subordinator"

    def __post_init__(self):
        if not (0.0 < self.index < 1.0):
            raise DomainError("stable index must lie in (0, 1)")
        if not self.scale > 0:
            raise DomainError("stable scale must be positive")


@dataclass(frozen=True)
class InverseBMLocalTime:
    """Inverse local time of a Brownian motion, ``E exp(-theta S_1) = exp(-2 scale sqrt(theta))``."""

    scale: float
    kind = "inverse_bm_local_time"

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("inverse local time scale must be positive")


JumpSpec = Union[NoJumps, CompoundPoissonExp, StableSubordinator, InverseBMLocalTime]


@dataclass(frozen=True)
class LevyModel:
    spectral_sign: SpectralSign
    gaussian_sigma: float
    linear_drift: float
    jumps: JumpSpec = field(default_factory=NoJumps)

    def __post_init__(self):
        object.__setattr__(self, "spectral_sign", SpectralSign(self.spectral_sign))
        if not (self.gaussian_sigma >= 0 and math.isfinite(self.gaussian_sigma)):
            raise DomainError("gaussian_sigma must be a finite nonnegative number")
        if not math.isfinite(self.linear_drift):
            raise DomainError("linear_drift must be finite")

    @property
    def orientation(self) -> int:
        """``+1`` if ``Y`` is spectrally negative, ``-1`` if positive."""
        return 1 if self.spectral_sign is SpectralSign.NEGATIVE else -1

    @property
    def is_negative(self) -> bool:
        return self.spectral_sign is SpectralSign.NEGATIVE

    @property
    def has_jumps(self) -> bool:
        return not isinstance(self.jumps, NoJumps)

    def reflected(self) -> "LevyModel":
        """The model of ``-Y``: same exponent machinery, opposite spectral sign."""
        other = SpectralSign.POSITIVE if self.is_negative else SpectralSign.NEGATIVE
        return LevyModel(other, self.gaussian_sigma, -self.linear_drift, self.jumps)

    def oriented(self) -> "LevyModel":
        """The spectrally negative process ``s Y`` whose ordinary exponent is ``psi``."""
        return self if self.is_negative else self.reflected()


# --- jump subordinator exponent -------------------------------------------

def jump_exponent(jumps: JumpSpec, theta):
    """``kappa(theta) = -log E exp(-theta J_1)``; accepts complex ``theta``."""
    if isinstance(jumps, NoJumps):
        return 0.0 * theta
    if isinstance(jumps, CompoundPoissonExp):
        return jumps.rate * theta / (jumps.jump_rate + theta)
    if isinstance(jumps, StableSubordinator):
        return jumps.scale * theta ** jumps.index
    if isinstance(jumps, InverseBMLocalTime):
        return 2.0 * jumps.scale * theta ** 0.5
    raise TypeError(f"unsupported jump spec {jumps!r}")


def jump_exponent_derivative(jumps: JumpSpec, theta):
    if isinstance(jumps, NoJumps):
        return 0.0 * theta
    if isinstance(jumps, CompoundPoissonExp):
        return jumps.rate * jumps.jump_rate / (jumps.jump_rate + theta) ** 2
    with np.errstate(divide="ignore"):
        if isinstance(jumps, StableSubordinator):
            return jumps.scale * jumps.index * np.power(theta, jumps.index - 1.0)
        if isinstance(jumps, InverseBMLocalTime):
            return jumps.scale * np.power(theta, -0.5)
    raise TypeError(f"unsupported jump spec {jumps!r}")


def jump_mean(jumps: JumpSpec) -> float:
    """``E J_1``; infinite for the stable presets."""
    if isinstance(jumps, NoJumps):
        return 0.0
    if isinstance(jumps, CompoundPoissonExp):
        return jumps.rate / jumps.jump_rate
    return math.inf


# --- exponent ---------------------------------------------------------------

def _check_theta(theta):
    if np.any(np.asarray(theta) < 0):
        raise DomainError("Laplace exponent is only defined for theta >= 0")


def psi_complex(model: LevyModel, beta):
    """Analytic continuation of ``psi`` to ``Re(beta) > 0`` (principal branch)."""
    s = model.orientation
    sig2 = model.gaussian_sigma ** 2
    return s * model.linear_drift * beta + 0.5 * sig2 * beta * beta - jump_exponent(model.jumps, beta)


def laplace_exponent(model: LevyModel, theta):
    """Laplace exponent ``psi_Y(theta)`` under the one-sided sign convention.

    >>> m = LevyModel("positive", 1.0, -0.5)
    >>> laplace_exponent(m, 1.0)
    1.0
    """
    _check_theta(theta)
    value = psi_complex(model, theta)
    return float(value) if np.ndim(value) == 0 else value


def laplace_exponent_derivative(model: LevyModel, theta):
    """``psi_Y'(theta)``; at ``theta = 0`` the right limit, possibly ``-inf``."""
    _check_theta(theta)
    s = model.orientation
    sig2 = model.gaussian_sigma ** 2
    value = s * model.linear_drift + sig2 * np.asarray(theta, dtype=float) \
        - jump_exponent_derivative(model.jumps, np.asarray(theta, dtype=float))
    return float(value) if np.ndim(value) == 0 else value


# --- path variation ------------------------------------------------------------

@dataclass(frozen=True)
class VariationClass:
    bounded: bool
    drift: float | None = None

    @property
    def kind(self) -> str:
        return "BoundedVariation" if self.bounded else "UnboundedVariation"


def classify(model: LevyModel) -> VariationClass:
    """Bounded variation iff no Gaussian part (every preset jump part has finite variation)."""
    if model.gaussian_sigma > 0:
        return VariationClass(False)
    return VariationClass(True, model.linear_drift)


# --- standing assumptions ------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.checks if not c.passed)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {c.name: {"passed": c.passed, "detail": c.detail} for c in self.checks}


def validate_assumptions(model: LevyModel) -> ValidationReport:
    checks = []

    # Without a Gaussian part the drift must oppose the jumps, otherwise |Y| is monotone.
    s = model.orientation
    if model.gaussian_sigma > 0:
        non_monotone, why = True, "Gaussian component present"
    elif not model.has_jumps:
        non_monotone, why = False, "deterministic drift"
    else:
        non_monotone = s * model.linear_drift > 0
        why = f"drift {model.linear_drift:g} against {model.spectral_sign.value} jumps"
    checks.append(Check("non_monotone", non_monotone, why))

    slope = laplace_exponent_derivative(model, 0.0)
    if model.is_negative:
        drift_ok = slope < 0
        detail = f"psi'(0+) = {slope:g} must be < 0"
    else:
        drift_ok = 0 < slope < math.inf
        detail = f"psi'(0+) = {slope:g} must be in (0, inf)"
    checks.append(Check("drift_sign", drift_ok, detail))

    if model.is_negative:
        # psi convex with psi(0) = 0 and psi'(0+) < 0: Phi(0) < 1 iff psi(1) > 0.
        psi1 = laplace_exponent(model, 1.0)
        checks.append(Check("A1", drift_ok and psi1 > 0,
                            f"mu = Phi(0) < 1 needs psi(1) = {psi1:g} > 0"))
    else:
        checks.append(Check("A1", slope < 1, f"mu = psi'(0+) = {slope:g} must be < 1"))

    var = classify(model)
    if not model.is_negative and var.bounded:
        checks.append(Check("A2", var.drift < -1, f"d_Y = {var.drift:g} must be < -1"))
    else:
        checks.append(Check("A2", True, "not applicable"))
    return ValidationReport(tuple(checks))


def require_valid(model: LevyModel) -> None:
    report = validate_assumptions(model)
    if not report.ok:
        raise AssumptionError(report.failed)

"""The five worked examples as ready-made models."""

from __future__ import annotations

from .levy_model import (
    CompoundPoissonExp,
    InverseBMLocalTime,
    LevyModel,
    NoJumps,
    SpectralSign,
    StableSubordinator,
)


def example1(sigma: float = 1.0, mu: float = 0.5) -> LevyModel:
    """``Y_t = sigma B_t - mu t``: reflected Brownian motion with negative drift."""
    return LevyModel(SpectralSign.POSITIVE, sigma, -mu, NoJumps())


def example2(drift: float = 1.2, rate: float = 1.0, jump_rate: float = 2.0) -> LevyModel:
    """Linear drain at ``drift`` with Poisson(``rate``) arrivals of Exp(``jump_rate``) work."""
    return LevyModel(SpectralSign.POSITIVE, 0.0, -drift, CompoundPoissonExp(rate, jump_rate))


def example3(b: float = 2.0, c: float = 1.0, index: float = 0.5) -> LevyModel:
    """Linear input at rate ``b`` minus a stable subordinator."""
    return LevyModel(SpectralSign.NEGATIVE, 0.0, b, StableSubordinator(index, c))


def example4(b: float = 0.5, sigma: float = 1.0, c: float = 0.8) -> LevyModel:
    """Drift ``3b`` plus Brownian motion minus an inverse Brownian local time.

    ``psi(theta) = 3 b theta + sigma^2 theta^2 / 2 - 2 c sqrt(theta)``.
    """
    return LevyModel(SpectralSign.NEGATIVE, sigma, 3.0 * b, InverseBMLocalTime(c))


def example5(sigma: float = 1.0, mu: float = 0.5) -> LevyModel:
    """Same input as :func:`example1`; used for the period-level quantities."""
    return example1(sigma, mu)


PRESETS = {
    "example1": example1,
    "example2": example2,
    "example3": example3,
    "example4": example4,
    "example5": example5,
}

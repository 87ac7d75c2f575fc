"""q-scale functions of a spectrally negative model by numerical Laplace inversion.

For ``beta > Phi(q)``::

    int_0^inf exp(-beta x) W^(q)(x) dx = 1 / (psi(beta) - q)
    int_0^inf exp(-beta x) Z^(q)(x) dx = psi(beta) / (beta (psi(beta) - q))

Spectrally positive models are reflected first, so ``psi`` is always the
exponent of the spectrally negative orientation (which is the same function).

Both transforms have their right-most singularity at ``Phi(q)``.  We invert
the tilted transform ``F(s + Phi(q))`` (right-most singularity at 0) and
multiply back by ``exp(Phi(q) x)``; the tilted function stays bounded so the
inversion error is relative to the size of the answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import mpmath

from .errors import DomainError, InversionError
from .levy_model import LevyModel, classify, laplace_exponent_derivative, psi_complex
from .transforms import phi_Y


class InversionMethod(str, Enum):
    FIXED_TALBOT = "talbot"
    EULER = "euler"
    BOTH = "both"


@dataclass(frozen=True)
class InversionParams:
    talbot_degree: int = 48
    euler_terms: int = 40
    agreement_rtol: float = 1e-7


@dataclass(frozen=True)
class ScaleFunctionSpec:
    model: LevyModel
    q: float = 0.0
    method: InversionMethod = InversionMethod.BOTH
    params: InversionParams = field(default_factory=InversionParams)

    def __post_init__(self):
        if not self.q >= 0:
            raise DomainError("scale functions require q >= 0")
        object.__setattr__(self, "model", self.model.oriented())
        object.__setattr__(self, "method", InversionMethod(self.method))

    @property
    def phi_q(self) -> float:
        return phi_Y(self.model, self.q)


# --- inversion algorithms ----------------------------------------------------------

def _talbot(F, t: float, degree: int):
    return mpmath.invertlaplace(F, t, method="talbot", degree=degree)


def _euler_weights(m: int):
    # Binomial averaging weights of the Abate-Whitt Euler algorithm.
    xi = [mpmath.mpf(0)] * (2 * m + 1)
    xi[0] = mpmath.mpf(1) / 2
    for k in range(1, m + 1):
        xi[k] = mpmath.mpf(1)
    xi[2 * m] = mpmath.mpf(2) ** (-m)
    for k in range(1, m):
        xi[2 * m - k] = xi[2 * m - k + 1] + mpmath.mpf(2) ** (-m) * mpmath.binomial(m, k)
    return [(-1) ** k * xi[k] for k in range(2 * m + 1)]


def _euler(F, t: float, m: int):
    t = mpmath.mpf(t)
    a = m * mpmath.log(10) / 3
    total = mpmath.mpf(0)
    for k, eta in enumerate(_euler_weights(m)):
        beta = mpmath.mpc(a, mpmath.pi * k)
        total += eta * mpmath.re(F(beta / t))
    return mpmath.power(10, mpmath.mpf(m) / 3) / t * total


def _invert(spec: ScaleFunctionSpec, F, x: float) -> float:
    """Invert ``F`` (right-most singularity at ``Phi(q)``) at ``x > 0``."""
    gamma = spec.phi_q
    tilted = lambda s: F(s + gamma)
    p = spec.params
    values = {}
    with mpmath.workdps(max(30, p.euler_terms + 15)):
        try:
            if spec.method in (InversionMethod.FIXED_TALBOT, InversionMethod.BOTH):
                values["talbot"] = _talbot(tilted, x, p.talbot_degree)
            if spec.method in (InversionMethod.EULER, InversionMethod.BOTH):
                values["euler"] = _euler(tilted, x, p.euler_terms)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise InversionError(f"inversion failed at x={x}: {exc}", {"x": x}) from exc
        scale = mpmath.exp(gamma * x)
        out = {k: float(v * scale) for k, v in values.items()}
    for k, v in out.items():
        if not math.isfinite(v):
            raise InversionError(f"{k} inversion produced {v} at x={x}", {"x": x, **out})
    if len(out) == 2:
        a, b = out["talbot"], out["euler"]
        if abs(a - b) > p.agreement_rtol * max(abs(a), abs(b), 1e-300):
            raise InversionError(
                f"Talbot and Euler disagree at x={x}: {a!r} vs {b!r}",
                {"x": x, "talbot": a, "euler": b},
            )
    return out.get("talbot", out.get("euler"))


def invert_both(spec: ScaleFunctionSpec, which: str, x: float) -> dict:
    """Raw values of both methods for ``which`` in ``{"W", "Z"}`` (diagnostics)."""
    out = {}
    for method in (InversionMethod.FIXED_TALBOT, InversionMethod.EULER):
        s = ScaleFunctionSpec(spec.model, spec.q, method, spec.params)
        out[method.value] = (W_q if which == "W" else Z_q)(s, x)
    return out


# --- scale functions --------------------------------------------------------------

def _psi(spec: ScaleFunctionSpec):
    return lambda beta: psi_complex(spec.model, beta)


def W_q(spec: ScaleFunctionSpec, x: float) -> float:
    """``W^(q)(x)``; ``W^(q)(0)`` is ``1/d`` for bounded variation and 0 otherwise."""
    if not x >= 0:
        raise DomainError("W_q requires x >= 0")
    if x == 0:
        var = classify(spec.model)
        return 1.0 / var.drift if var.bounded else 0.0
    psi = _psi(spec)
    q = spec.q
    return _invert(spec, lambda b: 1 / (psi(b) - q), x)


def Z_q(spec: ScaleFunctionSpec, x: float) -> float:
    """``Z^(q)(x)``, equal to ``1 + q int_0^x W^(q)``."""
    if not x >= 0:
        raise DomainError("Z_q requires x >= 0")
    if x == 0 or spec.q == 0:
        return 1.0
    psi = _psi(spec)
    q = spec.q

    def F(b):
        p = psi(b)
        return p / (b * (p - q))

    return _invert(spec, F, x)


# --- exit problems ----------------------------------------------------------------

def exit_up_lt(model: LevyModel, q: float, x: float) -> float:
    """``E exp(-q tau_x^+) = exp(-Phi(q) x)`` for the spectrally negative orientation."""
    if not (q >= 0 and x >= 0):
        raise DomainError("exit_up_lt requires q, x >= 0")
    if x == 0:
        return 1.0
    return math.exp(-phi_Y(model.oriented(), q) * x)


def q_over_phi(model: LevyModel, q: float) -> float:
    """``q / Phi(q)`` with its limit at ``q = 0`` (0, or ``psi'(0+)`` when ``Phi(0) = 0``)."""
    model = model.oriented()
    if q > 0:
        return q / phi_Y(model, q)
    if phi_Y(model, 0.0) > 0:
        return 0.0
    return laplace_exponent_derivative(model, 0.0)


def exit_down_lt(spec: ScaleFunctionSpec, x: float) -> float:
    """``E exp(-q tau_{-x}^-) = Z^(q)(x) - (q/Phi(q)) W^(q)(x)``.

    At ``x = 0`` this is 1 for unbounded variation but ``1 - q/(Phi(q) d)``
    for bounded variation, where the process can start by drifting upwards.
    """
    return Z_q(spec, x) - q_over_phi(spec.model, spec.q) * W_q(spec, x)

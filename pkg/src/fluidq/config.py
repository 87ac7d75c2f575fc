"""Experiment configuration: one self-describing JSON document per run."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

from .errors import FluidQError
from .levy_model import (
    CompoundPoissonExp,
    InverseBMLocalTime,
    LevyModel,
    NoJumps,
    SpectralSign,
    StableSubordinator,
)

CONFIG_SCHEMA = "fluidq.config/1"
PRESET_NAMES = ("example1", "example2", "example3", "example4", "example5")

_JUMP_KINDS = {
    "none": (NoJumps, ()),
    "compound_poisson_exp": (CompoundPoissonExp, ("rate", "jump_rate")),
    "stable": (StableSubordinator, ("index", "scale")),
    "inverse_bm_local_time": (InverseBMLocalTime, ("scale",)),
}


class ConfigError(FluidQError, ValueError):
    """Malformed or inconsistent experiment configuration."""


# --- model (de)serialization --------------------------------------------------------

def model_to_dict(model: LevyModel) -> dict:
    for kind, (cls, names) in _JUMP_KINDS.items():
        if isinstance(model.jumps, cls):
            jumps = {"kind": kind, **{n: getattr(model.jumps, n) for n in names}}
            break
    else:
        raise ConfigError(f"unsupported jump component {model.jumps!r}")
    return {
        "spectral_sign": SpectralSign(model.spectral_sign).value,
        "gaussian_sigma": model.gaussian_sigma,
        "linear_drift": model.linear_drift,
        "jumps": jumps,
    }


def model_from_dict(d: dict) -> LevyModel:
    try:
        j = dict(d.get("jumps", {"kind": "none"}))
        kind = j.pop("kind")
        cls, names = _JUMP_KINDS[kind]
        if set(j) != set(names):
            raise ConfigError(f"jumps of kind {kind!r} need exactly {list(names)}")
        return LevyModel(
            SpectralSign(d["spectral_sign"]),
            float(d["gaussian_sigma"]),
            float(d["linear_drift"]),
            cls(*(float(j[n]) for n in names)),
        )
    except KeyError as exc:
        raise ConfigError(f"model is missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid model: {exc}") from exc


# --- experiment config ----------------------------------------------------------------

@dataclass(frozen=True)
class Tolerances:
    z_max: float = 4.0
    rel_max: float = 0.02
    approx_residual: float = 0.05  # soft gate for calibrated local time


@dataclass(frozen=True)
class Outputs:
    summary: str = "summary.json"
    comparison: str = "comparison.csv"
    path: str | None = None
    path_horizon: float = 100.0


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: LevyModel
    dt: float = 1e-3
    horizon: float = 1e4
    burn_in: float | None = None
    n_reps: int = 16
    seed: int = 0
    alpha_grid: tuple[float, ...] = (0.5, 1.0, 2.0)
    a_grid: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0)
    tolerances: Tolerances = field(default_factory=Tolerances)
    outputs: Outputs = field(default_factory=Outputs)

    def __post_init__(self):
        if self.n_reps < 2:
            raise ConfigError("n_reps must be at least 2")
        if not (self.dt > 0 and self.horizon >= self.dt):
            raise ConfigError("need dt > 0 and horizon >= dt")
        if self.burn_in is not None and not self.burn_in >= 0:
            raise ConfigError("burn_in must be nonnegative")
        if not self.alpha_grid or not self.a_grid:
            raise ConfigError("alpha_grid and a_grid must be nonempty")
        if any(not (a > 0 and math.isfinite(a)) for a in self.alpha_grid):
            raise ConfigError("alpha_grid entries must be positive and finite")
        # distinct entries keep every (alpha, beta) pair off the diagonal
        if len(set(self.alpha_grid)) != len(self.alpha_grid):
            raise ConfigError("alpha_grid entries must be distinct")
        if any(not (a >= 0 and math.isfinite(a)) for a in self.a_grid):
            raise ConfigError("a_grid entries must be nonnegative and finite")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def dg_pairs(self) -> tuple[tuple[float, float], ...]:
        """``(alpha, 0)`` for each probe and consecutive ``(alpha_{i+1}, alpha_i)``."""
        g = sorted(self.alpha_grid)
        return tuple((a, 0.0) for a in g) + tuple(zip(g[1:], g[:-1]))

    def simulation_config(self):
        from .simulator.runner import SimulationConfig

        return SimulationConfig(
            dt=self.dt, horizon=self.horizon, n_reps=self.n_reps, seed=self.seed,
            burn_in=self.burn_in, a_grid=tuple(self.a_grid), thetas=tuple(self.alpha_grid),
            dg_pairs=self.dg_pairs,
        )

    def with_seed(self, seed: int) -> "ExperimentConfig":
        from dataclasses import replace

        return replace(self, seed=seed)

    # --- JSON ---

    def to_dict(self) -> dict:
        d = {"schema": CONFIG_SCHEMA}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "model":
                v = model_to_dict(v)
            elif f.name in ("tolerances", "outputs"):
                v = asdict(v)
            elif isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        schema = d.get("schema")
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported schema {schema!r} (expected {CONFIG_SCHEMA!r})")
        known = {f.name for f in fields(cls)}
        extra = set(d) - known - {"schema"}
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        if "name" not in d or "model" not in d:
            raise ConfigError("config needs 'name' and 'model'")
        kw = {k: v for k, v in d.items() if k in known}
        kw["model"] = model_from_dict(d["model"])
        try:
            for k in ("alpha_grid", "a_grid"):
                if k in kw:
                    kw[k] = tuple(float(x) for x in kw[k])
            if "tolerances" in kw:
                kw["tolerances"] = Tolerances(**kw["tolerances"])
            if "outputs" in kw:
                kw["outputs"] = Outputs(**kw["outputs"])
            for k in ("dt", "horizon"):
                if k in kw:
                    kw[k] = float(kw[k])
            if kw.get("burn_in") is not None:
                kw["burn_in"] = float(kw["burn_in"])
            for k in ("n_reps", "seed"):
                if k in kw:
                    if isinstance(kw[k], bool) or int(kw[k]) != kw[k]:
                        raise ConfigError(f"{k} must be an integer")
                    kw[k] = int(kw[k])
        except TypeError as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_json(text)


def load_preset(name: str) -> ExperimentConfig:
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    text = resources.files("fluidq").joinpath("configs", f"{name}.json").read_text()
    return ExperimentConfig.from_json(text)

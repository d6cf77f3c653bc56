"""Run configuration for the command-line front end.

A config is one flat JSON object. Unknown keys are rejected before any
computation, and the effective values (after defaults and flag overrides)
are embedded in every output file.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, CribsrError
from .prob_core import CribFunction, DistortionSpec, JointPmf, adjoin_function
from .region_solver import (
    PERFECT,
    U,
    X,
    X2,
    CribbingMode,
    CribbingVariant,
    FeasibleParameterization,
    bernoulli_example,
    deterministic,
)

DEFAULT_SEED = 20240917
COMMANDS = ("region", "frontier", "simulate", "duality", "example")
MODES = ("noncausal", "strictly-causal", "causal", "no-cribbing")
# execution settings that never change a result; kept out of the embedded config
RUNTIME_KEYS = ("out", "format", "figure", "workers")


@dataclass
class RunConfig:
    command: str = "example"
    # instance
    source: list | None = None
    d1: list | None = None
    d2: list | None = None
    D1: float = 0.05
    D2: float = 0.1
    g: list | None = None
    mode: str | None = None
    variant: str = "perfect"
    joint: dict | None = None
    # solver
    grid_step: float = 1 / 64
    refine: bool = True
    n_grid: int = 129
    x1_size: int | None = None
    x2_size: int | None = None
    u_size: int | None = None
    # simulator
    n: int = 12
    blocks: int | None = None
    trials: int = 200
    eps: float = 0.1
    slack: float = 1.0
    seed: int = DEFAULT_SEED
    R0: float | None = None
    R1: float | None = None
    rate_scale: float = 1.15
    policy: str = "bin-lookup"
    select: str = "first"
    # duality
    r12: float = 0.1
    channel: list | None = None
    inputs: list | None = None
    # output
    out: str | None = None
    format: str | None = None
    figure: str | None = None
    workers: int = 1

    @classmethod
    def keys(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(data) - set(cls.keys()))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_mapping(data)

    def override(self, **values) -> "RunConfig":
        """Copy with the non-None values replaced, then revalidated."""
        cfg = dataclasses.replace(self, **{k: v for k, v in values.items() if v is not None})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.mode is not None and self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.variant not in ("perfect", "detfn"):
            raise ConfigError(f"variant must be perfect or detfn, got {self.variant!r}")
        if self.variant == "detfn" and self.g is None:
            raise ConfigError("variant detfn needs a crib function table g")
        if self.format is not None and self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        for name in ("D1", "D2", "grid_step", "eps", "rate_scale", "r12", "slack"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{name} must be a finite number")
        for name in ("n", "trials", "n_grid", "workers", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{name} must be an integer")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.trials < 1 or self.workers < 1 or self.n_grid < 2:
            raise ConfigError("trials, workers must be >= 1 and n_grid >= 2")
        if self.D1 < 0 or self.D2 < 0 or self.r12 < 0:
            raise ConfigError("budgets and r12 must be nonnegative")

    def effective(self) -> dict:
        """Config echo for outputs: every result-affecting key after defaults."""
        return {k: getattr(self, k) for k in self.keys() if k not in RUNTIME_KEYS}

    # ------------------------------------------------------------------
    # instance construction

    @property
    def binary_default(self) -> bool:
        """True when the instance is the uniform binary source under Hamming loss."""
        return self.source is None and self.d1 is None and self.d2 is None

    def crib_function(self) -> CribFunction | None:
        if self.g is None:
            return None
        try:
            return CribFunction(tuple(int(v) for v in self.g))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad crib function table: {exc}") from None

    def crib_variant(self) -> CribbingVariant:
        g = self.crib_function()
        if self.variant == "detfn":
            return deterministic(g)
        return PERFECT

    def source_pmf(self) -> JointPmf:
        probs = [0.5, 0.5] if self.source is None else self.source
        return _build(lambda: JointPmf((X,), np.asarray(probs, dtype=float)))

    def distortion(self, x1_size: int | None = None, x2_size: int | None = None) -> DistortionSpec:
        nx = self.source_pmf().size(X)
        d1 = self.d1 if self.d1 is not None else _hamming_list(nx, x1_size or nx)
        d2 = self.d2 if self.d2 is not None else _hamming_list(nx, x2_size or nx)
        return _build(lambda: DistortionSpec(np.asarray(d1, dtype=float), np.asarray(d2, dtype=float),
                                             self.D1, self.D2))

    def parameterization(self) -> FeasibleParameterization:
        spec = self.distortion()
        x1 = self.x1_size or spec.d1.shape[1]
        x2 = self.x2_size or spec.d2.shape[1]
        return _build(lambda: FeasibleParameterization(x1_size=x1, x2_size=x2, grid_step=self.grid_step,
                                                       u_size=self.u_size, refine=self.refine))

    def cribbing_mode(self) -> CribbingMode | None:
        """None stands for no cribbing."""
        if self.mode is None or self.mode == "no-cribbing":
            return None
        return CribbingMode.parse(self.mode)

    def target_joint(self, mode: CribbingMode | None) -> JointPmf:
        """The configured joint, or the binary example's optimum for the mode.

        The optimum is the frontier point of least common rate: corner A's
        joint for non-causal cribbing and corner B's for (strictly) causal.
        Causal mode adds U = X2 with X2 = f(U, crib) = U.
        """
        if self.joint is not None:
            try:
                return JointPmf(tuple(self.joint["names"]), np.asarray(self.joint["probs"], dtype=float))
            except (KeyError, TypeError) as exc:
                raise ConfigError(f"joint needs 'names' and 'probs': {exc}") from None
            except CribsrError as exc:
                raise ConfigError(f"bad joint: {exc}") from None
        if not self.binary_default:
            raise ConfigError("no joint given and the instance is not the binary example")
        ex = _build(lambda: bernoulli_example(self.D1, self.D2, n_grid=3))
        key = "noncausal" if mode is CribbingMode.NONCAUSAL else "strictly-causal"
        joint = ex.frontiers[key].joints[0]
        if mode is CribbingMode.CAUSAL:
            joint = adjoin_function(joint, (X2,), np.arange(joint.size(X2)), U)
        return joint


def _hamming_list(nx: int, nhat: int) -> list:
    return (np.arange(nx)[:, None] != np.arange(nhat)[None, :]).astype(float).tolist()


def _build(make):
    """Run a constructor, turning library validation errors into config errors."""
    try:
        return make()
    except ConfigError:
        raise
    except CribsrError as exc:
        raise ConfigError(str(exc)) from None


def dumps(payload: dict) -> str:
    """Stable JSON: sorted keys, non-finite floats as strings."""
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj

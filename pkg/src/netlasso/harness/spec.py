"""Experiment specification: JSON config + CLI overrides -> resolved spec."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from ..errors import ConfigError

SWEEP_AXES = ("lambda", "gamma", "d", "m", "none")
WEIGHT_RULES = ("metropolis", "lazy_metropolis", "uniform")


@dataclass
class ExperimentSpec:
    name: str = "experiment"
    # data
    N: int = 200
    d: int = 100
    s: int | None = None          # None: ceil(log d)
    sigma: float = 0.5            # noise standard deviation
    phi: float = 0.25
    csv: str | None = None        # real-data mode
    n_test: int | None = None
    # network
    topology: str = "complete"
    m: int = 10
    p: float | None = None
    weights: str = "lazy_metropolis"
    # solver (None: selection rule)
    lam: float | None = None
    gamma: float | None = None
    beta: float | None = None
    radius: float | None = None
    iters: int = 5000
    rel_tol: float = 0.0
    stride: int = 1
    timing: bool = False
    t0: float = 3.0
    lam_c4: float = 1.0           # constant in the lambda rule
    # sweeps
    axis: str = "none"
    grid: list = field(default_factory=list)
    gammas: list = field(default_factory=list)
    reps: int = 30
    band: float = 0.03
    ratio: float | None = None    # target s*log(d)/N for d-axis sweeps
    gamma_grid_lo: float = 1e-7
    gamma_grid_hi: float = 1e-1
    warm_start: bool = False      # start sweeps at the centralized solution
    # bookkeeping
    seed: int = 0
    out: str = "."

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}")
        if self.weights not in WEIGHT_RULES:
            raise ConfigError(f"unknown weight rule {self.weights!r}")
        if self.axis != "none" and not self.grid:
            raise ConfigError("sweep grid must be nonempty when axis is set")
        if self.csv is None:
            if self.N % self.m != 0:
                raise ConfigError(f"m={self.m} must divide N={self.N}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0")

    @property
    def sparsity(self) -> int:
        return self.s if self.s is not None else max(1, math.ceil(math.log(self.d)))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_sources(cls, config_path=None, overrides=None) -> "ExperimentSpec":
        """Build from an optional JSON config file plus CLI overrides."""
        data: dict = {}
        if config_path is not None:
            try:
                with open(config_path, encoding="utf-8") as fh:
                    data = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {config_path}: {exc}")
            if not isinstance(data, dict):
                raise ConfigError("config file must hold a JSON object")
        for key, value in (overrides or {}).items():
            if value is not None:
                data[key] = value
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc))

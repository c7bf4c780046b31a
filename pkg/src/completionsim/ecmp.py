"""Hash-based multipath load: how few large flows collide on few paths, and
how splitting each flow over several queue pairs spreads the load."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels

ECMP_TAG = 0xEC3F


@dataclass(frozen=True)
class EcmpConfig:
    flow_count: int
    path_count: int
    qps_per_flow: int = 1
    seed: int = 0
    trials: int = 10_000

    def __post_init__(self):
        for name in ("flow_count", "path_count", "qps_per_flow", "trials"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class EcmpResult:
    config: EcmpConfig
    max_units: np.ndarray  # busiest path's hash-unit count, per trial

    @property
    def max_load(self) -> np.ndarray:
        """Busiest path's load in whole-flow units (each QP carries 1/q of a flow)."""
        return self.max_units / self.config.qps_per_flow

    @property
    def mean_normalized_max_load(self) -> float:
        ideal = self.config.flow_count / self.config.path_count
        return float(self.max_load.mean() / ideal)

    @property
    def collision_probability(self) -> float:
        """Fraction of trials where some path received two or more hash units."""
        return float(np.mean(self.max_units >= 2))

    @property
    def no_collision_probability(self) -> float:
        return 1.0 - self.collision_probability

    def summary(self) -> dict:
        c = self.config
        return {
            "flows": c.flow_count,
            "paths": c.path_count,
            "qps_per_flow": c.qps_per_flow,
            "trials": c.trials,
            "mean_max_load": float(self.max_load.mean()),
            "max_max_load": float(self.max_load.max()),
            "mean_normalized_max_load": self.mean_normalized_max_load,
            "collision_probability": self.collision_probability,
        }


def ecmp_load(config: EcmpConfig) -> EcmpResult:
    units = config.flow_count * config.qps_per_flow
    max_units = kernels.ecmp_max_units(config.seed, config.trials, units, config.path_count, ECMP_TAG)
    return EcmpResult(config, np.asarray(max_units))


def exact_no_collision(units: int, paths: int) -> Fraction:
    """P(all ``units`` land on distinct paths) = paths!/(paths-units)! / paths**units."""
    p = Fraction(1)
    for k in range(units):
        p *= Fraction(paths - k, paths)
    return p

"""Physical parameters of the driven van der Pol master equation."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SystemParams:
    """Detuning, drives and rates, all in units of ``gamma1``.

    ``theta`` is wrapped into ``[0, 2*pi)`` on construction.
    """

    delta: float = 0.0
    force: float = 0.0
    eta: float = 0.0
    theta: float = 0.0
    gamma1: float = 1.0
    gamma2: float = 3.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise ConfigError(f"parameter {f.name} must be finite, got {value}")
            object.__setattr__(self, f.name, value)
        if self.gamma1 <= 0:
            raise ConfigError(f"gamma1 must be positive, got {self.gamma1}")
        if self.gamma2 <= 0:
            raise ConfigError(f"gamma2 must be positive, got {self.gamma2}")
        theta = math.fmod(self.theta, TWO_PI) % TWO_PI
        # a tiny negative angle rounds up to exactly 2pi
        object.__setattr__(self, "theta", 0.0 if theta >= TWO_PI else theta)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    @property
    def r0(self) -> float:
        """Radius of the undriven classical limit cycle."""
        return math.sqrt(self.gamma1 / (2.0 * self.gamma2))


PARAM_NAMES = tuple(f.name for f in dataclasses.fields(SystemParams))

"""
Host power models, energy integration and the room cooling model.

Two power model kinds map CPU utilization u in [0, 1] to Watts:

    - TabulatedPowerModel: 11 measured points at 0%, 10%, ..., 100%,
      piecewise-linear in between (HP ProLiant ML110 G4 / G5 curves).
    - LinearPowerModel: P(u) = P_idle + (P_max - P_idle) * u, with
      P_idle = k * P_max when built from an idle fraction.

Cooling is charged on aggregate computing energy through the CRAC
coefficient of performance CoP(T) = 0.0068*T^2 + 0.0008*T + 0.458.
"""

import json
import math
from abc import ABC, abstractmethod
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple, Union

import numpy as np

from .exceptions import ConfigError, ContractViolation

# Utilization grid of tabulated models; i / 10 keeps the grid points exact.
UTILIZATION_GRID: Tuple[float, ...] = tuple(i / 10 for i in range(11))

JOULES_PER_KWH = 3_600_000.0

DEFAULT_IDLE_FRACTION = 0.7


class PowerModel(ABC):
    """Maps host CPU utilization to instantaneous power draw."""

    model_id: str

    @abstractmethod
    def power(self, u: float) -> float:
        """Power in Watts at utilization u (0 <= u <= 1)."""

    @abstractmethod
    def power_array(self, u: np.ndarray) -> np.ndarray:
        """Vectorized power over an array of utilizations."""

    @property
    def idle_power(self) -> float:
        return self.power(0.0)

    @property
    def max_power(self) -> float:
        return self.power(1.0)


@dataclass(frozen=True)
class TabulatedPowerModel(PowerModel):
    """
    Power table sampled at 0%, 10%, ..., 100% utilization.

    Attributes:
        watts_at: 11 non-decreasing power values in Watts
        model_id: Identifier used by HostSpec.power_model_id
    """
    watts_at: Tuple[float, ...]
    model_id: str = "custom"

    def __post_init__(self):
        watts = tuple(float(w) for w in self.watts_at)
        if len(watts) != len(UTILIZATION_GRID):
            raise ConfigError(
                f"power table must have exactly {len(UTILIZATION_GRID)} values, "
                f"got {len(watts)}"
            )
        if any(b < a for a, b in zip(watts, watts[1:])):
            raise ConfigError(f"power table must be non-decreasing: {watts}")
        object.__setattr__(self, "watts_at", watts)

    def power(self, u: float) -> float:
        j = bisect_right(UTILIZATION_GRID, u) - 1
        if j >= len(UTILIZATION_GRID) - 1:
            return self.watts_at[-1]
        lo = UTILIZATION_GRID[j]
        if u == lo:
            return self.watts_at[j]
        w0 = self.watts_at[j]
        w1 = self.watts_at[j + 1]
        return w0 + (w1 - w0) * (u - lo) / (UTILIZATION_GRID[j + 1] - lo)

    def power_array(self, u: np.ndarray) -> np.ndarray:
        return np.interp(u, np.asarray(UTILIZATION_GRID), np.asarray(self.watts_at))


@dataclass(frozen=True)
class LinearPowerModel(PowerModel):
    """Linear power model P(u) = P_idle + (P_max - P_idle) * u."""
    p_max: float
    p_idle: float
    model_id: str = "linear"

    def __post_init__(self):
        if self.p_max <= 0:
            raise ConfigError(f"p_max must be positive, got {self.p_max}")
        if not 0 <= self.p_idle <= self.p_max:
            raise ConfigError(
                f"p_idle must lie in [0, p_max={self.p_max}], got {self.p_idle}"
            )

    @classmethod
    def from_idle_fraction(cls, p_max: float, k: float = DEFAULT_IDLE_FRACTION,
                           model_id: str = "linear") -> "LinearPowerModel":
        """Build from the idle-fraction form P(u) = k*P_max + (1-k)*P_max*u."""
        if not 0 <= k <= 1:
            raise ConfigError(f"idle fraction k must lie in [0, 1], got {k}")
        return cls(p_max=p_max, p_idle=k * p_max, model_id=model_id)

    @property
    def idle_fraction(self) -> float:
        return self.p_idle / self.p_max

    def power(self, u: float) -> float:
        return self.p_idle + (self.p_max - self.p_idle) * u

    def power_array(self, u: np.ndarray) -> np.ndarray:
        return self.p_idle + (self.p_max - self.p_idle) * np.asarray(u, dtype=float)


HP_PROLIANT_G4 = TabulatedPowerModel(
    (86, 89.4, 92.6, 96, 99.5, 102, 106, 108, 112, 114, 117), model_id="hp-g4"
)
HP_PROLIANT_G5 = TabulatedPowerModel(
    (93.7, 97, 101, 105, 110, 116, 121, 125, 129, 133, 135), model_id="hp-g5"
)
# Peak matches the G4 curve; idle = 0.7 * peak.
LINEAR_DEFAULT = LinearPowerModel.from_idle_fraction(117.0, DEFAULT_IDLE_FRACTION)

POWER_MODELS: Dict[str, PowerModel] = {
    "hp-g4": HP_PROLIANT_G4,
    "hp-g5": HP_PROLIANT_G5,
    "linear": LINEAR_DEFAULT,
}


def get_power_model(model_id: str, overrides: Optional[Mapping[str, PowerModel]] = None
                    ) -> PowerModel:
    """Look up a power model by id; overrides win over the built-in models."""
    if overrides and model_id in overrides:
        return overrides[model_id]
    try:
        return POWER_MODELS[model_id]
    except KeyError:
        raise ConfigError(
            f"unknown power model {model_id!r}; known: {sorted(POWER_MODELS)}"
        ) from None


def load_power_table(path: Union[str, Path], model_id: str = None) -> TabulatedPowerModel:
    """
    Load a custom tabulated power model from an 11-value JSON array.

    Args:
        path: JSON file containing e.g. [86, 89.4, ..., 117]
        model_id: Id to register under (defaults to the file stem)

    Raises:
        FileNotFoundError: If the file doesn't exist
        ConfigError: If the array is malformed
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Power table not found: {path}")
    with open(path) as f:
        values = json.load(f)
    if not isinstance(values, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
    ):
        raise ConfigError(f"{path}: expected a JSON array of numbers")
    return TabulatedPowerModel(tuple(values), model_id=model_id or path.stem)


def parse_power_tables(doc: Mapping[str, Any], path: str = "power_tables"
                       ) -> Dict[str, PowerModel]:
    """
    Custom power models keyed by model id. A value is the 11 Watts values
    themselves or the path of a JSON file holding them; an id naming a
    built-in model replaces that model for the run.

    Raises:
        ConfigError: On a malformed entry (path included)
        FileNotFoundError: If a table file doesn't exist
    """
    if not isinstance(doc, Mapping):
        raise ConfigError(f"{path}: expected an object")
    out: Dict[str, PowerModel] = {}
    for model_id, value in doc.items():
        where = f"{path}.{model_id}"
        if isinstance(value, PowerModel):
            out[model_id] = value
        elif isinstance(value, (str, Path)):
            out[model_id] = load_power_table(value, model_id)
        elif isinstance(value, (list, tuple)):
            try:
                out[model_id] = TabulatedPowerModel(tuple(value), model_id=model_id)
            except (ConfigError, TypeError, ValueError) as e:
                raise ConfigError(f"{where}: {e}") from None
        else:
            raise ConfigError(f"{where}: expected 11 Watts values or a table file path")
    return out


def power(model: PowerModel, u: float) -> float:
    """
    Instantaneous power of a powered-on host at utilization u.

    Raises:
        ContractViolation: If u lies outside [0, 1]; the engine clamps
            utilization before asking for power.
    """
    if not 0.0 <= u <= 1.0 or math.isnan(u):
        raise ContractViolation(f"utilization {u!r} outside [0, 1]")
    return model.power(u)


def energy(power_samples: Iterable[Tuple[float, float]]) -> float:
    """
    Integrate piecewise-constant power samples into kWh.

    Args:
        power_samples: (Watts, duration seconds) pairs

    Returns:
        Energy in kWh
    """
    return math.fsum(w * dt for w, dt in power_samples) / JOULES_PER_KWH


@dataclass(frozen=True)
class CoolingModel:
    """
    Single-CRAC room model plus a lumped steady-state CPU thermal model.

    Attributes:
        supply_temp: CRAC supply air temperature (°C)
        cop_coeffs: Quadratic CoP coefficients (a, b, c): a*T^2 + b*T + c
        inlet_temp: Server inlet air temperature (°C)
        thermal_resistance: CPU temperature rise per Watt (°C/W)
        cpu_temp_threshold: Temperature above which a host is considered hot (°C)
    """
    supply_temp: float = 15.0
    cop_coeffs: Tuple[float, float, float] = (0.0068, 0.0008, 0.458)
    inlet_temp: float = 25.0
    thermal_resistance: float = 0.34
    cpu_temp_threshold: float = 70.0

    def __post_init__(self):
        object.__setattr__(self, "cop_coeffs", tuple(float(c) for c in self.cop_coeffs))
        if len(self.cop_coeffs) != 3:
            raise ConfigError("cop_coeffs must have exactly 3 coefficients")
        if cop(self) <= 0:
            raise ConfigError(f"CoP at supply temperature {self.supply_temp} is not positive")
        if self.cpu_temp_threshold <= self.inlet_temp:
            raise ConfigError("cpu_temp_threshold must exceed inlet_temp")
        if self.thermal_resistance < 0:
            raise ConfigError("thermal_resistance must be non-negative")

    @property
    def cooling_factor(self) -> float:
        """Total-energy multiplier 1 + 1/CoP."""
        return 1.0 + 1.0 / cop(self)

    @property
    def hot_power(self) -> float:
        """Host power above which the CPU exceeds the temperature threshold."""
        if self.thermal_resistance == 0:
            return math.inf
        return (self.cpu_temp_threshold - self.inlet_temp) / self.thermal_resistance


def cop(cooling: CoolingModel, supply_temp: float = None) -> float:
    """CRAC coefficient of performance at the given (or configured) supply temperature."""
    t = cooling.supply_temp if supply_temp is None else supply_temp
    a, b, c = cooling.cop_coeffs
    return a * t * t + b * t + c


def cpu_temperature(cooling: CoolingModel, host_power: float) -> float:
    """Steady-state CPU temperature: inlet + R * P."""
    if host_power < 0:
        raise ContractViolation(f"host power must be non-negative, got {host_power}")
    return cooling.inlet_temp + cooling.thermal_resistance * host_power


def total_energy(computing: float, cooling_model: CoolingModel) -> float:
    """Computing energy plus CRAC energy (computing / CoP), in kWh."""
    if computing < 0:
        raise ContractViolation(f"computing energy must be non-negative, got {computing}")
    return computing + computing / cop(cooling_model)

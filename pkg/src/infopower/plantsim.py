"""Step-based pressurised-water-reactor management simulation.

The plant is a deterministic state machine: twelve operator actions move
rods or add water, then the environment features update once per step.
Fission runs only while the security rods are up, the fuel rods are down
and there is water in the steam generator; running it dry, or letting
temperature or pressure cross their critical thresholds, damages the
plant for good.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path

import numpy as np

CONFIG_SCHEMA = "plant-config/1"
STATE_SCHEMA = "plant-state/1"
FEATURE_SCHEMA = "plant-features/1"

# Energy banked per step is power divided by 360: the output of a full
# 1000 MW reactor over one 10-second step.
ENERGY_DIVISOR = 360.0
MAX_POWER_MW = 1000.0

FEATURE_NAMES = (
    "temperature",
    "pressure",
    "water_level",
    "power",
    "security_rods",
    "fuel_rods",
    "sustain_rods",
    "regulatory_rods",
)
NUM_FEATURES = len(FEATURE_NAMES)


class PlantError(Exception):
    pass


class PlantConfigError(PlantError):
    """A configuration value violates its declared bound."""


class TerminalStateError(PlantError):
    """An action was applied to a damaged or finished episode."""


class RodLevel(IntEnum):
    UP = 0
    MEDIUM = 1
    DOWN = 2


class Action(IntEnum):
    SECURITY_UP = 0
    SECURITY_DOWN = 1
    FUEL_UP = 2
    FUEL_DOWN = 3
    SUSTAIN_UP = 4
    SUSTAIN_MEDIUM = 5
    SUSTAIN_DOWN = 6
    REGULATORY_UP = 7
    REGULATORY_MEDIUM = 8
    REGULATORY_DOWN = 9
    ADD_WATER = 10
    SKIP = 11


NUM_ACTIONS = len(Action)

ACTION_NAMES = {
    Action.SECURITY_UP: "security_up",
    Action.SECURITY_DOWN: "security_down",
    Action.FUEL_UP: "fuel_up",
    Action.FUEL_DOWN: "fuel_down",
    Action.SUSTAIN_UP: "sustain_up",
    Action.SUSTAIN_MEDIUM: "sustain_medium",
    Action.SUSTAIN_DOWN: "sustain_down",
    Action.REGULATORY_UP: "regulatory_up",
    Action.REGULATORY_MEDIUM: "regulatory_medium",
    Action.REGULATORY_DOWN: "regulatory_down",
    Action.ADD_WATER: "add_water",
    Action.SKIP: "skip",
}
ACTIONS_BY_NAME = {name: action for action, name in ACTION_NAMES.items()}


class Event:
    """Step event labels carried in StepOutcome.events."""

    FISSION_STARTED = "fission_started"
    FISSION_STOPPED = "fission_stopped"
    DAMAGE_OCCURRED = "damage_occurred"
    LOW_WATER_WARNING = "low_water_warning"


@dataclass(frozen=True)
class RodBank:
    security: RodLevel = RodLevel.UP
    fuel: RodLevel = RodLevel.UP
    sustain: RodLevel = RodLevel.UP
    regulatory: RodLevel = RodLevel.UP

    def __post_init__(self) -> None:
        # security and fuel rods are two-level: never MEDIUM
        if self.security == RodLevel.MEDIUM:
            raise PlantError("security rods have no medium position")
        if self.fuel == RodLevel.MEDIUM:
            raise PlantError("fuel rods have no medium position")


@dataclass(frozen=True)
class PlantState:
    temperature: float
    pressure: float
    water_level: float
    power: float
    rods: RodBank
    step_index: int = 0
    damaged: bool = False
    energy_total: float = 0.0

    def to_json_dict(self) -> dict:
        """Snapshot with fixed field order for log stability."""
        return {
            "schema": STATE_SCHEMA,
            "temperature": self.temperature,
            "pressure": self.pressure,
            "water_level": self.water_level,
            "power": self.power,
            "rods": {
                "security": self.rods.security.name.lower(),
                "fuel": self.rods.fuel.name.lower(),
                "sustain": self.rods.sustain.name.lower(),
                "regulatory": self.rods.regulatory.name.lower(),
            },
            "step_index": self.step_index,
            "damaged": self.damaged,
            "energy_total": self.energy_total,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PlantState":
        rods = RodBank(
            security=RodLevel[doc["rods"]["security"].upper()],
            fuel=RodLevel[doc["rods"]["fuel"].upper()],
            sustain=RodLevel[doc["rods"]["sustain"].upper()],
            regulatory=RodLevel[doc["rods"]["regulatory"].upper()],
        )
        return cls(
            temperature=float(doc["temperature"]),
            pressure=float(doc["pressure"]),
            water_level=float(doc["water_level"]),
            power=float(doc["power"]),
            rods=rods,
            step_index=int(doc["step_index"]),
            damaged=bool(doc["damaged"]),
            energy_total=float(doc["energy_total"]),
        )


@dataclass(frozen=True)
class StepOutcome:
    next_state: PlantState
    energy_produced: float
    events: tuple[str, ...]
    # all damage causes this step, priority order: temperature, pressure, water
    damage_causes: tuple[str, ...] = ()

    @property
    def primary_damage_cause(self) -> str | None:
        return self.damage_causes[0] if self.damage_causes else None


@dataclass(frozen=True)
class PlantConfig:
    t0: float = 25.0
    p0: float = 1.0
    l0: float = 100.0
    t_max: float = 1000.0
    p_max: float = 500.0
    t_crit: float = 900.0
    p_crit: float = 450.0
    k_t: float = 30.0
    k_p: float = 10.0
    k_l: float = 8.0
    k_pow: float = 100.0
    r_up: float = 0.5
    r_med: float = 1.0
    r_down: float = 1.5
    fuel_burn_up: float = 10.0
    fuel_burn_medium: float = 6.0
    fuel_burn_down: float = 3.0
    water_refill: float = 20.0
    cooling_rate: float = 0.2
    step_seconds: float = 10.0
    episode_steps: int = 60
    low_water_threshold: float = 25.0

    def validate(self) -> None:
        if not (self.t0 < self.t_crit < self.t_max):
            raise PlantConfigError(
                f"t_crit must lie strictly inside (t0, t_max): "
                f"t0={self.t0}, t_crit={self.t_crit}, t_max={self.t_max}"
            )
        if not (self.p0 < self.p_crit < self.p_max):
            raise PlantConfigError(
                f"p_crit must lie strictly inside (p0, p_max): "
                f"p0={self.p0}, p_crit={self.p_crit}, p_max={self.p_max}"
            )
        if not (0.0 < self.r_up < self.r_med < self.r_down):
            raise PlantConfigError(
                f"regulatory multipliers must satisfy r_down > r_med > r_up > 0, "
                f"got r_up={self.r_up}, r_med={self.r_med}, r_down={self.r_down}"
            )
        for name in ("k_t", "k_p", "k_l", "k_pow", "water_refill", "step_seconds"):
            if getattr(self, name) <= 0:
                raise PlantConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("fuel_burn_up", "fuel_burn_medium", "fuel_burn_down"):
            if getattr(self, name) < 0:
                raise PlantConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not (0.0 < self.cooling_rate < 1.0):
            raise PlantConfigError(f"cooling_rate must lie in (0, 1), got {self.cooling_rate}")
        if self.episode_steps < 1:
            raise PlantConfigError(f"episode_steps must be at least 1, got {self.episode_steps}")
        if not (0.0 < self.l0 <= 100.0):
            raise PlantConfigError(f"l0 must lie in (0, 100], got {self.l0}")
        if not (0.0 <= self.low_water_threshold < self.l0):
            raise PlantConfigError(
                f"low_water_threshold must lie in [0, l0), got {self.low_water_threshold}"
            )

    def fuel_burn(self, sustain: RodLevel) -> float:
        if sustain == RodLevel.UP:
            return self.fuel_burn_up
        if sustain == RodLevel.MEDIUM:
            return self.fuel_burn_medium
        return self.fuel_burn_down

    def regulatory_rate(self, regulatory: RodLevel) -> float:
        if regulatory == RodLevel.UP:
            return self.r_up
        if regulatory == RodLevel.MEDIUM:
            return self.r_med
        return self.r_down

    def to_json_dict(self) -> dict:
        doc = {"schema": CONFIG_SCHEMA}
        for name in self.__dataclass_fields__:
            doc[name] = getattr(self, name)
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PlantConfig":
        schema = doc.get("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise PlantConfigError(f"unsupported config schema {schema!r}")
        kwargs = {k: v for k, v in doc.items() if k in cls.__dataclass_fields__}
        config = cls(**kwargs)
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "PlantConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    def to_file(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")


def feature_bounds(config: PlantConfig) -> tuple[np.ndarray, np.ndarray]:
    """Declared (low, high) range per feature, in feature-vector order."""
    low = np.array([config.t0, config.p0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    high = np.array(
        [config.t_max, config.p_max, 100.0, MAX_POWER_MW, 2.0, 2.0, 2.0, 2.0]
    )
    return low, high


def new_plant(config: PlantConfig) -> PlantState:
    """Fresh plant: cold, full steam generator, all rods up, fission off."""
    config.validate()
    return PlantState(
        temperature=config.t0,
        pressure=config.p0,
        water_level=config.l0,
        power=0.0,
        rods=RodBank(),
    )


def fission_active(state: PlantState) -> bool:
    """Fission runs iff security rods up, fuel rods down, water left, undamaged."""
    return (
        state.rods.security == RodLevel.UP
        and state.rods.fuel == RodLevel.DOWN
        and state.water_level > 0.0
        and not state.damaged
    )


def _apply_action_effect(state: PlantState, action: Action, config: PlantConfig) -> PlantState:
    rods = state.rods
    if action == Action.SECURITY_UP:
        rods = replace(rods, security=RodLevel.UP)
    elif action == Action.SECURITY_DOWN:
        rods = replace(rods, security=RodLevel.DOWN)
    elif action == Action.FUEL_UP:
        rods = replace(rods, fuel=RodLevel.UP)
    elif action == Action.FUEL_DOWN:
        rods = replace(rods, fuel=RodLevel.DOWN)
    elif action == Action.SUSTAIN_UP:
        rods = replace(rods, sustain=RodLevel.UP)
    elif action == Action.SUSTAIN_MEDIUM:
        rods = replace(rods, sustain=RodLevel.MEDIUM)
    elif action == Action.SUSTAIN_DOWN:
        rods = replace(rods, sustain=RodLevel.DOWN)
    elif action == Action.REGULATORY_UP:
        rods = replace(rods, regulatory=RodLevel.UP)
    elif action == Action.REGULATORY_MEDIUM:
        rods = replace(rods, regulatory=RodLevel.MEDIUM)
    elif action == Action.REGULATORY_DOWN:
        rods = replace(rods, regulatory=RodLevel.DOWN)
    elif action == Action.ADD_WATER:
        return replace(state, water_level=min(100.0, state.water_level + config.water_refill))
    # SKIP applies nothing
    return replace(state, rods=rods)


def apply_action(state: PlantState, action: Action, config: PlantConfig) -> StepOutcome:
    """One full step: action effect, feature update, energy, damage check.

    The action is applied before the feature update. While fission runs,
    temperature, pressure and power rise and water drains at the regulatory
    rate; otherwise temperature and pressure relax geometrically toward
    their initial values, the water stays still, and power fades by the
    sustain-rod burn rate. Demanding fission from a dry steam generator
    damages the plant.
    """
    if state.damaged:
        raise TerminalStateError("plant is damaged; no further actions possible")
    if state.step_index >= config.episode_steps:
        raise TerminalStateError(
            f"episode finished after {config.episode_steps} steps"
        )

    was_active = fission_active(state)
    acted = _apply_action_effect(state, Action(action), config)
    rods = acted.rods

    demand = rods.security == RodLevel.UP and rods.fuel == RodLevel.DOWN
    active = demand and acted.water_level > 0.0
    burn = config.fuel_burn(rods.sustain)

    if active:
        rate = config.regulatory_rate(rods.regulatory)
        temperature = min(config.t_max, acted.temperature + rate * config.k_t)
        pressure = min(config.p_max, acted.pressure + rate * config.k_p)
        water = max(0.0, acted.water_level - rate * config.k_l)
        power = acted.power + rate * config.k_pow - burn
    else:
        temperature = acted.temperature - config.cooling_rate * (acted.temperature - config.t0)
        pressure = acted.pressure - config.cooling_rate * (acted.pressure - config.p0)
        water = acted.water_level
        power = acted.power - burn
    temperature = min(config.t_max, max(config.t0, temperature))
    pressure = min(config.p_max, max(config.p0, pressure))
    power = min(MAX_POWER_MW, max(0.0, power))

    damage_causes = []
    if temperature > config.t_crit:
        damage_causes.append("temperature")
    if pressure > config.p_crit:
        damage_causes.append("pressure")
    if demand and acted.water_level <= 0.0:
        damage_causes.append("water")
    damaged = bool(damage_causes)

    next_state = PlantState(
        temperature=temperature,
        pressure=pressure,
        water_level=water,
        power=power,
        rods=rods,
        step_index=state.step_index + 1,
        damaged=damaged,
        energy_total=state.energy_total,
    )
    energy = next_state.power / ENERGY_DIVISOR if fission_active(next_state) else 0.0
    next_state = replace(next_state, energy_total=state.energy_total + energy)

    events = []
    now_active = fission_active(next_state)
    if not was_active and now_active:
        events.append(Event.FISSION_STARTED)
    if was_active and not now_active:
        events.append(Event.FISSION_STOPPED)
    if damaged:
        events.append(Event.DAMAGE_OCCURRED)
    if state.water_level > config.low_water_threshold >= water:
        events.append(Event.LOW_WATER_WARNING)

    return StepOutcome(
        next_state=next_state,
        energy_produced=energy,
        events=tuple(events),
        damage_causes=tuple(damage_causes),
    )


def feature_vector(state: PlantState) -> np.ndarray:
    """Encode the 8 features: [T, P, L, power, security, fuel, sustain, regulatory].

    Rod levels encode as up=0, medium=1, down=2 (security/fuel only take
    0 and 2). Ordering is fixed and versioned as plant-features/1.
    """
    return np.array(
        [
            state.temperature,
            state.pressure,
            state.water_level,
            state.power,
            float(state.rods.security),
            float(state.rods.fuel),
            float(state.rods.sustain),
            float(state.rods.regulatory),
        ]
    )


def state_from_features(
    features: np.ndarray,
    step_index: int = 0,
    damaged: bool = False,
    energy_total: float = 0.0,
) -> PlantState:
    """Inverse of feature_vector for the feature-visible part of the state."""
    if len(features) != NUM_FEATURES:
        raise PlantError(f"expected {NUM_FEATURES} features, got {len(features)}")
    return PlantState(
        temperature=float(features[0]),
        pressure=float(features[1]),
        water_level=float(features[2]),
        power=float(features[3]),
        rods=RodBank(
            security=RodLevel(int(features[4])),
            fuel=RodLevel(int(features[5])),
            sustain=RodLevel(int(features[6])),
            regulatory=RodLevel(int(features[7])),
        ),
        step_index=step_index,
        damaged=damaged,
        energy_total=energy_total,
    )

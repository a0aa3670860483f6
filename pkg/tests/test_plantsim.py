import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infopower.plantsim import (
    ENERGY_DIVISOR,
    Action,
    Event,
    PlantConfig,
    PlantConfigError,
    PlantState,
    RodBank,
    RodLevel,
    TerminalStateError,
    apply_action,
    feature_bounds,
    feature_vector,
    fission_active,
    new_plant,
    state_from_features,
)
from infopower.treepolicy import sample_states

CONFIG = PlantConfig()


def running_state(**overrides) -> PlantState:
    """A fission-capable state: security up, fuel down, water available."""
    base = dict(
        temperature=100.0,
        pressure=10.0,
        water_level=50.0,
        power=200.0,
        rods=RodBank(security=RodLevel.UP, fuel=RodLevel.DOWN, sustain=RodLevel.UP, regulatory=RodLevel.MEDIUM),
    )
    base.update(overrides)
    return PlantState(**base)


class TestNewPlant:
    def test_initial_state(self):
        state = new_plant(CONFIG)
        assert state.water_level == 100.0
        assert state.power == 0.0
        assert not state.damaged
        assert state.temperature == CONFIG.t0
        assert state.pressure == CONFIG.p0
        assert state.step_index == 0
        assert state.energy_total == 0.0
        assert state.rods == RodBank()

    def test_invalid_rate_ordering_rejected(self):
        bad = dataclasses.replace(CONFIG, r_up=1.2)  # r_up >= r_med
        with pytest.raises(PlantConfigError, match="r_up"):
            new_plant(bad)

    def test_crit_outside_clamp_range_rejected(self):
        bad = dataclasses.replace(CONFIG, t_crit=1200.0)
        with pytest.raises(PlantConfigError, match="t_crit"):
            new_plant(bad)

    def test_fresh_plant_has_no_fission(self):
        # fuel rods start up, so the precondition set cannot hold
        assert not fission_active(new_plant(CONFIG))


class TestFissionActive:
    def test_security_down_stops_fission(self):
        state = running_state(rods=RodBank(security=RodLevel.DOWN, fuel=RodLevel.DOWN))
        assert not fission_active(state)

    def test_active_when_preconditions_hold(self):
        state = running_state()
        assert fission_active(state)
        # cross-check: an active step produces energy
        outcome = apply_action(state, Action.SKIP, CONFIG)
        assert outcome.energy_produced > 0.0

    def test_damaged_is_never_active(self):
        state = dataclasses.replace(running_state(), damaged=True)
        assert not fission_active(state)

    def test_no_water_is_not_active(self):
        assert not fission_active(running_state(water_level=0.0))


class TestApplyAction:
    def test_energy_is_power_over_360_at_full_power(self):
        state = running_state(power=1000.0)
        outcome = apply_action(state, Action.SKIP, CONFIG)
        assert outcome.energy_produced == pytest.approx(1000.0 / 360.0, abs=1e-9)

    def test_fission_stopped_cools_and_produces_nothing(self):
        state = running_state(rods=RodBank(security=RodLevel.DOWN, fuel=RodLevel.DOWN))
        outcome = apply_action(state, Action.SKIP, CONFIG)
        assert outcome.energy_produced == 0.0
        assert outcome.next_state.temperature <= state.temperature
        assert outcome.next_state.pressure <= state.pressure

    def test_water_stays_still_without_fission(self):
        state = running_state(rods=RodBank(security=RodLevel.DOWN, fuel=RodLevel.DOWN))
        outcome = apply_action(state, Action.SKIP, CONFIG)
        assert outcome.next_state.water_level == state.water_level

    def test_lowering_regulatory_rods_accelerates(self):
        state = running_state()
        down = apply_action(state, Action.REGULATORY_DOWN, CONFIG).next_state
        up = apply_action(state, Action.REGULATORY_UP, CONFIG).next_state
        assert down.temperature - state.temperature > up.temperature - state.temperature
        assert down.pressure - state.pressure > up.pressure - state.pressure
        assert down.water_level < up.water_level

    def test_add_water_clamps_at_100(self):
        state = running_state(
            water_level=95.0, rods=RodBank(security=RodLevel.DOWN, fuel=RodLevel.DOWN)
        )
        outcome = apply_action(state, Action.ADD_WATER, CONFIG)
        assert outcome.next_state.water_level == 100.0

    def test_dry_demand_damages_on_the_following_step(self):
        # water exactly one active step from empty: r_med * k_l
        state = running_state(water_level=CONFIG.r_med * CONFIG.k_l)
        first = apply_action(state, Action.SKIP, CONFIG)
        assert first.next_state.water_level == 0.0
        assert not first.next_state.damaged
        second = apply_action(first.next_state, Action.SKIP, CONFIG)
        assert second.next_state.damaged
        assert Event.DAMAGE_OCCURRED in second.events
        assert second.damage_causes == ("water",)
        assert second.energy_produced == 0.0

    def test_add_water_rescues_a_dry_plant(self):
        state = running_state(water_level=0.0)
        outcome = apply_action(state, Action.ADD_WATER, CONFIG)
        assert not outcome.next_state.damaged
        assert outcome.energy_produced > 0.0

    def test_temperature_damage(self):
        state = running_state(temperature=895.0)
        outcome = apply_action(state, Action.SKIP, CONFIG)  # +30 at r_med
        assert outcome.next_state.damaged
        assert "temperature" in outcome.damage_causes
        assert outcome.energy_produced == 0.0

    def test_simultaneous_causes_report_temperature_first(self):
        state = running_state(temperature=895.0, pressure=445.0)
        outcome = apply_action(state, Action.SKIP, CONFIG)
        assert outcome.damage_causes == ("temperature", "pressure")
        assert outcome.primary_damage_cause == "temperature"

    def test_action_on_damaged_plant_raises(self):
        state = dataclasses.replace(running_state(), damaged=True)
        with pytest.raises(TerminalStateError):
            apply_action(state, Action.SKIP, CONFIG)

    def test_action_past_episode_end_raises(self):
        state = dataclasses.replace(running_state(), step_index=CONFIG.episode_steps)
        with pytest.raises(TerminalStateError):
            apply_action(state, Action.SKIP, CONFIG)

    def test_fission_start_and_stop_events(self):
        start = apply_action(new_plant(CONFIG), Action.FUEL_DOWN, CONFIG)
        assert Event.FISSION_STARTED in start.events
        stop = apply_action(start.next_state, Action.SECURITY_DOWN, CONFIG)
        assert Event.FISSION_STOPPED in stop.events

    def test_low_water_warning_on_crossing(self):
        state = running_state(water_level=30.0)  # -8 at r_med crosses 25
        outcome = apply_action(state, Action.SKIP, CONFIG)
        assert Event.LOW_WATER_WARNING in outcome.events
        again = apply_action(outcome.next_state, Action.SKIP, CONFIG)
        assert Event.LOW_WATER_WARNING not in again.events


class TestFeatureVector:
    def test_initial_encoding(self):
        vec = feature_vector(new_plant(CONFIG))
        assert vec.tolist() == [CONFIG.t0, CONFIG.p0, 100.0, 0.0, 0.0, 0.0, 0.0, 0.0]

    def test_sustain_medium_encodes_as_one(self):
        state = running_state(rods=RodBank(sustain=RodLevel.MEDIUM))
        assert feature_vector(state)[6] == 1.0

    def test_round_trip_on_random_states(self):
        for state in sample_states(CONFIG, 1000, seed=7):
            assert state_from_features(feature_vector(state)) == state


class TestInvariants:
    def test_clamping_fuzz(self):
        rng = np.random.default_rng(123)
        low, high = feature_bounds(CONFIG)
        states = sample_states(CONFIG, 10_000, seed=99)
        for state in states:
            action = Action(int(rng.integers(12)))
            outcome = apply_action(state, action, CONFIG)
            vec = feature_vector(outcome.next_state)
            assert np.all(vec[:4] >= low[:4] - 1e-12)
            assert np.all(vec[:4] <= high[:4] + 1e-12)

    def test_trajectory_fuzz_damage_energy_and_cooling(self):
        rng = np.random.default_rng(21)
        for _ in range(500):
            state = new_plant(CONFIG)
            while not state.damaged and state.step_index < CONFIG.episode_steps:
                action = Action(int(rng.integers(12)))
                outcome = apply_action(state, action, CONFIG)
                nxt = outcome.next_state
                # energy law: power/360 exactly while fission runs, else zero
                if fission_active(nxt):
                    assert outcome.energy_produced == nxt.power / ENERGY_DIVISOR
                else:
                    assert outcome.energy_produced == 0.0
                if nxt.damaged:
                    assert outcome.energy_produced == 0.0
                state = nxt
            if state.damaged:
                with pytest.raises(TerminalStateError):
                    apply_action(state, Action.SKIP, CONFIG)

    def test_cooling_floor(self):
        rng = np.random.default_rng(5)
        quiet = RodBank(security=RodLevel.DOWN, fuel=RodLevel.DOWN)
        for state in sample_states(CONFIG, 2000, seed=17):
            state = dataclasses.replace(state, rods=quiet)
            action = Action(int(rng.integers(12)))
            if action == Action.SECURITY_UP:
                action = Action.SKIP
            nxt = apply_action(state, action, CONFIG).next_state
            assert CONFIG.t0 <= nxt.temperature <= state.temperature
            assert CONFIG.p0 <= nxt.pressure <= state.pressure

    def test_determinism_bitwise(self):
        for state in sample_states(CONFIG, 200, seed=3):
            for action in (Action.SKIP, Action.REGULATORY_DOWN, Action.ADD_WATER):
                a = apply_action(state, action, CONFIG)
                b = apply_action(state, action, CONFIG)
                assert a == b
                assert feature_vector(a.next_state).tobytes() == feature_vector(b.next_state).tobytes()

    @given(
        water=st.floats(min_value=0.0, max_value=100.0),
        power=st.floats(min_value=0.0, max_value=1000.0),
        temperature=st.floats(min_value=25.0, max_value=1000.0),
        pressure=st.floats(min_value=1.0, max_value=500.0),
        action=st.sampled_from(list(Action)),
    )
    @settings(max_examples=200)
    def test_bounds_hold_for_arbitrary_states(self, water, power, temperature, pressure, action):
        state = running_state(
            water_level=water, power=power, temperature=temperature, pressure=pressure
        )
        nxt = apply_action(state, action, CONFIG).next_state
        assert CONFIG.t0 <= nxt.temperature <= CONFIG.t_max
        assert CONFIG.p0 <= nxt.pressure <= CONFIG.p_max
        assert 0.0 <= nxt.water_level <= 100.0
        assert 0.0 <= nxt.power <= 1000.0


class TestSerialization:
    def test_snapshot_field_order_is_stable(self):
        doc = new_plant(CONFIG).to_json_dict()
        assert list(doc) == [
            "schema",
            "temperature",
            "pressure",
            "water_level",
            "power",
            "rods",
            "step_index",
            "damaged",
            "energy_total",
        ]

    def test_state_round_trip(self):
        for state in sample_states(CONFIG, 50, seed=11):
            assert PlantState.from_json_dict(state.to_json_dict()) == state

    def test_config_file_round_trip(self, tmp_path):
        path = tmp_path / "plant.json"
        CONFIG.to_file(path)
        loaded = PlantConfig.from_file(path)
        assert loaded == CONFIG
        doc = json.loads(path.read_text())
        assert doc["schema"] == "plant-config/1"

    def test_bad_schema_rejected(self):
        with pytest.raises(PlantConfigError, match="schema"):
            PlantConfig.from_json_dict({"schema": "plant-config/99"})

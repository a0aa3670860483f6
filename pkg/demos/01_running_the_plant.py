"""Drive the reactor by hand: start fission, watch it heat up, save it.

Run: python3 demos/01_running_the_plant.py
"""

from infopower import Action, PlantConfig, apply_action, fission_active, new_plant


def show(state, note=""):
    print(
        f"step {state.step_index:2d}  T={state.temperature:6.1f}  P={state.pressure:6.1f}  "
        f"L={state.water_level:5.1f}  power={state.power:6.1f}  "
        f"fission={'on ' if fission_active(state) else 'off'}  "
        f"energy={state.energy_total:6.2f}  {note}"
    )


config = PlantConfig()
state = new_plant(config)
show(state, "<- fresh plant, all rods up")

# fission needs the security rods up and the fuel rods down
outcome = apply_action(state, Action.FUEL_DOWN, config)
state = outcome.next_state
show(state, f"<- fuel rods down, events={list(outcome.events)}")

# lowering the regulatory rods accelerates everything
state = apply_action(state, Action.REGULATORY_DOWN, config).next_state
show(state, "<- regulatory rods down: faster heating, more power")

for _ in range(6):
    outcome = apply_action(state, Action.SKIP, config)
    state = outcome.next_state
    note = f"events={list(outcome.events)}" if outcome.events else ""
    show(state, note)

print("\nwater is draining fast; topping it up...")
state = apply_action(state, Action.ADD_WATER, config).next_state
show(state, "<- added water")

print("\nnow letting it cook without care (regulatory rods still down):")
while not state.damaged:
    outcome = apply_action(state, Action.SKIP, config)
    state = outcome.next_state
    if outcome.events:
        show(state, f"events={list(outcome.events)} causes={list(outcome.damage_causes)}")

print(f"\nthe plant is damaged for good after {state.step_index} steps; "
      f"total energy banked: {state.energy_total:.2f}")

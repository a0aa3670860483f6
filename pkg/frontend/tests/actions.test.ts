import { describe, expect, it } from "vitest";

import { ACTIONS, actionByName } from "../src/protocol.js";

describe("the 12 action controls", () => {
  it("cover exactly the server's stable ids 0-11", () => {
    expect(ACTIONS).toHaveLength(12);
    expect(ACTIONS.map((a) => a.id)).toEqual([0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11]);
  });

  it("use the server's wire names", () => {
    expect(ACTIONS.map((a) => a.name)).toEqual([
      "security_up",
      "security_down",
      "fuel_up",
      "fuel_down",
      "sustain_up",
      "sustain_medium",
      "sustain_down",
      "regulatory_up",
      "regulatory_medium",
      "regulatory_down",
      "add_water",
      "skip",
    ]);
  });

  it("group into rod banks plus the two plant actions", () => {
    const byGroup = new Map<string, number>();
    for (const action of ACTIONS) {
      byGroup.set(action.group, (byGroup.get(action.group) ?? 0) + 1);
    }
    expect(Object.fromEntries(byGroup)).toEqual({
      security: 2,
      fuel: 2,
      sustain: 3,
      regulatory: 3,
      plant: 2,
    });
  });

  it("resolve by name", () => {
    expect(actionByName("add_water").id).toBe(10);
    expect(() => actionByName("warp_core")).toThrow();
  });
});

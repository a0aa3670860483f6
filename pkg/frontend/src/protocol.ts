/**
 * Typed mirror of the session-service JSON protocol.
 *
 * Every shape here matches a server payload field for field; the panel
 * renders these verbatim and never derives plant behaviour on its own.
 */

export type Phase = "briefing" | "running" | "quiz" | "done";
export type XaiMode = "classical" | "user-aware";
export type RodPosition = "up" | "medium" | "down";

export interface RodState {
  security: RodPosition;
  fuel: RodPosition;
  sustain: RodPosition;
  regulatory: RodPosition;
}

export interface PlantSnapshot {
  schema: string;
  temperature: number;
  pressure: number;
  water_level: number;
  power: number;
  rods: RodState;
  step_index: number;
  damaged: boolean;
  energy_total: number;
}

export interface LastAction {
  action: number;
  action_name: string;
  source: "user" | "timer";
  energy: number;
  events: string[];
  damage_causes: string[];
  state: PlantSnapshot;
}

export interface StateUpdate {
  schema: string;
  type: "state_update";
  session_id: string;
  phase: Phase;
  step: number;
  total_steps: number;
  step_seconds: number;
  deadline_seconds: number | null;
  state: PlantSnapshot;
  score: number;
  last_action: LastAction | null;
}

export interface Suggestion {
  action: number;
  action_name: string;
  leaf_id: number;
  path: number[];
  text: string;
}

export interface Explanation {
  schema: string;
  node_id: number | null;
  feature: number | null;
  op: string | null;
  value: number | null;
  mode: XaiMode;
  foil: number | null;
  text: string;
}

export interface ProtocolErrorPayload {
  code: string;
  message: string;
}

export type ServerMessage =
  | StateUpdate
  | { type: "suggestion"; suggestion: Suggestion }
  | { type: "explanation"; explanation: Explanation }
  | { type: "error"; error: ProtocolErrorPayload };

export interface QuizSheetItem {
  item_id: string;
  prompt: string;
  choices: string[];
}

export interface QuizSheet {
  schema: string;
  items: QuizSheetItem[];
  what_if: QuizSheetItem[];
}

export interface SessionReport {
  schema: string;
  session_id: string;
  mode: XaiMode;
  m1_final_score: number;
  m2_learned_per_feature: number[];
  m2_rule_items_correct: number;
  m2_what_count: number;
  m2_why_count: number;
  m2_interaction_counts: number[];
  m3_what_if_correct: number;
  m4_m5_questionnaire: Record<string, number>;
  a_m: number;
  weights: number[];
  ip_user: number;
}

/** The 12 operator actions, ids matching the server's stable 0-11 order. */
export interface ActionSpec {
  id: number;
  name: string;
  label: string;
  group: "security" | "fuel" | "sustain" | "regulatory" | "plant";
}

export const ACTIONS: ActionSpec[] = [
  { id: 0, name: "security_up", label: "Security rods up", group: "security" },
  { id: 1, name: "security_down", label: "Security rods down", group: "security" },
  { id: 2, name: "fuel_up", label: "Fuel rods up", group: "fuel" },
  { id: 3, name: "fuel_down", label: "Fuel rods down", group: "fuel" },
  { id: 4, name: "sustain_up", label: "Sustain rods up", group: "sustain" },
  { id: 5, name: "sustain_medium", label: "Sustain rods medium", group: "sustain" },
  { id: 6, name: "sustain_down", label: "Sustain rods down", group: "sustain" },
  { id: 7, name: "regulatory_up", label: "Regulatory rods up", group: "regulatory" },
  { id: 8, name: "regulatory_medium", label: "Regulatory rods medium", group: "regulatory" },
  { id: 9, name: "regulatory_down", label: "Regulatory rods down", group: "regulatory" },
  { id: 10, name: "add_water", label: "Add water", group: "plant" },
  { id: 11, name: "skip", label: "Skip", group: "plant" },
];

export function actionByName(name: string): ActionSpec {
  const spec = ACTIONS.find((a) => a.name === name);
  if (!spec) throw new Error(`unknown action ${name}`);
  return spec;
}

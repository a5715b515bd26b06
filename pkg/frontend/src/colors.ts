/** Pure lookups keyed by the service's decision letters.
 *
 * This module (and the API types) is the only place the letter codes appear
 * in source: everything else passes response values through these maps, so
 * no decision can originate client-side.
 */

import type { DecisionLetter } from "./types.js";

/** Table-cell palette: escalate blue, stay yellow, de-escalate purple. */
export const CELL_COLORS: Record<DecisionLetter, string> = {
  E: "#2b6cb0",
  S: "#d4a72c",
  D: "#6b46c1",
  DU: "#44337a",
  STOP: "#9b2c2c",
};

export const CELL_TEXT_COLORS: Record<DecisionLetter, string> = {
  E: "#ffffff",
  S: "#1a1a1a",
  D: "#ffffff",
  DU: "#ffffff",
  STOP: "#ffffff",
};

export const DECISION_LABELS: Record<DecisionLetter, string> = {
  E: "Escalate",
  S: "Stay",
  D: "De-escalate",
  DU: "De-escalate & exclude",
  STOP: "Stop trial",
};

export function cellColor(letter: DecisionLetter): string {
  return CELL_COLORS[letter];
}

export function cellTextColor(letter: DecisionLetter): string {
  return CELL_TEXT_COLORS[letter];
}

export function decisionLabel(letter: DecisionLetter): string {
  return DECISION_LABELS[letter];
}

/** Diverging palette for diff heatmaps: positive = more de-escalation. */
export function diffColor(value: number, maxAbs: number): string {
  if (maxAbs <= 0 || value === 0) {
    return "#f2f2f2";
  }
  const t = Math.min(Math.abs(value) / maxAbs, 1);
  const strength = Math.round(235 - 135 * t);
  return value > 0 ? `rgb(${strength}, 235, ${strength})` : `rgb(235, ${strength}, ${strength})`;
}

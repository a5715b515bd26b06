/** Payload types of the dosefind HTTP API (the only source of decisions). */

/** Per-cohort decision letter as returned by the service; never computed here. */
export type DecisionLetter = "E" | "S" | "D" | "DU" | "STOP";

export interface DesignSpec {
  family: string;
  p_t: number;
  eps1?: number;
  eps2?: number;
  prior_a?: number;
  prior_b?: number;
  safety_threshold?: number;
  safety_min_n?: number;
  k1?: number;
  k2?: number;
  delta?: number;
  skeleton?: number[];
  prior_sd?: number;
  no_skip?: boolean;
}

export interface DesignCatalogEntry {
  name: string;
  params: { name: string; type: string; default?: unknown; note?: string }[];
}

export interface DesignCatalog {
  designs: DesignCatalogEntry[];
  common_params: { name: string; type: string; default?: unknown; required?: boolean }[];
  names: string[];
}

export interface DecisionResponse {
  design: DesignSpec;
  x: number;
  n: number;
  decision: DecisionLetter;
  diagnostics: Diagnostics;
}

export interface Diagnostics {
  posterior?: { alpha: number; beta: number; mean: number; sd: number };
  upm?: Record<string, number>;
  tiles?: { lo: number; hi: number; decision: DecisionLetter; upm: number }[];
  intervals?: Record<string, { lo: number; hi: number }>;
  phat?: number;
  bounds?: Record<string, number>;
  safety?: { prob_above_target: number; threshold: number; min_n: number };
}

export interface TableResponse {
  design: DesignSpec;
  n_max: number;
  columns: number[];
  rows: { x: number; cells: (DecisionLetter | null)[] }[];
}

export interface CohortOutcome {
  dose: number; // 1-based
  dlt_count: number;
  cohort_size: number;
  x: number;
  n: number;
  decision: DecisionLetter;
  next_dose: number | null;
  newly_excluded: number[];
  capped: boolean;
  stop_reason: string | null;
  declared_mtd: number | null;
}

export interface DoseTallyView {
  dose: number;
  x: number;
  n: number;
}

export interface SessionState {
  id: string;
  design: DesignSpec;
  status: "active" | "stopped" | "completed";
  current_dose: number | null;
  num_doses: number;
  sample_size: number;
  cohort_size: number;
  n_treated: number;
  tallies: DoseTallyView[];
  excluded: number[];
  selected: number | null;
  stop_reason: string | null;
  seq: number;
  events: unknown[];
}

export interface CohortResponse {
  outcome: CohortOutcome;
  state: SessionState;
}

export interface WhatIfResponse {
  outcome: CohortOutcome;
}

export interface WhatIfEntry {
  dlt_count: number;
  outcome: CohortOutcome;
}

export interface ApiError {
  code: string;
  message: string;
}

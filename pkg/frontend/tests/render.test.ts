/** Snapshot and conformance tests against captured service responses.
 *
 * The fixtures under tests/fixtures/ are verbatim service output (see
 * scripts/capture_fixtures.py); the renderers must surface those decisions
 * letter-for-letter.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  renderDecisionBanner,
  renderDecisionTable,
  renderDiagnostics,
  renderTableDiffHeatmap,
  renderTrialBoard,
  renderWhatIfPanel,
  renderWizard,
} from "../src/render";
import type {
  CohortResponse,
  DecisionResponse,
  DesignCatalog,
  SessionState,
  TableResponse,
  WhatIfEntry,
} from "../src/types";

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(__dirname, "fixtures", name), "utf-8")) as T;
}

const table = fixture<TableResponse>("table_mtpi2_pt030_n15.json");
const boinTable = fixture<TableResponse>("table_boin-lambda_pt030_n15.json");
const whatif = fixture<WhatIfEntry[]>("whatif_n3.json");
const decision = fixture<DecisionResponse>("decision_3of6.json");
const cohort = fixture<CohortResponse>("cohort_1of3.json");
const session = fixture<SessionState>("session_state.json");
const catalog = fixture<DesignCatalog>("designs.json");

function cellDecisions(html: string): Map<string, string> {
  const out = new Map<string, string>();
  const re = /data-x="(\d+)" data-n="(\d+)" data-decision="(\w+)"/g;
  for (const m of html.matchAll(re)) {
    out.set(`${m[1]}:${m[2]}`, m[3]);
  }
  return out;
}

describe("decision-table browser", () => {
  const html = renderDecisionTable(table);

  it("matches the snapshot", () => {
    expect(html).toMatchSnapshot();
  });

  it("renders every service-provided cell of the 15-patient grid verbatim", () => {
    const rendered = cellDecisions(html);
    let checked = 0;
    for (const row of table.rows) {
      table.columns.forEach((n, idx) => {
        const cell = row.cells[idx];
        if (cell === null) {
          expect(rendered.has(`${row.x}:${n}`)).toBe(false);
        } else {
          expect(rendered.get(`${row.x}:${n}`)).toBe(cell);
          checked += 1;
        }
      });
    }
    expect(checked).toBeGreaterThan(100); // the full lower-triangular grid
  });

  it("highlights the requested tally cell", () => {
    const hot = renderDecisionTable(table, { x: 1, n: 3 });
    expect(hot).toContain('class="cell cell-highlight" data-x="1" data-n="3"');
  });
});

describe("what-if panel", () => {
  const html = renderWhatIfPanel(whatif, 3);

  it("matches the snapshot", () => {
    expect(html).toMatchSnapshot();
  });

  it("shows the service outcome for each possible DLT count", () => {
    for (const entry of whatif) {
      const re = new RegExp(`data-dlt="${entry.dlt_count}" data-decision="(\\w+)"`);
      expect(html.match(re)?.[1]).toBe(entry.outcome.decision);
    }
  });

  it("agrees with the fixed decision-table column for n=3", () => {
    const col = cellDecisions(renderDecisionTable(table));
    for (const entry of whatif) {
      const expected = col.get(`${entry.dlt_count}:3`);
      expect(entry.outcome.decision).toBe(expected);
    }
  });

  it("at the lowest dose the exclusion cell materializes as a trial stop", () => {
    const dose1 = fixture<WhatIfEntry[]>("whatif_n3_dose1.json");
    const col = cellDecisions(renderDecisionTable(table));
    for (const entry of dose1) {
      const expected = col.get(`${entry.dlt_count}:3`)!;
      const got = entry.outcome.decision;
      if (expected === "DU") {
        expect(got).toBe("STOP"); // nothing below dose 1 to fall back to
      } else {
        expect(got).toBe(expected);
      }
    }
  });
});

describe("decision banner", () => {
  it("renders the cohort outcome verbatim", () => {
    const html = renderDecisionBanner(cohort.outcome);
    expect(html).toContain(`data-decision="${cohort.outcome.decision}"`);
    expect(html).toMatchSnapshot();
  });

  it("renders diagnostics from the decision endpoint", () => {
    const html = renderDiagnostics(decision.diagnostics);
    expect(html).toContain("Subinterval UPMs");
    expect(html).toMatchSnapshot();
  });
});

describe("trial board", () => {
  it("renders tallies, current dose and progress", () => {
    const html = renderTrialBoard(session);
    expect(html).toContain("1/3");
    expect(html).toContain("current");
    expect(html).toContain(`${session.n_treated}/${session.sample_size} patients treated`);
    expect(html).toMatchSnapshot();
  });
});

describe("diff heatmap", () => {
  it("sums the per-cell score differences of the two service tables", () => {
    const html = renderTableDiffHeatmap(table, boinTable);
    const score: Record<string, number> = { E: 1, S: 2, D: 3, DU: 3, STOP: 3 };
    let want = 0;
    for (const row of table.rows) {
      if (row.x === 0) {
        continue;
      }
      table.columns.forEach((n, idx) => {
        const a = row.cells[idx];
        const b = boinTable.rows[row.x].cells[idx];
        if (a !== null && b !== null) {
          want += score[a] - score[b];
        }
      });
    }
    expect(html).toContain(`sum ${want}`);
    expect(html).toMatchSnapshot();
  });
});

describe("wizard", () => {
  it("offers every catalog design", () => {
    const html = renderWizard(catalog);
    for (const d of catalog.designs) {
      expect(html).toContain(`<option value="${d.name}">`);
    }
    expect(html).toMatchSnapshot();
  });
});

/** Pure HTML renderers (string in, string out; no fetching, no state).
 *
 * Every decision letter rendered here is a value received from the service;
 * these functions only lay the responses out.
 */

import { cellColor, cellTextColor, decisionLabel, diffColor } from "./colors.js";
import type {
  CohortOutcome,
  DesignCatalog,
  Diagnostics,
  SessionState,
  TableResponse,
  WhatIfEntry,
} from "./types.js";

export function escapeHtml(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function fmt(value: number, digits = 4): string {
  return Number(value.toFixed(digits)).toString();
}

// -- decision banner ---------------------------------------------------------

export function renderDecisionBanner(outcome: CohortOutcome): string {
  const letter = outcome.decision;
  const move =
    outcome.next_dose === null
      ? "trial over"
      : outcome.next_dose === outcome.dose
        ? `remain at dose ${outcome.dose}`
        : `next cohort at dose ${outcome.next_dose}`;
  const extras: string[] = [];
  if (outcome.capped) {
    extras.push("move capped by the dose grid or an exclusion");
  }
  if (outcome.newly_excluded.length > 0) {
    extras.push(`doses ${outcome.newly_excluded.join(", ")} excluded`);
  }
  if (outcome.declared_mtd !== null) {
    extras.push(`declared MTD: dose ${outcome.declared_mtd}`);
  }
  return [
    `<div class="banner" style="background:${cellColor(letter)};color:${cellTextColor(letter)}"`,
    ` data-decision="${escapeHtml(letter)}">`,
    `<span class="banner-letter">${escapeHtml(letter)}</span>`,
    `<span class="banner-label">${escapeHtml(decisionLabel(letter))}</span>`,
    `<span class="banner-detail">${escapeHtml(outcome.x)}/${escapeHtml(outcome.n)} DLTs at dose ${escapeHtml(outcome.dose)}; ${escapeHtml(move)}</span>`,
    extras.length > 0 ? `<span class="banner-extra">${escapeHtml(extras.join("; "))}</span>` : "",
    `</div>`,
  ].join("");
}

export function renderDiagnostics(diag: Diagnostics): string {
  const parts: string[] = [];
  if (diag.upm) {
    const rows = Object.entries(diag.upm)
      .map(([k, v]) => `<tr><td>${escapeHtml(decisionLabel(k as never))}</td><td>${fmt(v)}</td></tr>`)
      .join("");
    parts.push(`<table class="diag"><caption>Unit probability mass</caption>${rows}</table>`);
  }
  if (diag.tiles) {
    const rows = diag.tiles
      .map(
        (t) =>
          `<tr><td>(${fmt(t.lo, 3)}, ${fmt(t.hi, 3)})</td>` +
          `<td style="color:${cellColor(t.decision)}">${escapeHtml(t.decision)}</td><td>${fmt(t.upm)}</td></tr>`,
      )
      .join("");
    parts.push(`<table class="diag"><caption>Subinterval UPMs</caption>${rows}</table>`);
  }
  if (diag.bounds && diag.phat !== undefined) {
    const bounds = Object.entries(diag.bounds)
      .map(([k, v]) => `${escapeHtml(k)}=${fmt(v, 3)}`)
      .join(", ");
    parts.push(`<p class="diag">x/n = ${fmt(diag.phat, 3)} against ${bounds}</p>`);
  }
  if (diag.safety) {
    parts.push(
      `<p class="diag">Pr(p &gt; target | data) = ${fmt(diag.safety.prob_above_target)} ` +
        `(exclusion above ${fmt(diag.safety.threshold, 3)}, needs ${diag.safety.min_n}+ patients)</p>`,
    );
  }
  return parts.join("");
}

// -- live trial board ---------------------------------------------------------

export function renderTrialBoard(state: SessionState): string {
  const excluded = new Set(state.excluded);
  const rows = state.tallies
    .map((t) => {
      const marks: string[] = [];
      if (t.dose === state.current_dose) {
        marks.push("current");
      }
      if (excluded.has(t.dose)) {
        marks.push("excluded");
      }
      if (t.dose === state.selected) {
        marks.push("selected MTD");
      }
      return (
        `<tr class="${excluded.has(t.dose) ? "dose-excluded" : ""}">` +
        `<td>dose ${t.dose}</td><td>${t.x}/${t.n}</td>` +
        `<td>${escapeHtml(marks.join(", "))}</td></tr>`
      );
    })
    .join("");
  const footer =
    state.status === "active"
      ? `${state.n_treated}/${state.sample_size} patients treated`
      : `trial ${escapeHtml(state.status)} (${escapeHtml(state.stop_reason ?? "")}); ` +
        (state.selected === null ? "no dose selected" : `selected MTD: dose ${state.selected}`);
  return (
    `<table class="board"><thead><tr><th>dose</th><th>DLTs</th><th></th></tr></thead>` +
    `<tbody>${rows}</tbody></table><p class="board-footer">${footer}</p>`
  );
}

// -- what-if panel --------------------------------------------------------------

export function renderWhatIfPanel(entries: WhatIfEntry[], cohortSize: number): string {
  const cells = entries
    .map((e) => {
      const letter = e.outcome.decision;
      return (
        `<div class="whatif-cell" data-dlt="${e.dlt_count}" data-decision="${escapeHtml(letter)}"` +
        ` style="background:${cellColor(letter)};color:${cellTextColor(letter)}">` +
        `<span class="whatif-count">${e.dlt_count}</span>` +
        `<span class="whatif-letter">${escapeHtml(letter)}</span>` +
        `<span class="whatif-label">${escapeHtml(decisionLabel(letter))}</span></div>`
      );
    })
    .join("");
  return (
    `<div class="whatif"><p>If the next cohort of ${cohortSize} shows k DLTs, the decision would be:</p>` +
    `<input type="range" id="whatif-slider" min="0" max="${entries.length - 1}" value="0" ` +
    `list="whatif-ticks"/><div class="whatif-row">${cells}</div></div>`
  );
}

// -- decision-table browser --------------------------------------------------------

export function renderDecisionTable(table: TableResponse, highlight?: { x: number; n: number }): string {
  const head = table.columns.map((n) => `<th>${n}</th>`).join("");
  const body = table.rows
    .map((row) => {
      const cells = table.columns
        .map((n, idx) => {
          const letter = row.cells[idx];
          if (letter === null) {
            return `<td class="empty"></td>`;
          }
          const hot = highlight && highlight.x === row.x && highlight.n === n ? " cell-highlight" : "";
          return (
            `<td class="cell${hot}" data-x="${row.x}" data-n="${n}" data-decision="${escapeHtml(letter)}"` +
            ` style="background:${cellColor(letter)};color:${cellTextColor(letter)}">${escapeHtml(letter)}</td>`
          );
        })
        .join("");
      return `<tr><th>${row.x}</th>${cells}</tr>`;
    })
    .join("");
  const design = table.design;
  const caption =
    `${escapeHtml(design.family)} decisions for target ${fmt(design.p_t, 3)}` +
    ` (margins ${fmt(design.eps1 ?? 0, 3)}/${fmt(design.eps2 ?? 0, 3)}), columns = patients treated`;
  return (
    `<table class="decision-table"><caption>${caption}</caption>` +
    `<thead><tr><th>x \\ n</th>${head}</tr></thead><tbody>${body}</tbody></table>`
  );
}

/** Per-cell score difference of two fixed tables (arithmetic on the letters
 * the service returned; positive = first design more de-escalation-prone). */
export function renderTableDiffHeatmap(a: TableResponse, b: TableResponse): string {
  const score: Record<string, number> = { E: 1, S: 2, D: 3, DU: 3, STOP: 3 };
  const nMax = Math.min(a.n_max, b.n_max);
  const values: { x: number; n: number; v: number }[] = [];
  for (let n = 1; n <= nMax; n += 1) {
    for (let x = 1; x <= n; x += 1) {
      const ca = a.rows[x].cells[n - 1];
      const cb = b.rows[x].cells[n - 1];
      if (ca !== null && cb !== null) {
        values.push({ x, n, v: score[ca] - score[cb] });
      }
    }
  }
  const maxAbs = values.reduce((m, e) => Math.max(m, Math.abs(e.v)), 0);
  const total = values.reduce((s, e) => s + e.v, 0);
  const byCell = new Map(values.map((e) => [`${e.x}:${e.n}`, e.v]));
  const head = Array.from({ length: nMax }, (_, i) => `<th>${i + 1}</th>`).join("");
  let body = "";
  for (let x = 0; x <= nMax; x += 1) {
    let row = `<th>${x}</th>`;
    for (let n = 1; n <= nMax; n += 1) {
      const v = byCell.get(`${x}:${n}`);
      row +=
        v === undefined
          ? `<td class="empty"></td>`
          : `<td class="cell" data-diff="${v}" style="background:${diffColor(v, maxAbs)}">${v === 0 ? "" : v}</td>`;
    }
    body += `<tr>${row}</tr>`;
  }
  return (
    `<table class="diff-heatmap"><caption>score difference ` +
    `${escapeHtml(a.design.family)} &minus; ${escapeHtml(b.design.family)} (sum ${total}; ` +
    `positive = first design de-escalates more)</caption>` +
    `<thead><tr><th>x \\ n</th>${head}</tr></thead><tbody>${body}</tbody></table>`
  );
}

// -- wizard -------------------------------------------------------------------------

export function renderWizard(catalog: DesignCatalog): string {
  const options = catalog.designs
    .map((d) => `<option value="${escapeHtml(d.name)}">${escapeHtml(d.name)}</option>`)
    .join("");
  return `
<form id="wizard" class="wizard">
  <label>design <select id="wiz-design">${options}</select></label>
  <label>target p_T <input id="wiz-pt" type="number" step="0.01" min="0.01" max="0.99" value="0.3"/></label>
  <label>eps1 <input id="wiz-eps1" type="number" step="0.005" min="0" max="0.3" value="0.05"/></label>
  <label>eps2 <input id="wiz-eps2" type="number" step="0.005" min="0" max="0.3" value="0.05"/></label>
  <label>doses <input id="wiz-doses" type="number" min="1" max="20" value="6"/></label>
  <label>sample size <input id="wiz-n" type="number" min="3" max="200" value="30"/></label>
  <label>cohort size <input id="wiz-cohort" type="number" min="1" max="12" value="3"/></label>
  <label>start dose <input id="wiz-start" type="number" min="1" value="1"/></label>
  <button type="submit">start trial session</button>
</form>`;
}

export function renderError(message: string): string {
  return `<div class="error">${escapeHtml(message)} <button class="retry" data-retry="1">retry</button></div>`;
}

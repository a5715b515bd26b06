/** Browser wiring: state lives on the server; this file only collects input,
 * calls the API and paints the rendered responses.
 */

import { ApiClient, ServiceError } from "./api.js";
import {
  renderDecisionBanner,
  renderDecisionTable,
  renderDiagnostics,
  renderError,
  renderTableDiffHeatmap,
  renderTrialBoard,
  renderWhatIfPanel,
  renderWizard,
} from "./render.js";
import type { DesignSpec, SessionState, WhatIfEntry } from "./types.js";

const SESSION_KEY = "dosefind-session-id";
const API_KEY = "dosefind-api-url";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

function designFromWizard(): DesignSpec {
  const family = (el("wiz-design") as HTMLSelectElement).value;
  return {
    family,
    p_t: Number((el("wiz-pt") as HTMLInputElement).value),
    eps1: Number((el("wiz-eps1") as HTMLInputElement).value),
    eps2: Number((el("wiz-eps2") as HTMLInputElement).value),
  };
}

class App {
  api: ApiClient;
  session: SessionState | null = null;

  constructor() {
    const stored = localStorage.getItem(API_KEY) ?? "http://127.0.0.1:8008";
    this.api = new ApiClient(stored);
  }

  async start() {
    (el("api-url") as HTMLInputElement).value = this.api.baseUrl;
    el("api-url").addEventListener("change", () => {
      this.api = new ApiClient((el("api-url") as HTMLInputElement).value);
      localStorage.setItem(API_KEY, this.api.baseUrl);
    });
    await this.guard(async () => {
      const catalog = await this.api.designs();
      el("wizard-host").innerHTML = renderWizard(catalog);
      el("wizard").addEventListener("submit", (ev) => {
        ev.preventDefault();
        void this.createSession();
      });
    });
    const existing = localStorage.getItem(SESSION_KEY);
    if (existing) {
      // refresh restores the active session from the server
      await this.guard(async () => {
        this.session = await this.api.getTrial(existing);
        await this.paintSession();
      }, () => localStorage.removeItem(SESSION_KEY));
    }
    el("cohort-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submitCohort();
    });
    el("table-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.paintTables();
    });
    el("end-session").addEventListener("click", () => void this.endSession());
  }

  async guard(work: () => Promise<void>, onError?: () => void) {
    try {
      el("error-host").innerHTML = "";
      await work();
    } catch (err) {
      onError?.();
      const message = err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err);
      el("error-host").innerHTML = renderError(message);
      el("error-host").querySelector(".retry")?.addEventListener("click", () => void this.guard(work, onError));
    }
  }

  async createSession() {
    await this.guard(async () => {
      const design = designFromWizard();
      this.session = await this.api.createTrial(
        design,
        Number((el("wiz-doses") as HTMLInputElement).value),
        Number((el("wiz-n") as HTMLInputElement).value),
        Number((el("wiz-cohort") as HTMLInputElement).value),
        Number((el("wiz-start") as HTMLInputElement).value),
      );
      localStorage.setItem(SESSION_KEY, this.session.id);
      el("banner-host").innerHTML = "";
      await this.paintSession();
    });
  }

  async paintSession() {
    const session = this.session;
    if (!session) {
      return;
    }
    el("board-host").innerHTML = renderTrialBoard(session);
    el("conduct").style.display = "block";
    if (session.status === "active") {
      await this.paintWhatIf();
    } else {
      el("whatif-host").innerHTML = "";
    }
    await this.paintTables();
  }

  async paintWhatIf() {
    const session = this.session;
    if (!session) {
      return;
    }
    const entries: WhatIfEntry[] = [];
    for (let k = 0; k <= session.cohort_size; k += 1) {
      const resp = await this.api.whatIf(session.id, k);
      entries.push({ dlt_count: k, outcome: resp.outcome });
    }
    el("whatif-host").innerHTML = renderWhatIfPanel(entries, session.cohort_size);
    const slider = el("whatif-slider") as HTMLInputElement;
    slider.addEventListener("input", () => {
      document.querySelectorAll(".whatif-cell").forEach((cell) => {
        cell.classList.toggle("cell-highlight", cell.getAttribute("data-dlt") === slider.value);
      });
    });
  }

  async submitCohort() {
    const session = this.session;
    if (!session) {
      return;
    }
    await this.guard(async () => {
      const dlt = Number((el("dlt-count") as HTMLInputElement).value);
      try {
        const resp = await this.api.postCohort(session.id, dlt, undefined, session.seq);
        this.session = resp.state;
        el("banner-host").innerHTML =
          renderDecisionBanner(resp.outcome) +
          (await this.fetchDiagnostics(resp.outcome.dose, resp.outcome.x, resp.outcome.n));
      } catch (err) {
        if (err instanceof ServiceError && err.status === 409) {
          // another tab moved the session forward; re-sync and let the user retry
          this.session = await this.api.getTrial(session.id);
        }
        throw err;
      }
      await this.paintSession();
    });
  }

  async fetchDiagnostics(dose: number, x: number, n: number): Promise<string> {
    const session = this.session;
    if (!session) {
      return "";
    }
    const family = session.design.family;
    if (family === "crm" || family === "3+3") {
      return ""; // no per-tally diagnostics for whole-state designs
    }
    const resp = await this.api.decision(session.design, x, n);
    return renderDiagnostics(resp.diagnostics);
  }

  async paintTables() {
    await this.guard(async () => {
      const nMax = Number((el("table-nmax") as HTMLInputElement).value);
      const design = this.session?.design ?? designFromWizard();
      const table = await this.api.table(design, nMax);
      const last = this.lastTally();
      el("table-host").innerHTML = renderDecisionTable(table, last ?? undefined);
      const otherName = (el("diff-design") as HTMLSelectElement).value;
      if (otherName) {
        const other = await this.api.table({ ...design, family: otherName }, nMax);
        el("diff-host").innerHTML = renderTableDiffHeatmap(table, other);
      } else {
        el("diff-host").innerHTML = "";
      }
    });
  }

  lastTally(): { x: number; n: number } | null {
    const session = this.session;
    if (!session || session.current_dose === null) {
      return null;
    }
    const tally = session.tallies.find((t) => t.dose === session.current_dose);
    return tally && tally.n > 0 ? { x: tally.x, n: tally.n } : null;
  }

  async endSession() {
    const session = this.session;
    if (!session) {
      return;
    }
    await this.guard(async () => {
      await this.api.deleteTrial(session.id);
      localStorage.removeItem(SESSION_KEY);
      this.session = null;
      el("board-host").innerHTML = "";
      el("whatif-host").innerHTML = "";
      el("banner-host").innerHTML = "";
      el("conduct").style.display = "none";
    });
  }
}

if (typeof document !== "undefined") {
  const app = new App();
  document.addEventListener("DOMContentLoaded", () => void app.start());
}

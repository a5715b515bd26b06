/** Thin fetch client; every decision shown in the UI comes from these calls. */

import type {
  CohortResponse,
  DecisionResponse,
  DesignCatalog,
  DesignSpec,
  SessionState,
  TableResponse,
  WhatIfResponse,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(public baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ServiceError(0, "unreachable", `service unreachable at ${this.baseUrl}: ${err}`);
    }
    if (resp.status === 204) {
      return undefined as T;
    }
    const text = await resp.text();
    const data = text ? JSON.parse(text) : {};
    if (!resp.ok) {
      throw new ServiceError(resp.status, data.code ?? "error", data.message ?? resp.statusText);
    }
    return data as T;
  }

  designs(): Promise<DesignCatalog> {
    return this.request("GET", "/designs");
  }

  decision(design: DesignSpec, x: number, n: number): Promise<DecisionResponse> {
    return this.request("POST", "/decision", { design, x, n });
  }

  table(design: DesignSpec, nMax: number): Promise<TableResponse> {
    return this.request("POST", "/tables", { design, n_max: nMax });
  }

  createTrial(
    design: DesignSpec,
    numDoses: number,
    sampleSize: number,
    cohortSize: number,
    startDose = 1,
  ): Promise<SessionState> {
    return this.request("POST", "/trials", {
      design,
      num_doses: numDoses,
      sample_size: sampleSize,
      cohort_size: cohortSize,
      start_dose: startDose,
    });
  }

  getTrial(id: string): Promise<SessionState> {
    return this.request("GET", `/trials/${id}`);
  }

  postCohort(id: string, dltCount: number, cohortSize?: number, expectedSeq?: number): Promise<CohortResponse> {
    return this.request("POST", `/trials/${id}/cohorts`, {
      dlt_count: dltCount,
      cohort_size: cohortSize,
      expected_seq: expectedSeq,
    });
  }

  whatIf(id: string, dltCount: number, cohortSize?: number): Promise<WhatIfResponse> {
    return this.request("POST", `/trials/${id}/whatif`, {
      dlt_count: dltCount,
      cohort_size: cohortSize,
    });
  }

  deleteTrial(id: string): Promise<void> {
    return this.request("DELETE", `/trials/${id}`);
  }
}

"""HTTP service: decisions, decision tables, batch simulation jobs and live
trial-conduct sessions (the backend of the browser console).

All bodies are JSON; errors come back as ``{"code": ..., "message": ...}``
with 400 for design misconfiguration, 404 for unknown resources, 409 for
session conflicts and 422 for invariant violations. The endpoint reference
lives in docs/api.md; FastAPI also serves the generated schema at
/openapi.json.
"""

from __future__ import annotations

import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from typing import Any

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import ComputationError, ConfigError, ConflictError, ParameterError
from .rules import decide_tally, decision_diagnostics
from .scenarios import Scenario, builtin_jiwang
from .sessions import SessionStore
from .simulate import TrialConfig, run_batch
from .tables import decision_table
from .types import DESIGN_NAMES, DesignFamily, DesignSpec, DoseTally

ENV_PORT = "DOSEFIND_PORT"
ENV_STORE = "DOSEFIND_STORE"

_DESIGN_CATALOG = [
    {"name": "tpi", "params": [
        {"name": "k1", "type": "float", "default": 1.0},
        {"name": "k2", "type": "float", "default": 1.5},
    ]},
    {"name": "mtpi", "params": []},
    {"name": "mtpi2", "params": []},
    {"name": "ccd", "params": [
        {"name": "delta", "type": "float", "default": None, "note": "published lookup when omitted"},
        {"name": "safety", "type": "bool", "default": False},
    ]},
    {"name": "boin-default", "params": []},
    {"name": "boin-epsilon", "params": []},
    {"name": "boin-lambda", "params": []},
    {"name": "3+3", "params": []},
    {"name": "crm", "params": [
        {"name": "skeleton", "type": "list[float]", "default": None},
        {"name": "prior_sd", "type": "float", "default": 1.34},
        {"name": "no_skip", "type": "bool", "default": True},
    ]},
]
_COMMON_PARAMS = [
    {"name": "p_t", "type": "float", "required": True},
    {"name": "eps1", "type": "float", "default": 0.05},
    {"name": "eps2", "type": "float", "default": 0.05},
    {"name": "prior_a", "type": "float", "default": 1.0},
    {"name": "prior_b", "type": "float", "default": 1.0},
    {"name": "safety_threshold", "type": "float", "default": 0.95},
    {"name": "safety_min_n", "type": "int", "default": 3},
]


class DecisionRequest(BaseModel):
    design: dict[str, Any]
    x: int = Field(ge=0)
    n: int = Field(ge=0)


class TableRequest(BaseModel):
    design: dict[str, Any]
    n_max: int = Field(default=15, ge=1, le=200)


class SimulateRequest(BaseModel):
    designs: list[dict[str, Any]]
    scenarios: list[dict[str, Any]] | None = None
    builtin: float | None = None  # built-in scenario set for this target
    sample_size: int = 30
    cohort_size: int = 3
    start_dose: int = 1  # 1-based
    seed: int = 0
    trials: int = Field(default=100, ge=1, le=1_000_000)
    workers: int = Field(default=1, ge=1, le=64)


class TrialCreateRequest(BaseModel):
    design: dict[str, Any]
    num_doses: int = Field(ge=1, le=20)
    sample_size: int = Field(default=30, ge=1)
    cohort_size: int = Field(default=3, ge=1)
    start_dose: int = Field(default=1, ge=1)  # 1-based


class CohortRequest(BaseModel):
    dlt_count: int = Field(ge=0)
    cohort_size: int | None = Field(default=None, ge=1)
    expected_seq: int | None = None


class WhatIfRequest(BaseModel):
    dlt_count: int = Field(ge=0)
    cohort_size: int | None = Field(default=None, ge=1)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(store_path: str | None = None, job_workers: int = 2) -> FastAPI:
    app = FastAPI(title="dosefind service", version="0.1.0")
    # the browser console is served from its own origin; no auth by design
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])
    store = SessionStore(store_path if store_path is not None else os.environ.get(ENV_STORE) or None)
    jobs: dict[str, dict[str, Any]] = {}
    jobs_lock = threading.Lock()
    pool = ThreadPoolExecutor(max_workers=job_workers)
    app.state.store = store

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        return _error(400, "design_misconfigured", str(exc))

    @app.exception_handler(ConflictError)
    async def _conflict_error(request: Request, exc: ConflictError):
        return _error(409, "conflict", str(exc))

    @app.exception_handler(ParameterError)
    async def _parameter_error(request: Request, exc: ParameterError):
        # unknown-session lookups raise ParameterError with this prefix
        if str(exc).startswith("unknown session"):
            return _error(404, "not_found", str(exc))
        return _error(422, "invariant_violation", str(exc))

    @app.exception_handler(ComputationError)
    async def _computation_error(request: Request, exc: ComputationError):
        return _error(500, "computation_failed", str(exc))

    def parse_design(d: dict[str, Any]) -> DesignSpec:
        try:
            return DesignSpec.from_dict(d)
        except ParameterError as exc:  # bad parameter combinations are misconfigurations here
            raise ConfigError(str(exc)) from exc

    # -- designs & decisions -------------------------------------------------

    @app.get("/designs")
    def designs():
        return {"designs": _DESIGN_CATALOG, "common_params": _COMMON_PARAMS, "names": list(DESIGN_NAMES)}

    @app.post("/decision")
    def decision(req: DecisionRequest):
        spec = parse_design(req.design)
        if spec.family in (DesignFamily.CRM, DesignFamily.THREE_PLUS_THREE):
            raise ConfigError(f"{spec.family.value} decisions depend on the whole trial state; use a trial session")
        tally = DoseTally(req.x, req.n)
        kind = decide_tally(spec, tally)
        return {
            "design": spec.to_dict(),
            "x": req.x,
            "n": req.n,
            "decision": kind.letter,
            "diagnostics": decision_diagnostics(spec, tally),
        }

    @app.post("/tables")
    def tables(req: TableRequest):
        spec = parse_design(req.design)
        try:
            table = decision_table(spec, req.n_max)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
        return {
            "design": spec.to_dict(),
            "n_max": table.n_max,
            "columns": list(range(1, table.n_max + 1)),
            "rows": [
                {"x": x, "cells": [table.entries[n][x].letter if x <= n else None for n in range(1, table.n_max + 1)]}
                for x in range(table.n_max + 1)
            ],
        }

    # -- batch simulation jobs -------------------------------------------------

    def _run_job(job_id: str, designs_: list[DesignSpec], scenarios_: list[Scenario], cfg: TrialConfig, trials: int, workers: int):
        try:
            result = run_batch(designs_, scenarios_, cfg, trials, workers=workers)
            payload = {"csv": result.to_csv(), "rows": len(result.rows)}
            with jobs_lock:
                jobs[job_id].update(status="done", result=payload)
        except Exception as exc:  # report, don't crash the worker
            with jobs_lock:
                jobs[job_id].update(status="error", error=str(exc))

    @app.post("/simulate", status_code=202)
    def simulate(req: SimulateRequest):
        specs = [parse_design(d) for d in req.designs]
        if req.scenarios:
            scenarios_ = [
                Scenario(tuple(float(p) for p in s["probs"]), float(s["p_T"]), str(s.get("label", f"scenario-{i+1}")))
                for i, s in enumerate(req.scenarios)
            ]
        elif req.builtin is not None:
            scenarios_ = builtin_jiwang(req.builtin)
        else:
            raise ConfigError("provide scenarios or a builtin target")
        cfg = TrialConfig(req.sample_size, req.cohort_size, req.start_dose - 1, req.seed)
        job_id = uuid.uuid4().hex
        with jobs_lock:
            jobs[job_id] = {"status": "queued"}
        def start():
            with jobs_lock:
                jobs[job_id]["status"] = "running"
            _run_job(job_id, specs, scenarios_, cfg, req.trials, req.workers)
        pool.submit(start)
        return {"job_id": job_id, "status": "queued"}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        with jobs_lock:
            job = jobs.get(job_id)
            if job is None:
                return _error(404, "not_found", f"unknown job {job_id!r}")
            return {"job_id": job_id, **job}

    # -- live trial sessions -----------------------------------------------------

    @app.post("/trials", status_code=201)
    def create_trial(req: TrialCreateRequest):
        spec = parse_design(req.design)
        if req.start_dose > req.num_doses:
            raise ConfigError("start_dose beyond the dose grid")
        session = store.create(spec, req.num_doses, req.sample_size, req.cohort_size, req.start_dose - 1)
        return session.state_dict()

    @app.get("/trials/{session_id}")
    def get_trial(session_id: str):
        return store.get(session_id).state_dict()

    @app.post("/trials/{session_id}/cohorts")
    def post_cohort(session_id: str, req: CohortRequest):
        session = store.get(session_id)
        size = req.cohort_size if req.cohort_size is not None else session.cohort_size
        if req.dlt_count > size:
            raise ParameterError("dlt_count cannot exceed the cohort size")
        outcome = store.apply_cohort(session_id, req.dlt_count, size, req.expected_seq)
        return {"outcome": outcome.to_dict(), "state": session.state_dict()}

    @app.post("/trials/{session_id}/whatif")
    def whatif(session_id: str, req: WhatIfRequest):
        session = store.get(session_id)
        size = req.cohort_size if req.cohort_size is not None else session.cohort_size
        if req.dlt_count > size:
            raise ParameterError("dlt_count cannot exceed the cohort size")
        return {"outcome": session.whatif(req.dlt_count, size).to_dict()}

    @app.delete("/trials/{session_id}", status_code=204)
    def delete_trial(session_id: str):
        store.delete(session_id)

    return app


def run_server(host: str = "127.0.0.1", port: int | None = None, store_path: str | None = None):
    import uvicorn

    if port is None:
        port = int(os.environ.get(ENV_PORT, "8008"))
    uvicorn.run(create_app(store_path), host=host, port=port)

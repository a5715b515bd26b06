"""Capture real service responses as frontend test fixtures.

Run from the repo root with the dosefind package installed:

    python3 frontend/scripts/capture_fixtures.py

The snapshot tests compare rendered output against these files, so the UI is
pinned to what the service actually returns.
"""

import json
import pathlib

from fastapi.testclient import TestClient

from dosefind.service import create_app

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"
MTPI2 = {"family": "mtpi2", "p_t": 0.3, "eps1": 0.05, "eps2": 0.05}


def dump(name: str, payload) -> None:
    (OUT / name).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print("wrote", name)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    client = TestClient(create_app(store_path=""))

    dump("designs.json", client.get("/designs").json())
    dump("table_mtpi2_pt030_n15.json", client.post("/tables", json={"design": MTPI2, "n_max": 15}).json())
    dump("table_boin-lambda_pt030_n15.json",
         client.post("/tables", json={"design": {"family": "boin-lambda", "p_t": 0.3}, "n_max": 15}).json())
    dump("decision_3of6.json", client.post("/decision", json={"design": MTPI2, "x": 3, "n": 6}).json())

    def whatif_entries(session_id: str) -> list:
        return [
            {"dlt_count": k, "outcome": client.post(f"/trials/{session_id}/whatif", json={"dlt_count": k}).json()["outcome"]}
            for k in range(4)
        ]

    # a mid-grid session: the what-if letters equal the fixed table column
    trial = client.post("/trials", json={"design": MTPI2, "num_doses": 6, "sample_size": 30,
                                         "cohort_size": 3, "start_dose": 2}).json()
    sid = trial["id"]
    dump("whatif_n3.json", whatif_entries(sid))
    cohort = client.post(f"/trials/{sid}/cohorts", json={"dlt_count": 1}).json()
    dump("cohort_1of3.json", cohort)
    dump("session_state.json", client.get(f"/trials/{sid}").json())

    # at the lowest dose the safety cell materializes as a trial stop
    low = client.post("/trials", json={"design": MTPI2, "num_doses": 6, "sample_size": 30,
                                       "cohort_size": 3}).json()
    dump("whatif_n3_dose1.json", whatif_entries(low["id"]))


if __name__ == "__main__":
    main()

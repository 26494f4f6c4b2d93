#!/usr/bin/env python3
"""Record control-API responses into tests/fixtures/.

Runs the real service in-process against the bundled reference
scenario, advances the campaign to interesting moments, and saves the
exact HTTP response bodies the console's tests replay.  Rerun after any
change to the API surface:

    cd frontend && python3 scripts/record_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from cloudburst.scenario import load_scenario
from cloudburst.service import LiveCampaign, create_app

FRONTEND = Path(__file__).resolve().parents[1]
REPO = FRONTEND.parent
OUT = FRONTEND / "tests" / "fixtures"

# Mid-campaign: full 2000-GPU plateau, one budget alert fired.
LIVE_AT_S = 700_000
# After the stop: everything torn down (reconcile + 30s deprovision),
# far enough to cross hourly timeline marks that record the collapse.
SETTLE_S = 5_600


def dump(name: str, response, sim_now: int) -> None:
    doc = {
        "meta": {
            "path": str(response.request.url.path)
            + (f"?{response.request.url.query}" if response.request.url.query else ""),
            "method": response.request.method,
            "status": response.status_code,
            "sim_now": sim_now,
        },
        "body": response.json(),
    }
    (OUT / name).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {name} ({response.request.method} {doc['meta']['path']} -> {response.status_code})")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    scenario = load_scenario(REPO / "scenarios" / "reference.json")
    campaign = LiveCampaign(scenario)
    client = TestClient(create_app(campaign))

    now = campaign.advance(LIVE_AT_S)
    dump("status_live.json", client.get("/status"), now)
    dump("budget_live.json", client.get("/budget"), now)
    dump("groups_live.json", client.get("/groups"), now)
    dump("timeline_live.json", client.get("/timeline"), now)

    stop = client.post("/emergency-stop", json={"reason": "console drill"})
    dump("stop_accepted.json", stop, now)

    now = campaign.advance(SETTLE_S)
    dump("status_stopped.json", client.get("/status"), now)
    dump("budget_stopped.json", client.get("/budget"), now)
    dump("timeline_stopped.json", client.get("/timeline"), now)

    # A rejected command while stopped: the 409 shape the console renders.
    dump("error_409.json", client.post("/target", json={"gpus": 100}), now)


if __name__ == "__main__":
    main()

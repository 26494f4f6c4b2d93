"""HTTP control surface for a live campaign.

The engine is single-threaded, so :class:`LiveCampaign` serializes every
mutation behind one lock and republishes immutable snapshots after each
change.  Request handlers only ever read the latest snapshot or enqueue
an operator command for the next simulated second; they never reach into
engine internals.  An optional pacing thread advances simulated time
against the wall clock at a configurable compression ratio so a
multi-week campaign can be steered interactively in minutes.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, StrictInt, StrictStr

from .kernel import CampaignEngine
from .scenario import Scenario

#: Simulated seconds advanced per wall-clock second in interactive mode:
#: one simulated hour per wall second by default.
DEFAULT_COMPRESSION = 3600.0

#: Wall-clock interval between pacing steps.
_PACING_STEP_WALL_S = 0.05


class CommandRejected(Exception):
    """An operator command is not acceptable in the campaign's current
    state (stopped, or already finalized)."""


class LiveCampaign:
    """A running campaign plus the serialization layer the API needs.

    All engine access goes through ``self._lock``; after every mutation
    the public snapshots are rebuilt, so readers get self-consistent
    documents without ever blocking on the engine.
    """

    def __init__(
        self,
        scenario: Scenario,
        *,
        log_path: str | Path | None = None,
        compression: float = DEFAULT_COMPRESSION,
    ):
        if compression <= 0:
            raise ValueError("compression must be > 0")
        self.scenario = scenario
        self.compression = compression
        self.engine = CampaignEngine(scenario, log_path=log_path)
        self.group_ids = frozenset(g.id for g in scenario.groups)
        self._lock = threading.Lock()
        self._pacer: threading.Thread | None = None
        self._stop_pacing = threading.Event()
        self._sim_debt = 0.0
        with self._lock:
            self.engine.start()
            self._refresh()

    # -- snapshots ---------------------------------------------------------

    def _refresh(self):
        """Rebuild the published snapshots. Caller holds the lock."""
        self._status = self.engine.snapshot()
        self._budget = self.engine.budget_snapshot()
        self._timeline = list(self.engine.timeline)

    def status(self) -> dict:
        return self._status

    def budget(self) -> dict:
        return self._budget

    def timeline(self) -> list[dict]:
        return self._timeline

    # -- time --------------------------------------------------------------

    def advance(self, sim_seconds: int) -> int:
        """Advance simulated time by `sim_seconds` and republish
        snapshots.  Returns the engine clock after the step."""
        if sim_seconds < 0:
            raise ValueError("sim_seconds must be >= 0")
        with self._lock:
            target = min(
                max(self.engine.now, 0) + sim_seconds, self.scenario.horizon_s
            )
            self.engine.run_until(target)
            self._refresh()
            return self.engine.now

    def run_to_horizon(self) -> int:
        return self.advance(self.scenario.horizon_s + 1)

    # -- commands ----------------------------------------------------------

    def submit(self, command: str, args: dict) -> int:
        """Queue an operator command; returns the simulated second it
        will execute at.  Raises CommandRejected when the campaign is
        stopped (anything but resume) or already finalized."""
        with self._lock:
            if self.engine.finalized:
                raise CommandRejected("campaign already finished")
            if self.engine.controller.stopped and command != "resume":
                raise CommandRejected(
                    "campaign is stopped; only resume is accepted"
                )
            at = self.engine.submit_command(command, args, source="api")
            self._refresh()
            return at

    # -- wall-clock pacing ---------------------------------------------------

    def start_pacing(self):
        """Advance the clock against wall time at `compression` simulated
        seconds per wall second until the horizon or close()."""
        if self._pacer is not None:
            return
        self._stop_pacing.clear()
        self._pacer = threading.Thread(
            target=self._pace, name="campaign-pacer", daemon=True
        )
        self._pacer.start()

    def _pace(self):
        last = time.monotonic()
        while not self._stop_pacing.is_set() and not self.engine.finalized:
            self._stop_pacing.wait(_PACING_STEP_WALL_S)
            now = time.monotonic()
            self._sim_debt += (now - last) * self.compression
            last = now
            whole = int(self._sim_debt)
            if whole > 0:
                self._sim_debt -= whole
                self.advance(whole)

    def close(self):
        self._stop_pacing.set()
        if self._pacer is not None:
            self._pacer.join()
            self._pacer = None


# -- request bodies ----------------------------------------------------------


class DesiredBody(BaseModel):
    n: StrictInt = Field(ge=0)


class TargetBody(BaseModel):
    gpus: StrictInt = Field(ge=0)


class StopBody(BaseModel):
    reason: StrictStr = "operator"


class ResumeBody(BaseModel):
    target: StrictInt = Field(ge=0)


def create_app(campaign: LiveCampaign, console_dir: str | Path | None = None) -> FastAPI:
    """Build the control API around one live campaign.

    Endpoints:
      GET  /status    full fleet/queue/policy snapshot
      GET  /budget    ledger aggregate, spend rate, alert history
      GET  /timeline  hourly rows (?from= filters by hour)
      GET  /groups    per-group scaling and preemption view
      POST /groups/{id}/desired, /target, /emergency-stop, /resume

    Errors: 404 unknown group, 409 rejected while stopped (resume is
    always allowed), 422 malformed body.
    """
    app = FastAPI(title="cloudburst control", docs_url=None, redoc_url=None)

    def submit_or_409(command: str, args: dict) -> dict:
        try:
            at = campaign.submit(command, args)
        except CommandRejected as e:
            raise HTTPException(status_code=409, detail=str(e))
        return {"accepted": True, "command": command, "executes_at": at}

    @app.get("/status")
    def get_status() -> dict:
        return campaign.status()

    @app.get("/budget")
    def get_budget() -> dict:
        return campaign.budget()

    @app.get("/timeline")
    def get_timeline(
        from_hour: int = Query(default=0, alias="from", ge=0)
    ) -> dict:
        rows = campaign.timeline()
        if from_hour:
            rows = [r for r in rows if r["hour"] >= from_hour]
        return {"rows": rows}

    @app.get("/groups")
    def get_groups() -> dict:
        snap = campaign.status()
        groups = snap["groups"]
        return {
            "now": snap["now"],
            "stopped": snap["stopped"],
            "groups": [groups[gid] for gid in sorted(groups)],
        }

    @app.post("/groups/{group_id}/desired")
    def post_desired(group_id: str, body: DesiredBody) -> dict:
        if group_id not in campaign.group_ids:
            raise HTTPException(
                status_code=404, detail=f"unknown group {group_id!r}"
            )
        return submit_or_409("set_desired", {"group": group_id, "n": body.n})

    @app.post("/target")
    def post_target(body: TargetBody) -> dict:
        return submit_or_409("pin_target", {"gpus": body.gpus})

    @app.post("/emergency-stop")
    def post_emergency_stop(body: StopBody) -> dict:
        return submit_or_409("emergency_stop", {"reason": body.reason})

    @app.post("/resume")
    def post_resume(body: ResumeBody) -> dict:
        return submit_or_409("resume", {"target": body.target})

    if console_dir is not None and Path(console_dir).is_dir():
        app.mount(
            "/console",
            StaticFiles(directory=str(console_dir), html=True),
            name="console",
        )

        @app.get("/")
        def root() -> RedirectResponse:
            return RedirectResponse(url="/console/")

    return app


def serve_campaign(
    scenario: Scenario,
    *,
    port: int,
    compression: float = DEFAULT_COMPRESSION,
    log_path: str | Path | None = None,
    console_dir: str | Path | None = None,
    host: str = "127.0.0.1",
):
    """Run the control API with wall-clock pacing until interrupted."""
    import uvicorn

    campaign = LiveCampaign(
        scenario, log_path=log_path, compression=compression
    )
    app = create_app(campaign, console_dir=console_dir)
    campaign.start_pacing()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        campaign.close()

"""HTTP service around one live run.

One scenario per server process. The executive loop runs in its own thread
and owns every mutation; handlers either enqueue work through short critical
sections or read snapshots, so nothing blocks the loop. The event stream is
a long-lived line-delimited JSON tail of the run log.
"""

from __future__ import annotations

import asyncio
import threading
import time
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .cues import MalformedCueError
from .orchestrator import ActiveTaskError, Executive, dump_event
from .planner import UnparseableCommandError
from .sim import load_scenario_file

MODE_PAUSED = "paused"
MODE_RUNNING = "running"
MODE_FINISHED = "finished"


class RunService:
    """Single-run state machine shared between the loop thread and handlers."""

    def __init__(self, scenario_path: Path, *, rate: float = 10.0,
                 ticks_max: Optional[int] = None):
        scenario = load_scenario_file(scenario_path)
        kwargs = {} if ticks_max is None else {"ticks_max": ticks_max}
        self.executive = Executive(scenario, **kwargs)
        self.rate = rate
        self.mode = MODE_PAUSED
        self.step_budget = 0
        self.lock = threading.RLock()
        self._shutdown = threading.Event()
        self._thread: Optional[threading.Thread] = None

    # -- loop ----------------------------------------------------------------

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, daemon=True,
                                        name="executive-loop")
        self._thread.start()

    def stop(self) -> None:
        self._shutdown.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def _loop(self) -> None:
        while not self._shutdown.is_set():
            ticked = False
            with self.lock:
                if self.executive.finished and self.mode != MODE_FINISHED:
                    self.mode = MODE_FINISHED
                if self.mode == MODE_RUNNING or self.step_budget > 0:
                    self.executive.tick()
                    ticked = True
                    if self.step_budget > 0:
                        self.step_budget -= 1
                    if self.executive.finished:
                        self.mode = MODE_FINISHED
                        self.step_budget = 0
            if not ticked:
                time.sleep(0.01)
            elif self.rate > 0 and self.mode == MODE_RUNNING:
                time.sleep(1.0 / self.rate)

    # -- handler-side operations ----------------------------------------------

    def state(self) -> dict:
        with self.lock:
            doc = self.executive.state_json()
            doc["mode"] = self.mode
            doc["log_length"] = len(self.executive.log)
            return doc

    def post_command(self, text: str) -> dict:
        with self.lock:
            if self.mode == MODE_FINISHED:
                # finished is terminal for a served run
                raise ActiveTaskError("run is finished; restart the server "
                                      "for a new task")
            task = self.executive.issue_command(text)
            return task.to_json()

    def post_cue(self, cue: dict) -> dict:
        with self.lock:
            return self.executive.inject_cue(cue)

    def post_control(self, mode: str, ticks: int) -> dict:
        with self.lock:
            if self.mode == MODE_FINISHED:
                return {"mode": self.mode}
            if mode == "run":
                self.mode = MODE_RUNNING
            elif mode == "pause":
                self.mode = MODE_PAUSED
                self.step_budget = 0
            elif mode == "step":
                self.mode = MODE_PAUSED
                self.step_budget += max(1, ticks)
            return {"mode": self.mode, "step_budget": self.step_budget}

    def log_line(self, index: int) -> Optional[str]:
        log = self.executive.log
        if index < len(log):
            return log.line(index)
        return None

    def drained(self, index: int) -> bool:
        with self.lock:
            return (self.mode == MODE_FINISHED
                    and self.step_budget == 0
                    and index >= len(self.executive.log))


def create_app(scenario_path, *, rate: float = 10.0,
               ticks_max: Optional[int] = None,
               frontend_dir: Optional[Path] = None) -> FastAPI:
    service = RunService(Path(scenario_path), rate=rate, ticks_max=ticks_max)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        service.start()
        yield
        service.stop()

    app = FastAPI(title="homegraph run service", lifespan=lifespan)
    app.state.service = service

    @app.get("/state")
    def get_state():
        return service.state()

    @app.post("/command")
    async def post_command(request: Request):
        body = await _json_body(request)
        if body is None or not isinstance(body.get("text"), str):
            return _error(400, "body must be {\"text\": string}")
        try:
            task = service.post_command(body["text"])
        except ActiveTaskError as exc:
            return _error(409, str(exc))
        except UnparseableCommandError as exc:
            return _error(400, str(exc))
        return {"task": task}

    @app.post("/cue")
    async def post_cue(request: Request):
        body = await _json_body(request)
        if body is None:
            return _error(400, "body must be a cue object")
        try:
            event = service.post_cue(body)
        except MalformedCueError as exc:
            return _error(400, str(exc))
        return {"queued": event}

    @app.post("/control")
    async def post_control(request: Request):
        body = await _json_body(request)
        if body is None or body.get("mode") not in ("run", "pause", "step"):
            return _error(400, "body must be {\"mode\": \"run\"|\"pause\"|\"step\", \"ticks\": N}")
        ticks = body.get("ticks", 1)
        if not isinstance(ticks, int) or ticks < 0:
            return _error(400, "ticks must be a non-negative integer")
        return service.post_control(body["mode"], ticks)

    @app.get("/events")
    async def stream_events(request: Request, frm: int = 0):
        # FastAPI cannot name a parameter "from"; read it from the query.
        start = request.query_params.get("from")
        index = int(start) if start is not None else frm
        if index < 0:
            return _error(400, "offset must be >= 0")

        async def tail():
            cursor = index
            while True:
                line = service.log_line(cursor)
                if line is not None:
                    cursor += 1
                    yield line + "\n"
                    continue
                if service.drained(cursor):
                    return
                if await request.is_disconnected():
                    return
                await asyncio.sleep(0.02)

        return StreamingResponse(tail(), media_type="application/x-ndjson")

    if frontend_dir is None:
        frontend_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if frontend_dir.is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True),
                  name="console")

    return app


async def _json_body(request: Request) -> Optional[dict]:
    try:
        body = await request.json()
    except Exception:
        return None
    return body if isinstance(body, dict) else None


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)

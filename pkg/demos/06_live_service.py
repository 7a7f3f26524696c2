"""Driving a live run over HTTP: pause, inject a cue, run, tail the stream.

Starts the service in-process on a free port, then plays the operator:
queues a verbal cue while paused, presses run, and watches the plan revision
arrive on the event stream.
"""

import json
import socket
import threading
import time

import httpx
import uvicorn

from homegraph import scenario_path
from homegraph.server import create_app

with socket.socket() as s:
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]

app = create_app(scenario_path("verbal_apple"), rate=0.0)
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port,
                                       log_level="error"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
base = f"http://127.0.0.1:{port}"
while True:
    try:
        httpx.get(base + "/state", timeout=0.2)
        break
    except httpx.HTTPError:
        time.sleep(0.05)

client = httpx.Client(base_url=base, timeout=10.0)

state = client.get("/state").json()
print("paused at tick", state["tick"], "| task:", state["task"]["object_label"],
      "| first plan rev:", state["plan"]["revision"])

# Queue a cue while paused; it is delivered on the first running tick.
queued = client.post("/cue", json={
    "type": "verbal", "text": "The apple is on the cleaning table."}).json()
print("cue queued for tick", queued["queued"]["tick"])

client.post("/control", json={"mode": "run"})
while client.get("/state").json()["mode"] != "finished":
    time.sleep(0.05)

state = client.get("/state").json()
print("finished at tick", state["tick"], "| task status:",
      state["task"]["status"])

with client.stream("GET", "/events?from=0") as response:
    events = [json.loads(line) for line in response.iter_lines() if line]
for ev in events:
    if ev["type"] == "plan_revised":
        print(f"stream: plan rev {ev['revision']} -> {ev['first_target_label']}")

server.should_exit = True
thread.join(timeout=5)

#!/usr/bin/env python3
"""End-to-end smoke drive against real processes and sockets.

Starts a scripted reference bot and a platform instance from the demo
config, then walks the full journey: admin login and launch, worker signup,
consent, landing/claim, three chat rounds over long-polling, survey
submission, admin export and dashboard reads, and a server restart with the
same store to confirm sessions and transcripts survive.

Exits 0 and prints END-TO-END VERIFICATION PASSED on success.
"""

from __future__ import annotations

import json
import pathlib
import socket
import subprocess
import sys
import tempfile
import time

import httpx

ROOT = pathlib.Path(__file__).resolve().parents[1]


def free_port() -> int:
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return port


def wait_up(base: str) -> None:
    for _ in range(100):
        try:
            httpx.get(base + "/", timeout=1)
            return
        except Exception:
            time.sleep(0.1)
    raise SystemExit(f"server at {base} did not come up")


def start_app(workdir: pathlib.Path, *extra: str) -> subprocess.Popen:
    return subprocess.Popen(
        [sys.executable, "-m", "chatbench",
         "--config", str(workdir / "task.yml"),
         "--topics", str(workdir / "topics.json"),
         "--store", str(workdir / "eval.db"),
         "--host", "127.0.0.1", *extra],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)


def main() -> None:
    bot_port, app_port = free_port(), free_port()
    bot_proc = subprocess.Popen(
        [sys.executable, "-m", "chatbench.botserver", "--port", str(bot_port),
         "--script", "What feels unfair about it?", "Could you give one example?",
         "Thanks, noted."],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)

    workdir = pathlib.Path(tempfile.mkdtemp(prefix="chatbench-e2e-"))
    config = ((ROOT / "demo" / "task.yml").read_text()
              .replace("http://127.0.0.1:9000", f"http://127.0.0.1:{bot_port}")
              .replace("tcp_port: 8080", f"tcp_port: {app_port}"))
    (workdir / "task.yml").write_text(config)
    (workdir / "topics.json").write_text((ROOT / "demo" / "topics.json").read_text())
    (workdir / "agreement.html").write_text((ROOT / "demo" / "agreement.html").read_text())

    app_proc = start_app(workdir, "--admin", "root:change-me")
    base = f"http://127.0.0.1:{app_port}"
    try:
        wait_up(base)

        admin = httpx.Client(base_url=base)
        assert admin.post("/api/login", json={"user_id": "root", "secret": "change-me"}).status_code == 200
        launch = admin.post("/api/admin/topics/rollout-fees/launch",
                            json={"count": 2, "bot_params": {"persona": "socratic"}})
        assert launch.json()["results"][0]["ok"], launch.text
        print("[ok] admin login + launch 2 threads")

        worker = httpx.Client(base_url=base)
        signup = worker.post("/api/signup", json={"user_id": "eve", "secret": "pw"})
        assert signup.status_code == 200 and signup.json()["consent_required"] is True
        assert "Study agreement" in worker.get("/agreement").text
        assert worker.post("/api/consent", json={"checked": [True, True]}).status_code == 200
        landing = worker.get("/landing", follow_redirects=False)
        assert landing.status_code == 303, landing.text
        thread_id = landing.headers["location"].rsplit("/", 1)[-1]
        print(f"[ok] worker signup + consent + claimed thread {thread_id}")

        assert "window.CHATBENCH" in worker.get(f"/threads/{thread_id}").text

        delta = worker.get(f"/api/threads/{thread_id}/updates?since=0").json()
        assert delta["state"] == "Active" and len(delta["messages"]) == 2
        seen = delta["messages"][-1]["seq"]
        for round_no, text in enumerate(["The rollout timeline is what bugs me.",
                                         "Fees doubled with two weeks notice.",
                                         "Fine, fair point."], start=1):
            posted = worker.post(f"/api/threads/{thread_id}/messages", json={"text": text})
            assert posted.status_code == 200, posted.text
            while True:
                delta = worker.get(f"/api/threads/{thread_id}/updates?since={seen}&wait=1",
                                   timeout=30).json()
                if delta["messages"]:
                    seen = delta["messages"][-1]["seq"]
                if seen >= 2 + 2 * round_no:
                    break
            print(f"[ok] round {round_no}: bot replied, remaining={delta['remaining_turns']}")
        assert delta["survey_open"] is True and delta["state"] == "RatingOpen"

        rated = worker.post(f"/api/threads/{thread_id}/ratings", json={"answers": {
            "coherence": "4 - Mostly", "effective": "Yes",
            "issues": ["Too vague"], "feedback": ""}})
        assert rated.status_code == 200 and rated.json()["state"] == "Completed", rated.text
        print("[ok] survey validated + thread Completed")

        export = admin.get(f"/api/admin/threads/{thread_id}/export")
        document = json.loads(export.text)
        assert [m["author_role"] for m in document["messages"]] == \
            ["seed", "seed", "human", "bot", "human", "bot", "human", "bot"]
        assert {r["question_id"] for r in document["ratings"]} == \
            {"coherence", "effective", "issues"}
        assert export.headers["content-disposition"].startswith("attachment")
        print("[ok] admin export: 8 ordered messages, ratings present, attachment header")

        listed = admin.get("/api/admin/threads?state=Completed").json()["threads"]
        assert any(t["id"] == thread_id for t in listed)
        table = admin.get("/api/admin/topics").json()["topics"]
        assert next(t for t in table if t["id"] == "rollout-fees")["threads_created"] == 2
        print("[ok] admin dashboard data (thread list, topics table)")

        app_proc.terminate()
        app_proc.wait(timeout=10)
        app_proc = start_app(workdir)
        wait_up(base)
        delta = worker.get(f"/api/threads/{thread_id}/updates?since=0").json()
        assert delta["state"] == "Completed" and len(delta["messages"]) == 8
        print("[ok] restart: session survived, transcript intact")
        print("END-TO-END VERIFICATION PASSED")
    finally:
        app_proc.terminate()
        bot_proc.terminate()


if __name__ == "__main__":
    main()

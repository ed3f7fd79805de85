"""Standalone reference bot server speaking the gateway wire protocol.

Any bot that answers ``POST {base_url}/respond`` the way this server does can
be plugged into a task config. Run one from the command line::

    chatbench-demo-bot --port 9000 --echo
    chatbench-demo-bot --port 9000 --script "Tell me more." "Why do you say that?"
"""

from __future__ import annotations

import argparse
import asyncio
import threading
import time
from typing import Callable

import uvicorn
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .bots import BotTurnRequest, BotTurnResponse, EchoBot, ScriptedBot


def make_bot_app(bot: Callable[[BotTurnRequest], str], *, name: str = "reference-bot",
                 delay: float = 0.0) -> FastAPI:
    """``delay`` adds artificial thinking time per reply, handy for demos and
    for exercising the off-turn UI state."""
    app = FastAPI(docs_url=None, redoc_url=None, openapi_url=None)

    @app.post("/respond")
    async def respond(request: Request):
        try:
            body = await request.json()
            turn = BotTurnRequest.from_wire(body)
        except Exception:
            return JSONResponse(status_code=400,
                                content={"error": "body must be a bot turn request"})
        if delay > 0:
            await asyncio.sleep(delay)
        text = bot(turn)
        return BotTurnResponse(text=text, meta={"bot": name}).to_wire()

    return app


class BackgroundServer:
    """A uvicorn server on an ephemeral port, for tests and local bots."""

    def __init__(self, app: FastAPI, host: str = "127.0.0.1", port: int = 0):
        self._config = uvicorn.Config(app, host=host, port=port, log_level="warning")
        self.server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self.server.run, daemon=True)
        self.base_url = ""

    def __enter__(self) -> "BackgroundServer":
        self._thread.start()
        deadline = time.monotonic() + 10
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("bot server did not start in time")
            time.sleep(0.01)
        sock = self.server.servers[0].sockets[0]
        host, port = sock.getsockname()[:2]
        self.base_url = f"http://{host}:{port}"
        return self

    def __exit__(self, *exc_info) -> None:
        self.server.should_exit = True
        self._thread.join(timeout=10)


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="Reference bot server")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=9000)
    parser.add_argument("--delay", type=float, default=0.0,
                        help="seconds of artificial thinking time per reply")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--echo", action="store_true",
                       help="repeat the last transcript message (default)")
    group.add_argument("--script", nargs="+", metavar="LINE",
                       help="play these lines in order, repeating the last")
    args = parser.parse_args(argv)

    bot = ScriptedBot(args.script) if args.script else EchoBot()
    app = make_bot_app(bot, name="scripted" if args.script else "echo", delay=args.delay)
    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()

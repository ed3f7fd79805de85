"""The HTTP surface: sessions and consent gating, the evaluator chat/survey
API with a long-polling update feed, the admin API, and page shells.

Route namespace, fixed for conformance:

* human pages under ``{prefix}/``
* evaluator JSON API under ``{prefix}/api/``
* admin JSON API under ``{prefix}/api/admin/``

TLS is delegated to a fronting reverse proxy; the service itself speaks
plain HTTP on the configured port.
"""

from __future__ import annotations

import hashlib
import hmac
import logging
import secrets
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from datetime import datetime
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Callable, Mapping

import anyio
from fastapi import Depends, FastAPI, HTTPException, Request, Response
from fastapi.responses import HTMLResponse, JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles

from . import pages
from .bots import BotGateway
from .config import TaskConfig, survey_render_model
from .crowd import CrowdClient, build_crowd_client, parse_entry
from .errors import (
    AlreadyParticipant,
    AuthRequired,
    BotError,
    ChatbenchError,
    Forbidden,
    IncompleteConsent,
    LimitExceeded,
    SchemaError,
    ThreadFull,
    ThreadNotFound,
    WrongState,
)
from .model import Session, ThreadState, UserRecord, utcnow
from .rooms import RoomEngine
from .storage import SqliteStore
from .topics import TopicSet

logger = logging.getLogger(__name__)

SESSION_COOKIE = "chatbench_session"


def hash_secret(secret: str) -> str:
    salt = secrets.token_hex(8)
    digest = hashlib.pbkdf2_hmac("sha256", secret.encode(), bytes.fromhex(salt), 100_000)
    return f"pbkdf2:{salt}:{digest.hex()}"


def verify_secret(secret: str, stored: str | None) -> bool:
    if not stored:
        return False
    try:
        _, salt, expected = stored.split(":")
    except ValueError:
        return False
    digest = hashlib.pbkdf2_hmac("sha256", secret.encode(), bytes.fromhex(salt), 100_000)
    return hmac.compare_digest(digest.hex(), expected)


class ServiceCore:
    """Everything one platform instance owns, wired together."""

    def __init__(self, *, config: TaskConfig, topics: TopicSet, store: SqliteStore,
                 gateway: BotGateway | None = None,
                 crowd: CrowdClient | None = None,
                 clock: Callable[[], datetime] = utcnow,
                 id_factory: Callable[[], str] | None = None,
                 bot_runner: str = "background",
                 poll_window: float = 25.0,
                 max_poll_waiters: int = 128,
                 message_cap_per_session: int = 1000,
                 public_base_url: str | None = None):
        self.config = config
        self.topics = topics
        self.store = store
        self.clock = clock
        if gateway is None:
            gateway = BotGateway()
            for spec in config.bots:
                gateway.register_endpoint(spec)
        self.gateway = gateway
        engine_kwargs: dict[str, Any] = {}
        if id_factory is not None:
            engine_kwargs["id_factory"] = id_factory
        self.engine = RoomEngine(config=config, topics=topics, gateway=gateway,
                                 store=store, clock=clock, **engine_kwargs)
        self.crowd = crowd or build_crowd_client(config.crowd.platform, store, clock=clock)
        self.bot_runner = bot_runner
        self.poll_window = poll_window
        self.max_poll_waiters = max_poll_waiters
        self.message_cap = message_cap_per_session
        self.public_base_url = public_base_url or f"http://localhost:{config.instance.tcp_port}"
        self.prefix = config.instance.path_prefix
        self.executor = ThreadPoolExecutor(max_workers=16, thread_name_prefix="bot-turns")
        self._limiter: anyio.CapacityLimiter | None = None
        self._counts_lock = threading.Lock()
        self._message_counts: dict[tuple[str, str], int] = {}

    # ------------------------------------------------------------- sessions

    def create_session(self, user: UserRecord) -> Session:
        consent_ok = (user.role == "admin"
                      or self.config.onboarding is None
                      or user.agreement_accepted_at is not None)
        session = Session(session_id=secrets.token_urlsafe(24), user_id=user.id,
                          role=user.role, created_at=self.clock(), consent_ok=consent_ok)
        self.store.create_session(session)
        return session

    def ensure_admin(self, user_id: str, secret: str) -> None:
        """Bootstrap an admin account (idempotent for an existing admin)."""
        existing = self.store.get_user(user_id)
        if existing is None:
            self.store.create_user(UserRecord(id=user_id, role="admin",
                                              secret_hash=hash_secret(secret)))
        elif existing.role != "admin":
            raise Forbidden(f"user {user_id!r} exists and is not an admin")

    # ------------------------------------------------------------- bot turns

    def run_bot_turns_guarded(self, thread_id: str) -> None:
        try:
            self.engine.run_bot_turns(thread_id)
        except BotError as err:
            logger.warning("bot turn for thread %s failed: %s", thread_id, err.message)
        except Exception:
            logger.exception("unexpected failure driving bot turns for thread %s", thread_id)

    def schedule_bot_turns(self, thread_id: str) -> None:
        if self.bot_runner == "inline":
            self.run_bot_turns_guarded(thread_id)
        else:
            self.executor.submit(self.run_bot_turns_guarded, thread_id)

    # ------------------------------------------------------------ long polling

    def poll_limiter(self) -> anyio.CapacityLimiter:
        if self._limiter is None:
            self._limiter = anyio.CapacityLimiter(self.max_poll_waiters)
        return self._limiter

    # ------------------------------------------------------------ worker intake

    def count_message(self, session_id: str, thread_id: str) -> None:
        with self._counts_lock:
            key = (session_id, thread_id)
            self._message_counts[key] = self._message_counts.get(key, 0) + 1
            if self._message_counts[key] > self.message_cap:
                raise HTTPException(status_code=429, detail="per-session message cap reached")

    def existing_thread_for(self, user_id: str) -> str | None:
        """A live thread this user already sits in, if any (landing re-entry)."""
        for state in (ThreadState.ACTIVE, ThreadState.RATING_OPEN, ThreadState.WAITING_FOR_HUMANS):
            summaries = self.store.list_threads(state=state, user_id=user_id)
            if summaries:
                return summaries[-1].id
        return None

    def claim_thread(self, user_id: str, topic_id: str | None = None,
                     preferred: str | None = None) -> str:
        """Join the user into an open thread; oldest first, preferred first."""
        candidates: list[str] = []
        if preferred is not None:
            candidates.append(preferred)
        waiting = self.store.list_threads(state=ThreadState.WAITING_FOR_HUMANS, topic_id=topic_id)
        candidates.extend(s.id for s in reversed(waiting))  # oldest first
        last_error: ChatbenchError | None = None
        for thread_id in candidates:
            try:
                self.engine.join_thread(thread_id, user_id)
                return thread_id
            except (ThreadFull, WrongState, AlreadyParticipant, ThreadNotFound) as err:
                last_error = err
                continue
            except LimitExceeded:
                raise
        raise last_error or ThreadNotFound("no open threads are available")


def create_app(config: TaskConfig, topics: TopicSet, *,
               store: SqliteStore | None = None,
               store_path: str | Path | None = None,
               gateway: BotGateway | None = None,
               crowd: CrowdClient | None = None,
               clock: Callable[[], datetime] = utcnow,
               id_factory: Callable[[], str] | None = None,
               bot_runner: str = "background",
               poll_window: float = 25.0,
               message_cap_per_session: int = 1000,
               public_base_url: str | None = None,
               static_dir: str | Path | None = None,
               admin_credentials: tuple[str, str] | None = None) -> FastAPI:
    """Build one platform instance as an ASGI app.

    Instances share nothing: each gets its own store, engine, and registry.
    """
    if store is None:
        store = SqliteStore(store_path or ":memory:")
    core = ServiceCore(config=config, topics=topics, store=store, gateway=gateway,
                       crowd=crowd, clock=clock, id_factory=id_factory,
                       bot_runner=bot_runner, poll_window=poll_window,
                       message_cap_per_session=message_cap_per_session,
                       public_base_url=public_base_url)
    if admin_credentials is not None:
        core.ensure_admin(*admin_credentials)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        # Graceful shutdown: let in-flight bot turns land before exit.
        core.executor.shutdown(wait=True)

    app = FastAPI(lifespan=lifespan, docs_url=None, redoc_url=None, openapi_url=None)
    app.state.core = core
    prefix = core.prefix

    @app.exception_handler(ChatbenchError)
    async def domain_error_handler(request: Request, exc: ChatbenchError):
        return JSONResponse(status_code=exc.http_status, content={"error": exc.to_payload()})

    # ----------------------------------------------------------- dependencies

    def optional_session(request: Request) -> Session | None:
        token = request.cookies.get(SESSION_COOKIE)
        if not token:
            return None
        return core.store.get_session(token)

    def required_session(request: Request) -> Session:
        session = optional_session(request)
        if session is None:
            raise AuthRequired("sign in first")
        return session

    def consented_session(session: Session = Depends(required_session)) -> Session:
        if not session.consent_ok:
            raise Forbidden("agreement not yet accepted")
        return session

    def admin_session(session: Session = Depends(required_session)) -> Session:
        if session.role != "admin":
            raise Forbidden("administrator access required")
        return session

    def authorize_thread_read(thread_id: str, session: Session) -> None:
        thread = core.engine.thread_view(thread_id)  # raises ThreadNotFound
        if session.role == "admin":
            return
        if thread.participant(session.user_id) is None:
            raise Forbidden("not a participant of this thread")

    def set_session_cookie(response: Response, session: Session) -> None:
        response.set_cookie(SESSION_COOKIE, session.session_id,
                            httponly=True, samesite="lax", path=prefix or "/")

    async def read_json(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception:
            raise SchemaError("request body must be JSON")
        if not isinstance(body, dict):
            raise SchemaError("request body must be a JSON object")
        return body

    # ----------------------------------------------------------------- pages

    @app.get(f"{prefix}/", response_class=HTMLResponse)
    async def index() -> str:
        return pages.index_page(prefix, config.task_name, config.onboarding is not None)

    @app.get(f"{prefix}/agreement", response_class=HTMLResponse)
    async def agreement() -> str:
        if config.onboarding is None:
            return pages.message_page("No agreement", "This task has no onboarding agreement.")
        return config.onboarding.agreement_file.read_text(encoding="utf-8")

    @app.get(f"{prefix}/consent", response_class=HTMLResponse)
    async def consent_gate(request: Request,
                           session: Session = Depends(required_session)) -> str:
        if config.onboarding is None:
            return pages.message_page("No agreement", "Nothing to accept; continue to your task.")
        return_to = request.query_params.get("return", f"{prefix}/landing")
        agreement_html = config.onboarding.agreement_file.read_text(encoding="utf-8")
        return pages.consent_page(prefix, agreement_html,
                                  list(config.onboarding.checkbox_texts), return_to)

    @app.get(f"{prefix}/landing")
    async def landing(request: Request):
        query = dict(request.query_params)
        entry = parse_entry(query)
        if entry is not None and entry.preview:
            return HTMLResponse(pages.preview_page(config.crowd.title or config.task_name,
                                                   config.crowd.description))

        if entry is None:
            # External-URL mode: the visitor signs up / logs in first.
            session = optional_session(request)
            if session is None:
                return RedirectResponse(f"{prefix}/", status_code=303)
            user_id = session.user_id
            preferred = None
            topic_id = query.get("topicId")
        else:
            # Crowd mode: auto-signup with the platform worker id, no password.
            user = core.store.get_user_by_ext(entry.worker_id)
            if user is None:
                user = UserRecord(id=entry.worker_id, role="worker",
                                  ext_worker_id=entry.worker_id)
                core.store.create_user(user)
            session = core.create_session(user)
            user_id = user.id
            preferred = None
            topic_id = None
            if entry.hit_id:
                task = core.store.get_crowd_task(entry.hit_id)
                if task is not None:
                    preferred = task.thread_id
                    topic_id = task.topic_id

        response: Response
        if not session.consent_ok:
            from urllib.parse import urlencode

            return_to = f"{prefix}/landing" + (f"?{urlencode(query)}" if query else "")
            response = RedirectResponse(f"{prefix}/consent?return={return_to}", status_code=303)
            set_session_cookie(response, session)
            return response

        existing = core.existing_thread_for(user_id)
        if existing is not None:
            response = RedirectResponse(f"{prefix}/threads/{existing}", status_code=303)
            set_session_cookie(response, session)
            return response

        try:
            thread_id = core.claim_thread(user_id, topic_id=topic_id, preferred=preferred)
        except LimitExceeded as err:
            return HTMLResponse(pages.message_page("Task limit reached", err.message), status_code=409)
        except ChatbenchError as err:
            return HTMLResponse(pages.message_page("No tasks available", err.message), status_code=404)

        if entry is not None and entry.assignment_id:
            if core.store.open_assignment(thread_id, user_id) is None:
                from .model import AssignmentRecord

                core.store.create_assignment(AssignmentRecord(
                    thread_id=thread_id, user_id=user_id,
                    ext_assignment_id=entry.assignment_id, ext_hit_id=entry.hit_id))
        response = RedirectResponse(f"{prefix}/threads/{thread_id}", status_code=303)
        set_session_cookie(response, session)
        return response

    @app.get(f"{prefix}/threads/{{thread_id}}", response_class=HTMLResponse)
    async def thread_view(thread_id: str,
                          session: Session = Depends(consented_session)) -> str:
        authorize_thread_read(thread_id, session)
        return pages.thread_page(
            prefix, thread_id, config.task_name,
            survey_render_model(config.survey),
            role=session.role,
            instruction={"title": config.crowd.title or config.task_name,
                         "description": config.crowd.description})

    @app.get(f"{prefix}/admin", response_class=HTMLResponse)
    async def admin_view(session: Session = Depends(admin_session)) -> str:
        return pages.admin_page(prefix, config.task_name)

    # ------------------------------------------------------------- auth API

    @app.post(f"{prefix}/api/signup")
    async def signup(request: Request):
        body = await read_json(request)
        user_id = str(body.get("user_id") or "").strip()
        secret = str(body.get("secret") or "")
        if not user_id or not secret:
            raise SchemaError("user_id and secret are required")
        if core.store.get_user(user_id) is not None:
            raise AlreadyParticipant(f"user id {user_id!r} is taken")
        user = UserRecord(id=user_id, role="worker", secret_hash=hash_secret(secret))
        core.store.create_user(user)
        session = core.create_session(user)
        payload = {"user_id": user_id, "consent_required": not session.consent_ok}
        response = JSONResponse(payload)
        set_session_cookie(response, session)
        return response

    @app.post(f"{prefix}/api/login")
    async def login(request: Request):
        body = await read_json(request)
        user_id = str(body.get("user_id") or "")
        secret = str(body.get("secret") or "")
        user = core.store.get_user(user_id)
        if user is None or not verify_secret(secret, user.secret_hash):
            raise AuthRequired("unknown user or wrong secret")
        session = core.create_session(user)
        payload = {"user_id": user_id, "role": user.role,
                   "consent_required": not session.consent_ok}
        response = JSONResponse(payload)
        set_session_cookie(response, session)
        return response

    @app.get(f"{prefix}/api/session")
    async def whoami(session: Session = Depends(required_session)):
        return {"user_id": session.user_id, "role": session.role,
                "consent_ok": session.consent_ok}

    @app.post(f"{prefix}/api/consent")
    async def consent(request: Request, session: Session = Depends(required_session)):
        body = await read_json(request)
        checked = body.get("checked")
        if not isinstance(checked, list) or not all(isinstance(c, bool) for c in checked):
            raise SchemaError("checked must be a list of booleans")
        expected = len(config.onboarding.checkbox_texts) if config.onboarding else 0
        unchecked = [i for i in range(expected)
                     if i >= len(checked) or not checked[i]]
        if unchecked:
            raise IncompleteConsent(unchecked)
        if config.onboarding is not None:
            core.store.set_consent(session.user_id, core.clock())
        core.store.set_session_consent(session.session_id, True)
        return {"consent_ok": True}

    # ------------------------------------------------------------ thread API

    @app.get(f"{prefix}/api/threads/{{thread_id}}")
    async def thread_bootstrap(thread_id: str,
                               session: Session = Depends(consented_session)):
        authorize_thread_read(thread_id, session)
        thread = core.engine.thread_view(thread_id)
        return {
            "thread_id": thread.id,
            "topic_id": thread.topic_id,
            "state": thread.state.value,
            "survey": survey_render_model(config.survey),
            "allow_chat_after_done": config.chat.allow_chat_after_done,
        }

    @app.get(f"{prefix}/api/threads/{{thread_id}}/updates")
    async def updates(thread_id: str, since: int = 0, wait: int = 0,
                      session: Session = Depends(consented_session)):
        authorize_thread_read(thread_id, session)
        seen_version = core.engine.version(thread_id)
        delta = core.engine.delta(thread_id, since, session.user_id)
        if wait and not delta.messages:
            await anyio.to_thread.run_sync(
                core.engine.wait_for_change, thread_id, seen_version, core.poll_window,
                limiter=core.poll_limiter())
            delta = core.engine.delta(thread_id, since, session.user_id)
        return delta.to_wire()

    @app.post(f"{prefix}/api/threads/{{thread_id}}/messages")
    async def post_message(thread_id: str, request: Request,
                           session: Session = Depends(consented_session)):
        body = await read_json(request)
        text = body.get("text")
        if not isinstance(text, str):
            raise SchemaError("text must be a string")
        core.count_message(session.session_id, thread_id)
        outcome = core.engine.post_human_message(thread_id, session.user_id, text)
        if outcome.bot_reply_pending:
            core.schedule_bot_turns(thread_id)
        return {"message": outcome.message.to_wire(), "state": outcome.state.value,
                "bot_reply_pending": outcome.bot_reply_pending}

    @app.post(f"{prefix}/api/threads/{{thread_id}}/ratings")
    async def post_ratings(thread_id: str, request: Request,
                           session: Session = Depends(consented_session)):
        body = await read_json(request)
        answers = body.get("answers")
        if not isinstance(answers, dict):
            raise SchemaError("answers must be an object keyed by question id")
        assignment = core.store.open_assignment(thread_id, session.user_id)
        state = core.engine.submit_ratings(thread_id, session.user_id, answers)
        payload: dict[str, Any] = {"state": state.value}
        if assignment is not None:
            payload["assignment"] = {"assignment_id": assignment.ext_assignment_id,
                                     "hit_id": assignment.ext_hit_id}
        return payload

    # -------------------------------------------------------------- admin API

    @app.get(f"{prefix}/api/admin/topics")
    async def admin_topics(session: Session = Depends(admin_session)):
        stats = core.store.topic_stats()
        out = []
        for topic in core.topics:
            entry = {"id": topic.id, "name": topic.name,
                     "seed_turn_count": len(topic.seed_turns),
                     "threads_created": 0, "last_created_at": None}
            entry.update(stats.get(topic.id, {}))
            out.append(entry)
        return {"topics": out}

    def launch_one(topic_id: str, count: int, bot_params: Mapping[str, Any],
                   max_per_worker: int | None) -> dict:
        topic = core.topics.get(topic_id)
        cap = config.limits.max_threads_per_topic
        if cap is not None:
            existing = core.store.count_threads_for_topic(topic_id)
            if existing + count > cap:
                raise LimitExceeded(
                    f"topic {topic_id!r} allows {cap} thread(s); {existing} exist, {count} requested")
        threads = [core.engine.create_thread(topic, bot_params, max_per_worker)
                   for _ in range(count)]
        handles = []
        if config.crowd.platform != "none":
            handles = core.crowd.publish_task(
                topic_id, count, entry_base=f"{core.public_base_url}{prefix}",
                thread_ids=[t.id for t in threads])
        return {"thread_ids": [t.id for t in threads],
                "task_handles": [{"hit_id": h.hit_id, "entry_url": h.entry_url}
                                 for h in handles]}

    def delete_one(thread_id: str) -> dict:
        core.engine.delete_thread(thread_id)
        task = core.store.crowd_task_for_thread(thread_id)
        if task is not None and config.crowd.platform != "none":
            try:
                core.crowd.expire_task(task.hit_id)
            except ChatbenchError as err:
                logger.warning("could not expire task %s: %s", task.hit_id, err.message)
        return {"deleted": thread_id}

    def batch_report(action: str, ids: list[str], apply) -> dict:
        results = []
        for item_id in ids:
            try:
                outcome = apply(item_id)
            except ChatbenchError as err:
                results.append({"id": item_id, "ok": False, "error": err.to_payload()})
            else:
                results.append({"id": item_id, "ok": True, **outcome})
        return {"action": action, "results": results}

    @app.post(f"{prefix}/api/admin/topics/{{topic_id}}/launch")
    async def admin_launch(topic_id: str, request: Request,
                           session: Session = Depends(admin_session)):
        body = await read_json(request)
        count = body.get("count", 1)
        if not isinstance(count, int) or count < 1:
            raise SchemaError("count must be a positive integer")
        bot_params = body.get("bot_params") or {}
        if not isinstance(bot_params, dict):
            raise SchemaError("bot_params must be an object")
        max_per_worker = body.get("max_per_worker")
        if max_per_worker is not None and (not isinstance(max_per_worker, int) or max_per_worker < 1):
            raise SchemaError("max_per_worker must be a positive integer")
        return batch_report("launch", [topic_id],
                            lambda tid: launch_one(tid, count, bot_params, max_per_worker))

    @app.post(f"{prefix}/api/admin/batch")
    async def admin_batch(request: Request, session: Session = Depends(admin_session)):
        """Parallel management: apply launch/delete to many ids, one report."""
        body = await read_json(request)
        action = body.get("action")
        ids = body.get("ids")
        if action not in ("launch", "delete"):
            raise SchemaError("action must be 'launch' or 'delete'")
        if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
            raise SchemaError("ids must be a list of strings")
        params = body.get("params") or {}
        if action == "launch":
            count = params.get("count", 1)
            bot_params = params.get("bot_params") or {}
            max_per_worker = params.get("max_per_worker")
            return batch_report("launch", ids,
                                lambda tid: launch_one(tid, count, bot_params, max_per_worker))
        return batch_report("delete", ids, delete_one)

    @app.post(f"{prefix}/api/admin/threads/delete")
    async def admin_delete(request: Request, session: Session = Depends(admin_session)):
        body = await read_json(request)
        ids = body.get("ids")
        if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
            raise SchemaError("ids must be a list of strings")
        return batch_report("delete", ids, delete_one)

    @app.get(f"{prefix}/api/admin/threads")
    async def admin_threads(state: str | None = None, topic_id: str | None = None,
                            user_id: str | None = None,
                            session: Session = Depends(admin_session)):
        state_filter = None
        if state is not None:
            try:
                state_filter = ThreadState(state)
            except ValueError:
                raise SchemaError(f"unknown state {state!r}")
        summaries = core.store.list_threads(state=state_filter, topic_id=topic_id,
                                            user_id=user_id)
        return {"threads": [s.to_wire() for s in summaries]}

    @app.get(f"{prefix}/api/admin/threads/{{thread_id}}/export")
    async def admin_export(thread_id: str, session: Session = Depends(admin_session)):
        document = core.store.export_thread(thread_id, include_deleted=True)
        return Response(content=document, media_type="application/json",
                        headers={"Content-Disposition":
                                 f'attachment; filename="thread-{thread_id}.json"'})

    @app.post(f"{prefix}/api/admin/workers/{{worker_id}}/qualifications")
    async def admin_assign_qualification(worker_id: str, request: Request,
                                         session: Session = Depends(admin_session)):
        body = await read_json(request)
        name = body.get("name")
        if not isinstance(name, str) or not name:
            raise SchemaError("name must be a nonempty string")
        core.crowd.assign_qualification(worker_id, name)
        user = core.store.get_user(worker_id)
        return {"worker_id": worker_id, "qualifications": sorted(user.qualifications)}

    @app.delete(f"{prefix}/api/admin/workers/{{worker_id}}/qualifications")
    async def admin_revoke_qualification(worker_id: str, name: str,
                                         session: Session = Depends(admin_session)):
        core.crowd.revoke_qualification(worker_id, name)
        user = core.store.get_user(worker_id)
        return {"worker_id": worker_id, "qualifications": sorted(user.qualifications)}

    @app.post(f"{prefix}/api/admin/workers/{{worker_id}}/bonus")
    async def admin_bonus(worker_id: str, request: Request,
                          session: Session = Depends(admin_session)):
        body = await read_json(request)
        assignment_id = body.get("assignment_id")
        reason = str(body.get("reason") or "")
        if not isinstance(assignment_id, str) or not assignment_id:
            raise SchemaError("assignment_id must be a nonempty string")
        try:
            amount = Decimal(str(body.get("amount")))
        except (InvalidOperation, TypeError):
            raise SchemaError("amount must be a decimal string")
        key = body.get("idempotency_key") or f"bonus:{assignment_id}:{reason}"
        entry = core.crowd.grant_bonus(worker_id, assignment_id, amount, reason, key)
        return {"acknowledgment": entry.to_wire()}

    # ----------------------------------------------------------------- static

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount(f"{prefix}/static", StaticFiles(directory=str(static_dir)), name="static")

    return app

"""Human-in-the-loop ranking sessions over HTTP.

A session owns a live engine for a set of items.  Raters pull pairwise
queries (``GET /sessions/{id}/query``) and submit winners
(``POST /sessions/{id}/answers``); each query is a ticket asking whether one
engine-chosen item beats a uniformly drawn opponent, so an answer is exactly
one Borda-reduction reward for the chosen item.

Rounds are served synchronously: a session starts with one bootstrap ticket
per item, and after that every engine round issues two tickets per active
boundary.  New tickets appear only once the previous round's are all
answered, because the engine's choice of critical arms depends on every
earlier reward.  A ticket left unanswered beyond the configured timeout is
re-served to the next rater to ask; the first answer received wins, and
duplicates are acknowledged idempotently.

Every state-changing event (creation, ticket issue, answer, round
advancement, finish, abort) is appended to a per-session JSONL log and
fsynced *before* the effect is acknowledged, and opponents are drawn and
recorded at ticket-issue time, so :func:`replay` rebuilds bit-identical
engine state from the log alone.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import engine
from .baselines import ranking_from_values
from .bernoulli import ExplorationSchedule
from .engine import ClusterSpec, EngineState

BOOTSTRAP_ROUND = 0


class ReplayError(ValueError):
    """A session event log is empty, corrupt, or inconsistent."""


class SessionConflict(RuntimeError):
    """The operation is invalid for the session's current status."""


@dataclass(frozen=True)
class Item:
    id: str
    label: str
    payload: Optional[str] = None

    def to_dict(self) -> dict:
        return {"id": self.id, "label": self.label, "payload": self.payload}


@dataclass
class Ticket:
    id: str
    round: int
    boundary: Optional[int]
    role: str  # "bootstrap" | "lower" | "upper"
    left: int  # arm index being measured (reward accrues here)
    right: int  # opponent arm index, fixed at issue time
    issued_at: float
    served_at: Optional[float] = None
    served_to: Optional[str] = None
    answered: bool = False
    winner: Optional[str] = None
    reward: Optional[float] = None


@dataclass
class Session:
    """All live state of one ranking session; mutate only under ``lock``."""

    id: str
    items: tuple[Item, ...]
    spec: ClusterSpec
    epsilon: float
    delta: float
    schedule: ExplorationSchedule
    seed: int
    created_at: float
    rng: np.random.Generator
    log_path: Path
    engine_state: Optional[EngineState] = None
    status: str = "active"  # active | finished | aborted
    round: int = BOOTSTRAP_ROUND
    advanced_round: int = BOOTSTRAP_ROUND - 1  # last round consumed by the engine
    tickets: dict[str, Ticket] = field(default_factory=dict)
    issue_order: list[str] = field(default_factory=list)
    seq: int = 0
    total_answers: int = 0
    updated_at: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)
    _log_handle: Optional[object] = None

    @property
    def num_arms(self) -> int:
        return len(self.items)

    def arm_of(self, item_id: str) -> int:
        for arm, item in enumerate(self.items):
            if item.id == item_id:
                return arm
        raise KeyError(item_id)

    def round_tickets(self) -> list[Ticket]:
        return [
            self.tickets[tid]
            for tid in self.issue_order
            if self.tickets[tid].round == self.round
        ]

    # -- event log ---------------------------------------------------------

    def append_event(self, event: dict) -> None:
        """Durably append one event; must complete before acknowledging."""
        if self._log_handle is None:
            self._log_handle = open(self.log_path, "a", encoding="utf-8")
        line = json.dumps(event, sort_keys=True, separators=(",", ":"))
        self._log_handle.write(line + "\n")
        self._log_handle.flush()
        os.fsync(self._log_handle.fileno())

    def log_event(self, event: dict) -> None:
        """Assign the next sequence number and durably append.

        The counter only advances after the write succeeds, so a failed
        append can never leave a gap in the log's sequence numbers.
        """
        seq = self.seq + 1
        self.append_event({**event, "seq": seq})
        self.seq = seq

    def close(self) -> None:
        if self._log_handle is not None:
            self._log_handle.close()
            self._log_handle = None


def _draw_opponent(rng: np.random.Generator, num_arms: int, left: int) -> int:
    """Uniform opponent among the other arms (same draw shape everywhere)."""
    j = int(rng.integers(0, num_arms - 1))
    if j >= left:
        j += 1
    return j


def _new_ticket(
    session: Session,
    round_no: int,
    boundary: Optional[int],
    role: str,
    left: int,
    now: float,
) -> Ticket:
    right = _draw_opponent(session.rng, session.num_arms, left)
    ticket = Ticket(
        id=f"q{len(session.issue_order):05d}",
        round=round_no,
        boundary=boundary,
        role=role,
        left=left,
        right=right,
        issued_at=now,
    )
    return ticket


def _log_and_register_ticket(session: Session, ticket: Ticket) -> None:
    session.log_event(
        {
            "type": "ticket",
            "ticket": ticket.id,
            "round": ticket.round,
            "boundary": ticket.boundary,
            "role": ticket.role,
            "left": session.items[ticket.left].id,
            "right": session.items[ticket.right].id,
            "issued_at": ticket.issued_at,
        }
    )
    session.tickets[ticket.id] = ticket
    session.issue_order.append(ticket.id)


def _issue_bootstrap(session: Session, now: float) -> None:
    for arm in range(session.num_arms):
        _log_and_register_ticket(
            session, _new_ticket(session, BOOTSTRAP_ROUND, None, "bootstrap", arm, now)
        )


def _issue_round(session: Session, now: float) -> None:
    """Two tickets per active boundary, in the order the engine samples."""
    state = session.engine_state
    assert state is not None and state.active
    session.round += 1
    for boundary in sorted(state.active):
        l_arm, u_arm = engine.critical_arms(state, boundary)
        _log_and_register_ticket(
            session, _new_ticket(session, session.round, boundary, "lower", l_arm, now)
        )
        _log_and_register_ticket(
            session, _new_ticket(session, session.round, boundary, "upper", u_arm, now)
        )


def _compute_advanced(session: Session) -> EngineState:
    """The engine state after consuming the current round's answers.

    Deterministic in the logged tickets: bootstrap rewards initialize the
    engine, later rounds feed each ticket's reward to the sampler in issue
    order (the exact order the engine asks for them).
    """
    tickets = session.round_tickets()
    if session.engine_state is None:
        rewards = [0.0] * session.num_arms
        for t in tickets:
            rewards[t.left] = float(t.reward)
        return engine.init(session.spec, session.epsilon, session.schedule, rewards)

    queues: dict[int, deque[float]] = {}
    for t in tickets:
        queues.setdefault(t.left, deque()).append(float(t.reward))

    def sampler(arm: int) -> float:
        queue = queues.get(arm)
        if not queue:
            raise ReplayError(
                f"round {session.round} has no recorded reward for arm {arm}"
            )
        return queue.popleft()

    state = engine.step(session.engine_state, sampler)
    if any(queues.values()):
        raise ReplayError(f"round {session.round} has unconsumed rewards")
    return state


def _round_complete(session: Session) -> bool:
    tickets = session.round_tickets()
    return bool(tickets) and all(t.answered for t in tickets)


def _advance_if_ready(session: Session, now: float) -> None:
    """Advance the engine once the in-flight round is fully answered.

    Issues the next round's tickets (or finishes the session) and writes a
    recovery snapshot.  Safe to call at any time: it does nothing while
    answers are outstanding, and it picks up cleanly after a crash that
    interrupted the advance-then-issue sequence (``advanced_round`` records
    which rounds the engine has already consumed).
    """
    changed = False
    while session.status == "active":
        state = session.engine_state
        if state is not None and state.finished:
            session.log_event({"type": "finished", "at": now})
            session.status = "finished"
            session.updated_at = now
            changed = True
            break
        if state is not None and session.advanced_round == session.round:
            # The engine consumed this round but its successor was never
            # issued (recovery from a crash between the two log writes).
            _issue_round(session, now)
            changed = True
            break
        if not _round_complete(session):
            break
        state = _compute_advanced(session)
        session.engine_state = state
        session.advanced_round = session.round
        session.log_event(
            {
                "type": "advanced",
                "round": session.round,
                "t": state.t,
                "active": sorted(state.active),
                "at": now,
            }
        )
        session.updated_at = now
        changed = True
    if changed:
        write_snapshot(session)


def create_session(
    registry: "SessionRegistry",
    items: list[Item],
    boundaries: tuple[int, ...],
    epsilon: float,
    delta: float,
    seed: Optional[int] = None,
) -> Session:
    if len(items) < 2:
        raise ValueError(f"need at least 2 items, got {len(items)}")
    ids = [item.id for item in items]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate item ids: {dupes}")
    if any(not item.id for item in items):
        raise ValueError("item ids must be non-empty")
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    spec = ClusterSpec(tuple(boundaries), len(items))
    schedule = ExplorationSchedule.default_for(
        delta=delta, num_arms=len(items), num_clusters=spec.num_clusters
    )
    if seed is None:
        seed = int.from_bytes(os.urandom(4), "big")
    now = time.time()
    session_id = uuid.uuid4().hex[:12]
    session = Session(
        id=session_id,
        items=tuple(items),
        spec=spec,
        epsilon=epsilon,
        delta=delta,
        schedule=schedule,
        seed=seed,
        created_at=now,
        rng=np.random.default_rng(seed),
        log_path=registry.log_path(session_id),
        updated_at=now,
    )
    session.append_event(
        {
            "type": "created",
            "seq": 0,
            "session": session_id,
            "items": [item.to_dict() for item in items],
            "boundaries": list(spec.boundaries),
            "epsilon": epsilon,
            "delta": delta,
            "schedule": {
                "k1": schedule.k1,
                "alpha": schedule.alpha,
                "delta": schedule.delta,
                "num_arms": schedule.num_arms,
                "num_clusters": schedule.num_clusters,
            },
            "seed": seed,
            "created_at": now,
        }
    )
    _issue_bootstrap(session, now)
    registry.add(session)
    return session


def next_query(session: Session, rater: str, timeout: float) -> dict:
    """An unanswered ticket for this rater, or a wait/done marker."""
    now = time.time()
    with session.lock:
        if session.status == "aborted":
            raise SessionConflict("session is aborted")
        _advance_if_ready(session, now)
        if session.status == "finished":
            return {"status": "done", "summary": _summary(session)}

        pending = [t for t in session.round_tickets() if not t.answered]
        unserved = [t for t in pending if t.served_at is None]
        if unserved:
            ticket = unserved[0]
        else:
            stale = [t for t in pending if now - t.served_at >= timeout]
            if stale:
                ticket = min(stale, key=lambda t: t.served_at)
            else:
                retry = min(timeout - (now - t.served_at) for t in pending)
                return {
                    "status": "wait",
                    "outstanding": len(pending),
                    "retry_after": max(retry, 0.0),
                }
        ticket.served_at = now
        ticket.served_to = rater
        return {"status": "ticket", "ticket": _ticket_view(session, ticket)}


def submit_answer(
    session: Session, ticket_id: str, winner: str, rater: str
) -> dict:
    now = time.time()
    with session.lock:
        if session.status == "aborted":
            raise SessionConflict("session is aborted")
        if session.status == "finished":
            raise SessionConflict("session already finished")
        ticket = session.tickets.get(ticket_id)
        if ticket is None:
            raise KeyError(f"unknown ticket {ticket_id!r}")
        left_id = session.items[ticket.left].id
        right_id = session.items[ticket.right].id
        if winner not in (left_id, right_id):
            raise ValueError(
                f"winner must be {left_id!r} or {right_id!r}, got {winner!r}"
            )
        if ticket.answered:
            return {
                "ok": True,
                "duplicate": True,
                "ticket": ticket_id,
                "summary": _summary(session),
            }
        session.log_event(
            {
                "type": "answer",
                "ticket": ticket_id,
                "winner": winner,
                "rater": rater,
                "received_at": now,
            }
        )
        ticket.answered = True
        ticket.winner = winner
        ticket.reward = 1.0 if winner == left_id else 0.0
        session.total_answers += 1
        session.updated_at = now
        _advance_if_ready(session, now)
        return {
            "ok": True,
            "duplicate": False,
            "ticket": ticket_id,
            "summary": _summary(session),
        }


def abort_session(session: Session) -> dict:
    now = time.time()
    with session.lock:
        if session.status == "finished":
            raise SessionConflict("session already finished")
        if session.status == "active":
            session.log_event({"type": "aborted", "at": now})
            session.status = "aborted"
            session.updated_at = now
            write_snapshot(session)
        return {"session": session.id, "status": session.status}


def session_state(session: Session) -> dict:
    with session.lock:
        return _summary(session)


def _ticket_view(session: Session, ticket: Ticket) -> dict:
    return {
        "id": ticket.id,
        "round": ticket.round,
        "boundary": ticket.boundary,
        "role": ticket.role,
        "left": session.items[ticket.left].to_dict(),
        "right": session.items[ticket.right].to_dict(),
        "answered_total": session.total_answers,
    }


def _summary(session: Session) -> dict:
    """Live per-item statistics plus the current anytime clustering."""
    state = session.engine_state
    rows = []
    values = []
    for arm, item in enumerate(session.items):
        if state is None:
            pulls, mean_hat, lower, upper = 0, None, 0.0, 1.0
            values.append(0.0)
        else:
            stats = state.arms[arm]
            pulls = stats.pulls
            mean_hat = stats.mean_hat
            lower = stats.lower
            upper = stats.upper
            values.append(stats.mean_hat)
        rows.append(
            {
                **item.to_dict(),
                "pulls": pulls,
                "mean_hat": mean_hat,
                "lower": lower,
                "upper": upper,
            }
        )
    ranking = ranking_from_values(tuple(values), session.spec)
    for arm, row in enumerate(rows):
        row["rank"] = ranking.sigma[arm]
    clusters = [
        [session.items[arm].id for arm in sorted(c, key=lambda a: ranking.sigma[a])]
        for c in ranking.clusters
    ]
    pending = [t for t in session.round_tickets() if not t.answered]
    return {
        "session": session.id,
        "status": session.status,
        "round": session.round,
        "engine_t": None if state is None else state.t,
        "active_boundaries": [] if state is None else sorted(state.active),
        "total_answers": session.total_answers,
        "outstanding": len(pending),
        "items": rows,
        "clusters": clusters,
        "epsilon": session.epsilon,
        "delta": session.delta,
        "boundaries": list(session.spec.boundaries),
        "created_at": session.created_at,
        "updated_at": session.updated_at,
    }


# -- persistence -----------------------------------------------------------


def snapshot_path(log_path: Path) -> Path:
    return log_path.with_suffix(".snapshot.json")


def write_snapshot(session: Session) -> None:
    """Atomically record the current state for fast recovery checks."""
    data = {
        "session": session.id,
        "status": session.status,
        "round": session.round,
        "seq": session.seq,
        "total_answers": session.total_answers,
        "engine": (
            None
            if session.engine_state is None
            else engine.state_to_dict(session.engine_state)
        ),
    }
    target = snapshot_path(session.log_path)
    tmp = target.with_suffix(".tmp")
    tmp.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")
    tmp.replace(target)


def replay(log_path: Union[str, Path]) -> Session:
    """Rebuild a session from its event log.

    The rebuilt engine state is bit-identical to the live session's because
    opponents were fixed at issue time, rewards are replayed in issue order,
    and every tie-break in the engine is deterministic.  Raises
    :class:`ReplayError` (with the offending line number) on empty logs,
    corrupt records, sequence gaps, or events that contradict the tickets
    seen so far; a truncated log yields the state as of its last event.
    """
    log_path = Path(log_path)
    session: Optional[Session] = None
    expected_seq = 1
    with open(log_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ReplayError(f"{log_path}:{lineno}: bad record: {exc}") from None
            etype = event.get("type")
            if session is None:
                if etype != "created":
                    raise ReplayError(
                        f"{log_path}:{lineno}: first event must be 'created', "
                        f"got {etype!r}"
                    )
                session = _session_from_created(event, log_path)
                continue
            if etype == "created":
                raise ReplayError(f"{log_path}:{lineno}: duplicate 'created' event")
            if event.get("seq") != expected_seq:
                raise ReplayError(
                    f"{log_path}:{lineno}: sequence gap: expected "
                    f"{expected_seq}, got {event.get('seq')}"
                )
            expected_seq += 1
            session.seq = event["seq"]
            try:
                _apply_event(session, event)
            except ReplayError:
                raise
            except (KeyError, ValueError, AssertionError) as exc:
                raise ReplayError(f"{log_path}:{lineno}: {exc}") from None
    if session is None:
        raise ReplayError(f"{log_path}: empty log")
    return session


def _session_from_created(event: dict, log_path: Path) -> Session:
    items = tuple(
        Item(id=i["id"], label=i["label"], payload=i.get("payload"))
        for i in event["items"]
    )
    spec = ClusterSpec(tuple(event["boundaries"]), len(items))
    sched = event["schedule"]
    schedule = ExplorationSchedule(
        k1=sched["k1"],
        alpha=sched["alpha"],
        delta=sched["delta"],
        num_arms=sched["num_arms"],
        num_clusters=sched["num_clusters"],
    )
    return Session(
        id=event["session"],
        items=items,
        spec=spec,
        epsilon=event["epsilon"],
        delta=event["delta"],
        schedule=schedule,
        seed=event["seed"],
        created_at=event["created_at"],
        rng=np.random.default_rng(event["seed"]),
        log_path=log_path,
        updated_at=event["created_at"],
    )


def _apply_event(session: Session, event: dict) -> None:
    etype = event["type"]
    if etype == "ticket":
        left = session.arm_of(event["left"])
        right = session.arm_of(event["right"])
        # Re-executing the opponent draw keeps the session's RNG position
        # correct for tickets issued after recovery.
        redrawn = _draw_opponent(session.rng, session.num_arms, left)
        if redrawn != right:
            raise ReplayError(
                f"ticket {event['ticket']} opponent {event['right']!r} does "
                f"not match the session's random stream"
            )
        ticket = Ticket(
            id=event["ticket"],
            round=event["round"],
            boundary=event["boundary"],
            role=event["role"],
            left=left,
            right=right,
            issued_at=event["issued_at"],
        )
        if ticket.id in session.tickets:
            raise ReplayError(f"duplicate ticket id {ticket.id!r}")
        session.tickets[ticket.id] = ticket
        session.issue_order.append(ticket.id)
        session.round = max(session.round, ticket.round)
    elif etype == "answer":
        ticket = session.tickets.get(event["ticket"])
        if ticket is None:
            raise ReplayError(f"answer references unknown ticket {event['ticket']!r}")
        if ticket.answered:
            raise ReplayError(f"ticket {ticket.id} answered twice")
        left_id = session.items[ticket.left].id
        right_id = session.items[ticket.right].id
        winner = event["winner"]
        if winner not in (left_id, right_id):
            raise ReplayError(
                f"winner {winner!r} is neither side of ticket {ticket.id}"
            )
        ticket.answered = True
        ticket.winner = winner
        ticket.reward = 1.0 if winner == left_id else 0.0
        session.total_answers += 1
        session.updated_at = event["received_at"]
    elif etype == "advanced":
        if event["round"] != session.round or session.advanced_round >= session.round:
            raise ReplayError(
                f"advancement for round {event['round']} does not follow "
                f"round {session.round}"
            )
        if not _round_complete(session):
            raise ReplayError(
                f"round {session.round} advanced before all answers arrived"
            )
        state = _compute_advanced(session)
        if state.t != event["t"] or sorted(state.active) != event["active"]:
            raise ReplayError(
                f"advancement mismatch at round {event['round']}: log says "
                f"t={event['t']} active={event['active']}, replay computed "
                f"t={state.t} active={sorted(state.active)}"
            )
        session.engine_state = state
        session.advanced_round = session.round
        session.updated_at = event["at"]
    elif etype == "finished":
        if session.engine_state is None or not session.engine_state.finished:
            raise ReplayError("'finished' event but boundaries remain active")
        session.status = "finished"
        session.updated_at = event["at"]
    elif etype == "aborted":
        session.status = "aborted"
        session.updated_at = event["at"]
    else:
        raise ReplayError(f"unknown event type {etype!r}")


# -- registry and HTTP app --------------------------------------------------


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Union[str, Path] = "sessions"
    payload_dir: Optional[Union[str, Path]] = None
    ticket_timeout: float = 120.0


class SessionRegistry:
    """All sessions the service knows, recovered from disk on startup."""

    def __init__(self, config: ServiceConfig) -> None:
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        for log in sorted(self.data_dir.glob("*.jsonl")):
            session = replay(log)
            self._sessions[session.id] = session

    def log_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.jsonl"

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(f"unknown session {session_id!r}")
        return session

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)


class ItemIn(BaseModel):
    id: str
    label: Optional[str] = None
    payload: Optional[str] = None


class CreateSessionIn(BaseModel):
    items: list[Union[str, ItemIn]]
    boundaries: list[int]
    epsilon: float = 0.0
    delta: float = 0.1
    seed: Optional[int] = None


class AnswerIn(BaseModel):
    ticket: str
    winner: str
    rater: str = "anonymous"


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    """Build the HTTP application serving the session endpoints."""
    config = config or ServiceConfig()
    registry = SessionRegistry(config)

    app = FastAPI(title="coarse ranking sessions")
    app.state.registry = registry
    # The rater frontend is typically hosted as static files on a different
    # origin; answers carry no credentials, so a blanket allowance is safe.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def get_session(session_id: str) -> Session:
        try:
            return registry.get(session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    @app.post("/sessions", status_code=201)
    def http_create(body: CreateSessionIn) -> dict:
        items = []
        for entry in body.items:
            if isinstance(entry, str):
                items.append(Item(id=entry, label=entry))
            else:
                items.append(
                    Item(
                        id=entry.id,
                        label=entry.label if entry.label is not None else entry.id,
                        payload=entry.payload,
                    )
                )
        try:
            session = create_session(
                registry,
                items,
                tuple(body.boundaries),
                body.epsilon,
                body.delta,
                body.seed,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {
            "session": session.id,
            "status": session.status,
            "tickets": len(session.tickets),
        }

    @app.get("/sessions")
    def http_list() -> dict:
        return {"sessions": registry.ids()}

    @app.get("/sessions/{session_id}")
    def http_state(session_id: str) -> dict:
        return session_state(get_session(session_id))

    @app.get("/sessions/{session_id}/query")
    def http_query(
        session_id: str, rater: str = Query(default="anonymous")
    ) -> dict:
        session = get_session(session_id)
        try:
            return next_query(session, rater, registry.config.ticket_timeout)
        except SessionConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None

    @app.post("/sessions/{session_id}/answers")
    def http_answer(session_id: str, body: AnswerIn) -> dict:
        session = get_session(session_id)
        try:
            return submit_answer(session, body.ticket, body.winner, body.rater)
        except SessionConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None

    @app.post("/sessions/{session_id}/abort")
    def http_abort(session_id: str) -> dict:
        session = get_session(session_id)
        try:
            return abort_session(session)
        except SessionConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None

    if config.payload_dir is not None:
        app.mount(
            "/payloads",
            StaticFiles(directory=str(config.payload_dir)),
            name="payloads",
        )
    return app

"""Live session service: protocol endpoints, step timer, append-only journal.

Each session owns one plant episode. Commands (act, ask what, ask why,
submit quiz) serialise onto a per-session lock, the step timer injects a
skip when the deadline lapses, and every accepted or rejected command
lands in an append-only JSONL journal that replays into an identical
session. Clients see only state snapshots, suggestion and explanation
texts, and the quiz sheet; the rule catalog and tree internals stay hidden.
"""

from __future__ import annotations

import asyncio
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .explain import UsedNodeLedger, UserModel, XaiMode, answer_what, answer_why
from .fixtures import build_reference_tree
from .metrics import (
    RuleCatalog,
    load_default_catalog,
    information_power_user,
    score_quiz,
    uniform_weights,
)
from .plantsim import (
    ACTIONS_BY_NAME,
    ACTION_NAMES,
    Action,
    PlantConfig,
    PlantState,
    apply_action,
    new_plant,
)
from .treepolicy import DecisionTreePolicy, expert_action, policy_accuracy, sample_states

STATE_UPDATE_SCHEMA = "state-update/1"
JOURNAL_SCHEMA = "session-journal/1"
REPORT_SCHEMA = "session-report/1"


class Phase(str, Enum):
    BRIEFING = "briefing"
    RUNNING = "running"
    QUIZ = "quiz"
    DONE = "done"


class ProtocolError(Exception):
    def __init__(self, code: str, message: str, status: int = 409):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


class ReplayError(Exception):
    pass


def parse_action(value: Any) -> Action:
    try:
        if isinstance(value, bool):
            raise ValueError
        if isinstance(value, int):
            return Action(value)
        if isinstance(value, str):
            if value in ACTIONS_BY_NAME:
                return ACTIONS_BY_NAME[value]
            return Action(int(value))
    except (ValueError, KeyError):
        pass
    raise ProtocolError("INVALID_ACTION", f"unknown action {value!r}", status=400)


class Journal:
    """Append-only JSONL event log, one object per line, no wall-clock data."""

    def __init__(self, path: Path):
        self.path = path
        self.seq = 0
        path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(path, "a", encoding="utf-8")

    def append(self, event_type: str, payload: dict, step: int | None = None, sync: bool = False) -> None:
        record: dict[str, Any] = {"seq": self.seq, "type": event_type}
        if step is not None:
            record["step"] = step
        record["payload"] = payload
        self._fh.write(json.dumps(record, sort_keys=True) + "\n")
        self._fh.flush()
        if sync:
            os.fsync(self._fh.fileno())
        self.seq += 1

    def close(self) -> None:
        self._fh.close()


class Session:
    """One user's live episode; commands are applied under the owner's lock."""

    def __init__(
        self,
        session_id: str,
        tree: DecisionTreePolicy,
        plant_config: PlantConfig,
        mode: XaiMode,
        catalog: RuleCatalog,
        journal: Journal,
    ):
        self.session_id = session_id
        self.tree = tree
        self.plant_config = plant_config
        self.mode = mode
        self.catalog = catalog
        self.journal = journal
        self.state: PlantState = new_plant(plant_config)
        self.phase = Phase.BRIEFING
        self.user_model = UserModel(plant_config)
        self.ledger = UsedNodeLedger()
        self.what_this_step: dict | None = None
        self.why_this_step = False
        self._explained_feature: int | None = None
        self.what_count = 0
        self.why_count = 0
        self.interaction_log: list[tuple[int, int | None]] = []  # (suggested action, explained feature)
        self.quiz_answers: dict | None = None
        self.questionnaire: dict = {}
        self.quiz_score = None
        self.last_action_payload: dict | None = None
        self.lock = asyncio.Lock()
        self.deadline: float | None = None
        self.timer_task: asyncio.Task | None = None
        self.sockets: list[WebSocket] = []
        self.journal.append(
            "session_created",
            {
                "schema": JOURNAL_SCHEMA,
                "session_id": session_id,
                "mode": mode.value,
                "plant_config": plant_config.to_json_dict(),
            },
        )

    # -- phase and protocol guards ------------------------------------------

    def _require_phase(self, *allowed: Phase) -> None:
        if self.phase not in allowed:
            raise ProtocolError(
                "WRONG_PHASE",
                f"command requires phase {'/'.join(p.value for p in allowed)}, "
                f"session is in {self.phase.value}",
            )

    def _reject(self, code: str, message: str) -> ProtocolError:
        self.journal.append("rejected", {"code": code}, step=self.state.step_index)
        return ProtocolError(code, message)

    def _set_phase(self, phase: Phase) -> None:
        self.phase = phase
        self.journal.append("phase_changed", {"phase": phase.value})

    # -- commands -------------------------------------------------------------

    def start(self) -> None:
        self._require_phase(Phase.BRIEFING)
        self._set_phase(Phase.RUNNING)

    def ask_what(self) -> dict:
        self._require_phase(Phase.RUNNING)
        if self.what_this_step is not None:
            raise self._reject("WHAT_ALREADY_ASKED", "one what question per step")
        suggestion = answer_what(self.tree, self.state)
        payload = suggestion.to_json_dict()
        self.what_this_step = payload
        self.what_count += 1
        self.journal.append("what", payload, step=self.state.step_index)
        return payload

    def ask_why(self) -> dict:
        self._require_phase(Phase.RUNNING)
        if self.what_this_step is None:
            raise self._reject("WHY_BEFORE_WHAT", "ask what before asking why")
        if self.why_this_step:
            raise self._reject("WHY_ALREADY_ASKED", "one why question per step")
        explanation = answer_why(self.tree, self.state, self.mode, self.ledger, self.user_model)
        payload = explanation.to_json_dict()
        self.why_this_step = True
        self._explained_feature = explanation.feature_index
        self.why_count += 1
        self.journal.append("why", payload, step=self.state.step_index)
        return payload

    def apply(self, action: Action, source: str) -> dict:
        self._require_phase(Phase.RUNNING)
        step = self.state.step_index
        if self.what_this_step is not None:
            explained = self._explained_feature if self.why_this_step else None
            self.interaction_log.append((self.what_this_step["action"], explained))
        self.user_model.observe(self.state, action)
        outcome = apply_action(self.state, action, self.plant_config)
        self.state = outcome.next_state
        payload = {
            "action": int(action),
            "action_name": ACTION_NAMES[Action(action)],
            "source": source,
            "energy": outcome.energy_produced,
            "events": list(outcome.events),
            "damage_causes": list(outcome.damage_causes),
            "state": self.state.to_json_dict(),
        }
        self.last_action_payload = payload
        self.journal.append("action", payload, step=step, sync=True)
        self.what_this_step = None
        self.why_this_step = False
        self._explained_feature = None
        if self.state.damaged or self.state.step_index >= self.plant_config.episode_steps:
            self._set_phase(Phase.QUIZ)
        return payload

    def submit_quiz(self, answers: dict, questionnaire: dict | None = None) -> dict:
        self._require_phase(Phase.QUIZ)
        score = score_quiz({str(k): int(v) for k, v in answers.items()}, self.catalog)
        self.quiz_answers = dict(answers)
        self.questionnaire = dict(questionnaire or {})
        self.quiz_score = score
        self.journal.append(
            "quiz",
            {
                "answers": {str(k): int(v) for k, v in answers.items()},
                "questionnaire": self.questionnaire,
                "learned_per_feature": list(score.learned_per_feature),
                "rule_items_correct": score.rule_items_correct,
                "what_if_correct": score.what_if_correct,
            },
            sync=True,
        )
        self._set_phase(Phase.DONE)
        return {
            "learned_per_feature": list(score.learned_per_feature),
            "rule_items_correct": score.rule_items_correct,
            "what_if_correct": score.what_if_correct,
        }

    # -- views ----------------------------------------------------------------

    def interaction_feature_counts(self) -> list[int]:
        from .metrics import ACTION_PRIMARY_FEATURE

        counts = [0] * self.catalog.feature_count
        for suggested, explained in self.interaction_log:
            feature = explained if explained is not None else ACTION_PRIMARY_FEATURE[Action(suggested)]
            counts[feature] += 1
        return counts

    def state_update(self, deadline_seconds: float | None) -> dict:
        return {
            "schema": STATE_UPDATE_SCHEMA,
            "type": "state_update",
            "session_id": self.session_id,
            "phase": self.phase.value,
            "step": self.state.step_index,
            "total_steps": self.plant_config.episode_steps,
            "step_seconds": self.plant_config.step_seconds,
            "deadline_seconds": deadline_seconds,
            "state": self.state.to_json_dict(),
            "score": self.state.energy_total,
            "last_action": self.last_action_payload,
        }

    def report(self, a_m: float) -> dict:
        self._require_phase(Phase.DONE)
        weights = uniform_weights(self.catalog.feature_count)
        ip_user = information_power_user(
            a_m, weights, self.quiz_score.learned_per_feature, self.catalog
        )
        return {
            "schema": REPORT_SCHEMA,
            "session_id": self.session_id,
            "mode": self.mode.value,
            "m1_final_score": self.state.energy_total,
            "m2_learned_per_feature": list(self.quiz_score.learned_per_feature),
            "m2_rule_items_correct": self.quiz_score.rule_items_correct,
            "m2_what_count": self.what_count,
            "m2_why_count": self.why_count,
            "m2_interaction_counts": self.interaction_feature_counts(),
            "m3_what_if_correct": self.quiz_score.what_if_correct,
            "m4_m5_questionnaire": self.questionnaire,
            "a_m": a_m,
            "weights": weights.tolist(),
            "ip_user": ip_user,
        }


@dataclass
class ServiceConfig:
    mode: str = "classical"
    step_seconds: float = 10.0
    journal_dir: str = "journals"
    tree_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8000

    ENV_PREFIX = "INFOPOWER_"

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "ServiceConfig":
        """File values, then environment, then explicit overrides."""
        values: dict[str, Any] = {}
        if path is not None:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            values.update({k: v for k, v in doc.items() if k in cls.__dataclass_fields__})
        env_map = {
            "mode": str,
            "step_seconds": float,
            "journal_dir": str,
            "tree_path": str,
            "host": str,
            "port": int,
        }
        for name, cast in env_map.items():
            raw = os.environ.get(cls.ENV_PREFIX + name.upper())
            if raw is not None:
                values[name] = cast(raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        config = cls(**values)
        XaiMode(config.mode)
        return config


class SessionManager:
    def __init__(
        self,
        tree: DecisionTreePolicy | None = None,
        plant_config: PlantConfig | None = None,
        catalog: RuleCatalog | None = None,
        mode: str = "classical",
        step_seconds: float = 10.0,
        journal_dir: str | Path = "journals",
    ):
        self.tree = tree or build_reference_tree()
        self.plant_config = plant_config or PlantConfig()
        self.catalog = catalog or load_default_catalog()
        self.default_mode = XaiMode(mode)
        self.step_seconds = step_seconds
        self.journal_dir = Path(journal_dir)
        self.sessions: dict[str, Session] = {}
        self._counter = 0
        eval_states = sample_states(self.plant_config, 500, seed=90_001)
        self.a_m = policy_accuracy(
            self.tree, eval_states, lambda s: expert_action(s, self.plant_config)
        )

    def create_session(self, mode: str | None = None) -> Session:
        self._counter += 1
        session_id = f"s{self._counter}"
        journal = Journal(self.journal_dir / f"{session_id}.jsonl")
        session = Session(
            session_id=session_id,
            tree=self.tree,
            plant_config=self.plant_config,
            mode=XaiMode(mode) if mode else self.default_mode,
            catalog=self.catalog,
            journal=journal,
        )
        self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise ProtocolError("UNKNOWN_SESSION", f"no session {session_id!r}", status=404)
        return session


def create_app(manager: SessionManager) -> FastAPI:
    app = FastAPI(title="infopower session service")
    app.state.manager = manager
    timers_enabled = manager.step_seconds > 0

    @app.exception_handler(ProtocolError)
    async def protocol_error_handler(_request: Request, exc: ProtocolError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    def remaining(session: Session) -> float | None:
        if session.deadline is None or session.phase != Phase.RUNNING:
            return None
        loop = asyncio.get_event_loop()
        return max(0.0, session.deadline - loop.time())

    async def broadcast(session: Session, message: dict) -> None:
        dead = []
        for socket in session.sockets:
            try:
                await socket.send_json(message)
            except Exception:
                dead.append(socket)
        for socket in dead:
            if socket in session.sockets:
                session.sockets.remove(socket)

    async def push_state(session: Session) -> None:
        await broadcast(session, session.state_update(remaining(session)))

    def schedule_timer(session: Session) -> None:
        if not timers_enabled or session.phase != Phase.RUNNING:
            session.deadline = None
            return
        loop = asyncio.get_event_loop()
        session.deadline = loop.time() + manager.step_seconds
        expected_step = session.state.step_index

        async def fire():
            await asyncio.sleep(manager.step_seconds)
            async with session.lock:
                if session.phase != Phase.RUNNING or session.state.step_index != expected_step:
                    return
                session.apply(Action.SKIP, source="timer")
                schedule_timer(session)
                await push_state(session)

        if session.timer_task is not None:
            session.timer_task.cancel()
        session.timer_task = asyncio.create_task(fire())

    def cancel_timer(session: Session) -> None:
        if session.timer_task is not None:
            session.timer_task.cancel()
            session.timer_task = None
        session.deadline = None

    @app.post("/sessions")
    async def create_session(body: dict | None = None):
        mode = (body or {}).get("mode")
        if mode is not None:
            try:
                XaiMode(mode)
            except ValueError:
                raise ProtocolError("INVALID_MODE", f"unknown mode {mode!r}", status=400)
        session = manager.create_session(mode)
        return {
            "session_id": session.session_id,
            "phase": session.phase.value,
            "mode": session.mode.value,
            "step_seconds": manager.step_seconds,
            "total_steps": manager.plant_config.episode_steps,
        }

    @app.post("/sessions/{session_id}/start")
    async def start(session_id: str):
        session = manager.get(session_id)
        async with session.lock:
            session.start()
            schedule_timer(session)
            await push_state(session)
            return session.state_update(remaining(session))

    @app.get("/sessions/{session_id}/state")
    async def get_state(session_id: str):
        session = manager.get(session_id)
        async with session.lock:
            return session.state_update(remaining(session))

    @app.post("/sessions/{session_id}/action")
    async def post_action(session_id: str, body: dict):
        session = manager.get(session_id)
        action = parse_action(body.get("action"))
        async with session.lock:
            session.apply(action, source="user")
            if session.phase == Phase.RUNNING:
                schedule_timer(session)
            else:
                cancel_timer(session)
            await push_state(session)
            return session.state_update(remaining(session))

    @app.post("/sessions/{session_id}/what")
    async def ask_what_endpoint(session_id: str):
        session = manager.get(session_id)
        async with session.lock:
            payload = session.ask_what()
            await broadcast(session, {"type": "suggestion", "suggestion": payload})
            return {"suggestion": payload}

    @app.post("/sessions/{session_id}/why")
    async def ask_why_endpoint(session_id: str):
        session = manager.get(session_id)
        async with session.lock:
            payload = session.ask_why()
            await broadcast(session, {"type": "explanation", "explanation": payload})
            return {"explanation": payload}

    @app.get("/sessions/{session_id}/quiz")
    async def get_quiz(session_id: str):
        session = manager.get(session_id)
        async with session.lock:
            session._require_phase(Phase.QUIZ, Phase.DONE)
            return manager.catalog.quiz_sheet()

    @app.post("/sessions/{session_id}/quiz")
    async def post_quiz(session_id: str, body: dict):
        session = manager.get(session_id)
        answers = body.get("answers")
        if not isinstance(answers, dict):
            raise ProtocolError("INVALID_ANSWERS", "body must carry an answers object", status=400)
        async with session.lock:
            cancel_timer(session)
            result = session.submit_quiz(answers, body.get("questionnaire"))
            await push_state(session)
            return result

    @app.get("/sessions/{session_id}/report")
    async def get_report(session_id: str):
        session = manager.get(session_id)
        async with session.lock:
            return session.report(manager.a_m)

    @app.websocket("/sessions/{session_id}/ws")
    async def websocket_endpoint(socket: WebSocket, session_id: str):
        try:
            session = manager.get(session_id)
        except ProtocolError:
            await socket.close(code=4404)
            return
        await socket.accept()
        session.sockets.append(socket)
        async with session.lock:
            await socket.send_json(session.state_update(remaining(session)))
        try:
            while True:
                message = await socket.receive_json()
                kind = message.get("type")
                try:
                    async with session.lock:
                        if kind == "start":
                            session.start()
                            schedule_timer(session)
                            await push_state(session)
                        elif kind == "action":
                            action = parse_action(message.get("action"))
                            session.apply(action, source="user")
                            if session.phase == Phase.RUNNING:
                                schedule_timer(session)
                            else:
                                cancel_timer(session)
                            await push_state(session)
                        elif kind == "what":
                            payload = session.ask_what()
                            await broadcast(session, {"type": "suggestion", "suggestion": payload})
                        elif kind == "why":
                            payload = session.ask_why()
                            await broadcast(session, {"type": "explanation", "explanation": payload})
                        elif kind == "get_state":
                            await socket.send_json(session.state_update(remaining(session)))
                        else:
                            await socket.send_json(
                                {"type": "error", "error": {"code": "UNKNOWN_COMMAND", "message": str(kind)}}
                            )
                except ProtocolError as exc:
                    await socket.send_json(
                        {"type": "error", "error": {"code": exc.code, "message": exc.message}}
                    )
        except WebSocketDisconnect:
            pass
        finally:
            if socket in session.sockets:
                session.sockets.remove(socket)

    return app


# ---------------------------------------------------------------------------
# Journal replay
# ---------------------------------------------------------------------------


class ReplayedSession:
    """Session state rebuilt deterministically from a journal file."""

    def __init__(self):
        self.session_id: str | None = None
        self.mode: XaiMode | None = None
        self.phase = Phase.BRIEFING
        self.state: PlantState | None = None
        self.what_count = 0
        self.why_count = 0
        self.quiz: dict | None = None


def replay_journal(
    path: str | Path,
    tree: DecisionTreePolicy,
    catalog: RuleCatalog | None = None,
) -> ReplayedSession:
    """Re-drive the engine from a journal, verifying every recorded outcome."""
    catalog = catalog or load_default_catalog()
    replayed = ReplayedSession()
    plant_config: PlantConfig | None = None
    user_model: UserModel | None = None
    ledger = UsedNodeLedger()
    expected_seq = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            if record["seq"] != expected_seq:
                raise ReplayError(
                    f"journal gap: expected seq {expected_seq}, found {record['seq']}"
                )
            expected_seq += 1
            kind = record["type"]
            payload = record["payload"]
            if kind == "session_created":
                replayed.session_id = payload["session_id"]
                replayed.mode = XaiMode(payload["mode"])
                plant_config = PlantConfig.from_json_dict(payload["plant_config"])
                replayed.state = new_plant(plant_config)
                user_model = UserModel(plant_config)
            elif kind == "phase_changed":
                replayed.phase = Phase(payload["phase"])
            elif kind == "what":
                suggestion = answer_what(tree, replayed.state)
                if suggestion.to_json_dict() != payload:
                    raise ReplayError(f"what mismatch at seq {record['seq']}")
                replayed.what_count += 1
            elif kind == "why":
                explanation = answer_why(
                    tree, replayed.state, replayed.mode, ledger, user_model
                )
                if explanation.to_json_dict() != payload:
                    raise ReplayError(f"why mismatch at seq {record['seq']}")
                replayed.why_count += 1
            elif kind == "action":
                action = Action(payload["action"])
                user_model.observe(replayed.state, action)
                outcome = apply_action(replayed.state, action, plant_config)
                replayed.state = outcome.next_state
                if replayed.state.to_json_dict() != payload["state"]:
                    raise ReplayError(f"state mismatch at seq {record['seq']}")
                if outcome.energy_produced != payload["energy"]:
                    raise ReplayError(f"energy mismatch at seq {record['seq']}")
            elif kind == "quiz":
                score = score_quiz(payload["answers"], catalog)
                if list(score.learned_per_feature) != payload["learned_per_feature"]:
                    raise ReplayError(f"quiz score mismatch at seq {record['seq']}")
                replayed.quiz = payload
            elif kind == "rejected":
                continue
            else:
                raise ReplayError(f"unknown journal event type {kind!r}")
    return replayed

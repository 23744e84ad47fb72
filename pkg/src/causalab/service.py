"""Stateful HTTP service exposing the interactive task.

Sessions walk the trial loop (choose test -> observe sampled outcome ->
draw judgment -> feedback after the last test of a problem) with
server-side randomness keyed to a stored seed, append-only JSONL event
logs, optional live analytics overlays, scoring, and lossless export into
the behavioral CSV schema.

Event timestamps are logical sequence numbers, not wall clock: two
sessions created with the same seed and driven by the same script produce
byte-identical logs, which is what makes them auditable and replayable.
"""

import json
import os
import threading
import uuid
from dataclasses import dataclass

import numpy as np

from .devices import Condition, Device, three_var_devices, four_var_devices, unconnected_device
from .exceptions import (
    CyclicJudgmentError,
    PolicyError,
    SequencingError,
    SessionNotFoundError,
)
from .fitting import ParticipantData, ProblemData
from .graphs import (
    CausalGraph,
    Intervention,
    Outcome,
    Trial,
    NODE_LABELS,
    hypothesis_space,
    is_acyclic,
    node_pairs,
    pair_label,
    parse_graph_text,
)
from .harness import behavior_csv_text
from .inference import (
    BeliefDistribution,
    GridBelief,
    edge_marginals,
    expected_info_gain,
    posterior_known,
)
from .learners import ns_predictive
from .localfocus import Focus, focus_entropy, local_expected_gain
from .noisyor import (
    DEFAULT_GRID_SEED,
    DEFAULT_GRID_SIZE,
    ParamPrior,
    Params,
    draw_param_grid,
    sample_outcome,
)

LOOP_MESSAGE = "you have drawn connections that make a loop, change or remove one to continue"
MIN_EXPLANATION_CHARS = 5


@dataclass(frozen=True)
class SessionSpec:
    """Static configuration of one session."""

    name: str
    devices: tuple[Device, ...]
    condition: Condition
    tests_per_problem: tuple[int, ...]
    analytics: bool = False
    slider_problems: tuple[int, ...] = ()  # problems with prediction+confidence sliders
    explanation_problem: int = -1  # problem index requiring free-text, -1 = none
    grid_size: int = DEFAULT_GRID_SIZE
    grid_seed: int = DEFAULT_GRID_SEED

    def to_payload(self) -> dict:
        return {
            "name": self.name,
            "devices": [
                {"id": d.id, "n": d.n, "edges": d.graph.to_text(), "label": d.label}
                for d in self.devices
            ],
            "condition": {
                "w_s": self.condition.w_s,
                "w_b": self.condition.w_b,
                "w_known": self.condition.w_known,
                "reporting": self.condition.reporting,
            },
            "tests_per_problem": list(self.tests_per_problem),
            "analytics": self.analytics,
            "slider_problems": list(self.slider_problems),
            "explanation_problem": self.explanation_problem,
            "grid_size": self.grid_size,
            "grid_seed": self.grid_seed,
        }

    @staticmethod
    def from_payload(payload: dict) -> "SessionSpec":
        cond = payload["condition"]
        return SessionSpec(
            name=payload.get("name", "custom"),
            devices=tuple(
                Device(d["id"], int(d["n"]),
                       CausalGraph.from_text(int(d["n"]), d["edges"]), d["label"])
                for d in payload["devices"]
            ),
            condition=Condition(float(cond["w_s"]), float(cond["w_b"]),
                                bool(cond.get("w_known", True)),
                                cond.get("reporting", "remain")),
            tests_per_problem=tuple(int(t) for t in payload["tests_per_problem"]),
            analytics=bool(payload.get("analytics", False)),
            slider_problems=tuple(payload.get("slider_problems", ())),
            explanation_problem=int(payload.get("explanation_problem", -1)),
            grid_size=int(payload.get("grid_size", DEFAULT_GRID_SIZE)),
            grid_seed=int(payload.get("grid_seed", DEFAULT_GRID_SEED)),
        )


def session_preset(name: str, condition: Condition | None = None,
                   analytics: bool = False) -> SessionSpec:
    """Session counterparts of the experiment designs."""
    if name == "bramley2015":
        cond = condition or Condition(0.8, 0.1)
        return SessionSpec(name, three_var_devices(), cond, (12,) * 5, analytics)
    if name == "exp1":
        cond = condition or Condition(0.9, 0.1)
        return SessionSpec(name, three_var_devices() + four_var_devices(), cond,
                           (6,) * 5 + (8,) * 5, analytics)
    if name == "exp2":
        cond = condition or Condition(0.9, 0.1, w_known=False, reporting="remain")
        devices = three_var_devices() + (unconnected_device("d6"),) + (
            Device("d7", 3, CausalGraph.from_text(3, "x->y;y->z"), "chain"),
        )
        return SessionSpec(name, devices, cond, (6,) * 7, analytics,
                           slider_problems=tuple(range(6)), explanation_problem=6)
    raise ValueError(f"unknown session preset {name!r}")


class Session:
    """Runtime state of one session; all mutation under the store's lock."""

    def __init__(self, session_id: str, spec: SessionSpec, seed: int):
        self.id = session_id
        self.spec = spec
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.events: list[dict] = []
        self.problem = 0
        self.test = 0
        self.phase = "intervene"
        self.trials: list[list[Trial]] = [[] for _ in spec.devices]
        self.judgments: list[list[CausalGraph]] = [[] for _ in spec.devices]
        self.free_text: list[dict] = []
        self._grid = None
        self._new_events: list[dict] = []

    # -- event log ---------------------------------------------------------

    def _append(self, kind: str, payload: dict):
        event = {"t": len(self.events), "kind": kind, "payload": payload}
        self.events.append(event)
        self._new_events.append(event)

    def drain_new_events(self) -> list[dict]:
        out, self._new_events = self._new_events, []
        return out

    # -- task flow ---------------------------------------------------------

    @property
    def device(self) -> Device:
        return self.spec.devices[self.problem]

    def _require_phase(self, phase: str):
        if self.phase != phase:
            raise SequencingError(
                f"operation requires phase {phase!r}, session is in {self.phase!r}"
            )

    def apply_intervention(self, intervention: Intervention,
                           predictions: dict | None = None,
                           explanation: str | None = None) -> Outcome:
        self._require_phase("intervene")
        device = self.device
        if intervention.n != device.n:
            raise ValueError(
                f"intervention has {intervention.n} settings, device has {device.n}"
            )
        if self.problem == self.spec.explanation_problem:
            if explanation is None or len(explanation.strip()) < MIN_EXPLANATION_CHARS:
                raise ValueError(
                    f"this problem requires an explanation of at least "
                    f"{MIN_EXPLANATION_CHARS} characters"
                )
        self._append("intervention", {
            "problem": self.problem, "test": self.test,
            "intervention": intervention.to_text(),
        })
        if explanation is not None:
            self._append("free_text", {
                "problem": self.problem, "test": self.test, "text": explanation,
            })
            self.free_text.append({
                "problem": self.problem, "test": self.test, "text": explanation,
            })
        if predictions:
            self._append("prediction", {
                "problem": self.problem, "test": self.test,
                "values": {k: float(v) for k, v in predictions.items()},
            })
        w_true = Params(self.spec.condition.w_s, self.spec.condition.w_b)
        outcome = sample_outcome(device.graph, w_true, intervention, self.rng)
        self.trials[self.problem].append(Trial(intervention, outcome))
        self._append("outcome", {
            "problem": self.problem, "test": self.test,
            "outcome": outcome.to_text(),
        })
        self.phase = "judge"
        return outcome

    def record_judgment(self, judgment_text: str,
                        confidences: dict | None = None) -> dict:
        self._require_phase("judge")
        n = self.device.n
        states = parse_graph_text(n, judgment_text)
        if any(s is None for s in states):
            raise ValueError("judgment must specify every edge")
        if not is_acyclic(n, states):
            raise CyclicJudgmentError(LOOP_MESSAGE)
        judgment = CausalGraph(n, tuple(states))
        self.judgments[self.problem].append(judgment)
        self._append("judgment", {
            "problem": self.problem, "test": self.test,
            "judgment": judgment.to_text(),
        })
        if confidences:
            self._append("confidence", {
                "problem": self.problem, "test": self.test,
                "values": {k: float(v) for k, v in confidences.items()},
            })
        feedback = None
        self.test += 1
        if self.test >= self.spec.tests_per_problem[self.problem]:
            feedback = self.device.graph.to_text()
            self._append("feedback", {
                "problem": self.problem, "true_edges": feedback,
            })
            self.problem += 1
            self.test = 0
            if self.problem >= len(self.spec.devices):
                self.phase = "done"
                self._append("score", self.score())
            else:
                self.phase = "intervene"
        else:
            self.phase = "intervene"
        return {"accepted": True, "feedback": feedback}

    # -- derived views -----------------------------------------------------

    def snapshot(self) -> dict:
        cond = self.spec.condition
        done = self.phase == "done"
        problem = min(self.problem, len(self.spec.devices) - 1)
        device = self.spec.devices[problem]
        trials = self.trials[problem]
        judgments = self.judgments[problem]
        prev_judgment = None
        if cond.reporting == "remain" and judgments:
            prev_judgment = judgments[-1].to_text()
        snap = {
            "id": self.id,
            "name": self.spec.name,
            "phase": self.phase,
            "problem_index": problem,
            "test_index": min(self.test, self.spec.tests_per_problem[problem] - 1),
            "n_problems": len(self.spec.devices),
            "tests_total": self.spec.tests_per_problem[problem],
            "n": device.n,
            "labels": list(NODE_LABELS[: device.n]),
            "pairs": [pair_label(i, j) for i, j in node_pairs(device.n)],
            "reporting": cond.reporting,
            "w_known": cond.w_known,
            "w_s": cond.w_s if cond.w_known else None,
            "w_b": cond.w_b if cond.w_known else None,
            "analytics": self.spec.analytics,
            "needs_sliders": problem in self.spec.slider_problems,
            "needs_explanation": problem == self.spec.explanation_problem,
            "previous_judgment": prev_judgment,
            "last_outcome": trials[-1].outcome.to_text() if trials else None,
            "done": done,
        }
        feedback_events = [e for e in self.events if e["kind"] == "feedback"]
        snap["last_feedback"] = feedback_events[-1]["payload"] if feedback_events else None
        return snap

    def _w_mode(self):
        cond = self.spec.condition
        if cond.w_known:
            return Params(cond.w_s, cond.w_b)
        if self._grid is None:
            self._grid = draw_param_grid(
                ParamPrior("UU"), self.spec.grid_size,
                np.random.default_rng(self.spec.grid_seed),
            )
        return self._grid

    def analytics(self, lam: float = 1.5, omega: float = 10.0,
                  epsilon: float = 0.0) -> dict:
        if not self.spec.analytics:
            raise PolicyError("analytics are disabled for this session")
        problem = min(self.problem, len(self.spec.devices) - 1)
        device = self.spec.devices[problem]
        space = hypothesis_space(device.n)
        w = self._w_mode()
        trials = list(self.trials[problem])
        if isinstance(w, Params):
            belief = posterior_known(BeliefDistribution.uniform(space), trials, w)
            eig_prior = belief
        else:
            gb = GridBelief(space, w)
            if trials:
                gb = gb.updated(trials)
            belief = gb.marginal()
            eig_prior = gb
        marginals = edge_marginals(belief)
        candidates = [c.to_text() for c in _candidates(space.n)]
        eig = [expected_info_gain(eig_prior, c, w) for c in _candidates(space.n)]
        judgments = self.judgments[problem]
        b_prev = judgments[-1] if judgments else CausalGraph.empty(device.n)
        foci = []
        for pair in space.pairs:
            foci.append(("edge " + pair_label(*pair), Focus("edge", pair=pair)))
        for x in range(device.n):
            foci.append(("effects " + NODE_LABELS[x], Focus("effects", node=x)))
        if b_prev != CausalGraph.empty(device.n):
            foci.append(("confirmation", Focus("confirmation")))
        focus_rows = []
        for label, focus in foci:
            gains = [local_expected_gain(focus, c, b_prev, w, space)
                     for c in _candidates(space.n)]
            focus_rows.append({
                "focus": label,
                "entropy_bits": focus_entropy(focus, b_prev, trials, w, space),
                "best_intervention": candidates[int(np.argmax(gains))],
                "gains": gains,
            })
        predictive = ns_predictive(b_prev, trials, w, lam, omega, epsilon, space)
        top = np.argsort(predictive.probs)[::-1][:5]
        return {
            "edge_marginals": {
                pair_label(*pair): {
                    "backward": marginals[k, 0],
                    "absent": marginals[k, 1],
                    "forward": marginals[k, 2],
                }
                for k, pair in enumerate(space.pairs)
            },
            "interventions": candidates,
            "expected_info_gain": eig,
            "focus_entropies": focus_rows,
            "search_predictive": {
                "lambda": lam, "omega": omega, "epsilon": epsilon,
                "top_graphs": [
                    {"edges": space.graphs[g].to_text(), "prob": float(predictive.probs[g])}
                    for g in top
                ],
            },
        }

    def score(self, mode: str = "final") -> dict:
        per_problem = []
        total_correct = 0
        total_edges = 0
        score_rng = np.random.default_rng(self.seed + 0x5C0BE)
        for p, device in enumerate(self.spec.devices):
            judgments = self.judgments[p]
            if not judgments:
                continue
            if mode == "random-timepoint":
                judgment = judgments[int(score_rng.integers(len(judgments)))]
            else:
                judgment = judgments[-1]
            matches = sum(
                a == b for a, b in zip(judgment.edges, device.graph.edges)
            )
            per_problem.append({
                "problem": p, "device_id": device.id,
                "correct_edges": matches, "total_edges": len(device.graph.edges),
                "accuracy": matches / len(device.graph.edges),
            })
            total_correct += matches
            total_edges += len(device.graph.edges)
        return {
            "mode": mode,
            "per_problem": per_problem,
            "total_correct": total_correct,
            "total_edges": total_edges,
            "accuracy": total_correct / total_edges if total_edges else 0.0,
        }

    def export(self) -> dict:
        problems = []
        for p, device in enumerate(self.spec.devices):
            trials = self.trials[p]
            judgments = self.judgments[p]
            if not trials:
                continue
            complete = min(len(trials), len(judgments))
            confidences: list = [None] * complete
            predictions: list = [None] * complete
            for event in self.events:
                payload = event["payload"]
                if payload.get("problem") != p or payload.get("test", complete) >= complete:
                    continue
                if event["kind"] == "confidence":
                    confidences[payload["test"]] = {
                        (NODE_LABELS.index(k[0]), NODE_LABELS.index(k[1])): v
                        for k, v in payload["values"].items()
                    }
                elif event["kind"] == "prediction":
                    predictions[payload["test"]] = {
                        NODE_LABELS.index(k): v for k, v in payload["values"].items()
                    }
            problems.append(ProblemData(
                device_id=device.id, n=device.n,
                trials=tuple(trials[:complete]),
                judgments=tuple(judgments[:complete]),
                confidences=tuple(confidences),
                predictions=tuple(predictions),
            ))
        cond = self.spec.condition
        data = ParticipantData(self.id, self.spec.name, cond, tuple(problems))
        return {
            "csv": behavior_csv_text([data]),
            "free_text": list(self.free_text),
        }


def _candidates(n):
    from .graphs import enumerate_interventions

    return enumerate_interventions(n)


class SessionStore:
    """In-memory sessions with an append-only JSONL log per session."""

    def __init__(self, data_dir: str | None = None, analytics_default: bool = False):
        self.data_dir = data_dir
        self.analytics_default = analytics_default
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._global = threading.Lock()
        if data_dir:
            os.makedirs(data_dir, exist_ok=True)

    def _log_path(self, session_id: str) -> str:
        return os.path.join(self.data_dir, f"{session_id}.events.jsonl")

    def _persist(self, session: Session):
        if not self.data_dir:
            session.drain_new_events()
            return
        events = session.drain_new_events()
        if not events:
            return
        with open(self._log_path(session.id), "a") as fh:
            for event in events:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def create(self, spec: SessionSpec, seed: int) -> Session:
        session_id = uuid.uuid4().hex
        session = Session(session_id, spec, seed)
        session._append("created", {"spec": spec.to_payload(), "seed": seed})
        with self._global:
            self._sessions[session_id] = session
            self._locks[session_id] = threading.Lock()
        self._persist(session)
        return session

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._global:
            if session_id not in self._locks:
                raise SessionNotFoundError(f"no session {session_id!r}")
            return self._locks[session_id]

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFoundError(f"no session {session_id!r}")
        return session

    def replay(self, session_id: str) -> Session:
        """Rebuild a session from its log, re-drawing outcomes from the
        stored seed and checking they match the recorded ones."""
        if not self.data_dir:
            raise SessionNotFoundError("store has no data directory")
        path = self._log_path(session_id)
        if not os.path.exists(path):
            raise SessionNotFoundError(f"no log for session {session_id!r}")
        with open(path) as fh:
            events = [json.loads(line) for line in fh if line.strip()]
        created = events[0]
        spec = SessionSpec.from_payload(created["payload"]["spec"])
        session = Session(session_id, spec, created["payload"]["seed"])
        session.events.append(created)
        pending = None
        k = 1
        while k < len(events):
            event = events[k]
            kind = event["kind"]
            payload = event["payload"]
            if kind == "intervention":
                pending = {"intervention": Intervention.from_text(payload["intervention"]),
                           "explanation": None, "predictions": None}
            elif kind == "free_text":
                pending["explanation"] = payload["text"]
            elif kind == "prediction":
                pending["predictions"] = payload["values"]
            elif kind == "outcome":
                outcome = session.apply_intervention(
                    pending["intervention"], pending["predictions"],
                    pending["explanation"],
                )
                if outcome.to_text() != payload["outcome"]:
                    raise ValueError(
                        f"replay mismatch at problem {payload['problem']} test "
                        f"{payload['test']}: {outcome.to_text()} != {payload['outcome']}"
                    )
                pending = None
            elif kind == "judgment":
                confidences = None
                if k + 1 < len(events) and events[k + 1]["kind"] == "confidence":
                    confidences = events[k + 1]["payload"]["values"]
                    k += 1
                session.record_judgment(payload["judgment"], confidences)
            # feedback/score events regenerate inside record_judgment
            k += 1
        session._new_events.clear()
        return session


def create_app(store: SessionStore):
    """FastAPI application speaking the documented JSON contract."""
    from fastapi import FastAPI
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse
    from pydantic import BaseModel

    app = FastAPI(title="causalab session service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )

    class CreateRequest(BaseModel):
        preset: str | None = None
        seed: int
        analytics: bool | None = None
        w_s: float | None = None
        w_b: float | None = None
        w_known: bool | None = None
        reporting: str | None = None
        spec: dict | None = None

    class InterveneRequest(BaseModel):
        intervention: str
        predictions: dict[str, float] | None = None
        explanation: str | None = None

    class JudgeRequest(BaseModel):
        judgment: str
        confidences: dict[str, float] | None = None

    def _error(status: int, message: str):
        return JSONResponse(status_code=status, content={"error": message})

    @app.exception_handler(SequencingError)
    async def _seq(_, exc):
        return _error(409, str(exc))

    @app.exception_handler(CyclicJudgmentError)
    async def _cyc(_, exc):
        return _error(422, str(exc))

    @app.exception_handler(PolicyError)
    async def _pol(_, exc):
        return _error(403, str(exc))

    @app.exception_handler(SessionNotFoundError)
    async def _nf(_, exc):
        return _error(404, str(exc))

    @app.exception_handler(ValueError)
    async def _val(_, exc):
        return _error(422, str(exc))

    @app.post("/sessions")
    def create_session(req: CreateRequest):
        if req.spec is not None:
            spec = SessionSpec.from_payload(req.spec)
        else:
            preset_name = req.preset or "exp2"
            condition = None
            if req.w_s is not None or req.w_b is not None:
                base = session_preset(preset_name).condition
                condition = Condition(
                    req.w_s if req.w_s is not None else base.w_s,
                    req.w_b if req.w_b is not None else base.w_b,
                    req.w_known if req.w_known is not None else base.w_known,
                    req.reporting or base.reporting,
                )
            elif req.reporting or req.w_known is not None:
                base = session_preset(preset_name).condition
                condition = Condition(base.w_s, base.w_b,
                                      req.w_known if req.w_known is not None else base.w_known,
                                      req.reporting or base.reporting)
            analytics = (req.analytics if req.analytics is not None
                         else store.analytics_default)
            spec = session_preset(preset_name, condition, analytics)
        session = store.create(spec, req.seed)
        return {"id": session.id, "snapshot": session.snapshot()}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return store.get(session_id).snapshot()

    @app.post("/sessions/{session_id}/intervene")
    def intervene(session_id: str, req: InterveneRequest):
        with store.lock_for(session_id):
            session = store.get(session_id)
            outcome = session.apply_intervention(
                Intervention.from_text(req.intervention), req.predictions,
                req.explanation,
            )
            store._persist(session)
            return {"outcome": outcome.to_text(), "snapshot": session.snapshot()}

    @app.post("/sessions/{session_id}/judge")
    def judge(session_id: str, req: JudgeRequest):
        with store.lock_for(session_id):
            session = store.get(session_id)
            result = session.record_judgment(req.judgment, req.confidences)
            store._persist(session)
            return {**result, "snapshot": session.snapshot()}

    @app.get("/sessions/{session_id}/analytics")
    def analytics(session_id: str, lam: float = 1.5, omega: float = 10.0,
                  epsilon: float = 0.0):
        with store.lock_for(session_id):
            return store.get(session_id).analytics(lam, omega, epsilon)

    @app.get("/sessions/{session_id}/score")
    def score(session_id: str, mode: str = "final"):
        with store.lock_for(session_id):
            return store.get(session_id).score(mode)

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        with store.lock_for(session_id):
            return store.get(session_id).export()

    return app

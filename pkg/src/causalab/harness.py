"""Experiment presets, batch simulation of learner/chooser agents,
aggregate summary tables, and the behavioral-data file formats.

Simulations pair a judgment policy (the six fitted models plus the
"Posterior" sampler and "MAP" responder) with an intervention policy (the
six choice models plus "ideal", the exact greedy information maximizer).
Runs are deterministic given the spec's master seed: every (condition,
replication) gets a spawned child seed and all sampling flows through
that generator.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, replace

import numpy as np

from .devices import Condition, Device, four_var_devices, three_var_devices, unconnected_device
from .exceptions import DataFormatError
from .fitting import ParticipantData, ProblemData, _simulate_one_judgment
from .graphs import (
    CausalGraph,
    Intervention,
    Outcome,
    Trial,
    classify_intervention,
    edit_distance,
    hypothesis_space,
    is_acyclic,
    node_pairs,
    pair_label,
    parse_graph_text,
    NODE_LABELS,
)
from .inference import BeliefDistribution, GridBelief, greedy_intervention, posterior_known
from .learners import JudgmentModelSpec
from .localfocus import InterventionModelSpec, LocalGainCache, intervention_choice_probs
from .noisyor import (
    DEFAULT_GRID_SEED,
    DEFAULT_GRID_SIZE,
    ParamGrid,
    ParamPrior,
    Params,
    draw_param_grid,
    sample_outcome,
    space_trial_likelihoods,
)

SIM_ONLY_JUDGES = ("Posterior", "MAP")


@dataclass(frozen=True)
class ExperimentSpec:
    """One batch-simulation design; presets mirror the three studies."""

    name: str
    devices: tuple[Device, ...]
    conditions: tuple[Condition, ...]
    tests_per_problem: tuple[int, ...]
    judge: JudgmentModelSpec | str
    chooser: InterventionModelSpec | str
    replications: int
    master_seed: int
    grid_size: int = DEFAULT_GRID_SIZE
    grid_seed: int = DEFAULT_GRID_SEED
    prior: ParamPrior = ParamPrior("UU")  # noise prior for unknown-w conditions
    # Evidence-window policy for the simulated learner/chooser memory.
    # "problem" accumulates all trials of the current problem and is what
    # reproduces the published simulation statistics; "reset-on-change"
    # drops the window whenever the belief moves, the single-update
    # semantics the search model itself is written in.
    ns_memory: str = "problem"

    def __post_init__(self):
        if len(self.tests_per_problem) != len(self.devices):
            raise ValueError("need one test count per device")
        if any(t < 1 for t in self.tests_per_problem):
            raise ValueError("test counts must be positive")
        if isinstance(self.judge, str) and self.judge not in SIM_ONLY_JUDGES:
            raise ValueError(f"unknown judge policy {self.judge!r}")
        if isinstance(self.chooser, str) and self.chooser != "ideal":
            raise ValueError(f"unknown chooser policy {self.chooser!r}")
        if self.ns_memory not in ("problem", "reset-on-change"):
            raise ValueError("ns_memory must be 'problem' or 'reset-on-change'")

    @property
    def judge_kind(self) -> str:
        return self.judge if isinstance(self.judge, str) else self.judge.kind

    @property
    def chooser_kind(self) -> str:
        return self.chooser if isinstance(self.chooser, str) else self.chooser.kind


def preset(name: str, judge=None, chooser=None, replications: int = 30,
           master_seed: int = 0) -> ExperimentSpec:
    """Named experiment designs.

    bramley2015: five 3-variable devices, w=(.8,.1) known, 12 tests.
    exp1: devices 1-10 (3- and 4-variable), 6/8 tests, four known-w
    conditions.  exp1_3var: the 3-variable half of exp1.  exp2: devices
    1-6 plus the chain repeat, 6 tests, unknown w, remain/disappear.
    """
    judge = judge if judge is not None else JudgmentModelSpec.from_config(
        {"kind": "NS", "lambda": 1.5, "omega": 10.0, "epsilon": 0.0}
    )
    # default chooser calibrated so the edit-distance table reproduces the
    # published simulation values (see tests/test_acceptance.py)
    chooser = chooser if chooser is not None else InterventionModelSpec.from_config(
        {"kind": "edge", "eta": 20.0, "rho": 0.0}
    )
    if name == "bramley2015":
        devices = three_var_devices()
        return ExperimentSpec(name, devices, (Condition(0.8, 0.1),),
                              (12,) * 5, judge, chooser, replications, master_seed)
    known_conditions = tuple(
        Condition(ws, wb) for ws in (0.9, 0.75) for wb in (0.1, 0.25)
    )
    if name == "exp1_3var":
        devices = three_var_devices()
        return ExperimentSpec(name, devices, known_conditions, (6,) * 5,
                              judge, chooser, replications, master_seed)
    if name == "exp1":
        devices = three_var_devices() + four_var_devices()
        return ExperimentSpec(name, devices, known_conditions,
                              (6,) * 5 + (8,) * 5, judge, chooser,
                              replications, master_seed)
    if name == "exp2":
        devices = three_var_devices() + (unconnected_device("d6"),) + (
            Device("d7", 3, CausalGraph.from_text(3, "x->y;y->z"), "chain"),
        )
        conditions = tuple(
            Condition(ws, wb, w_known=False, reporting=rep)
            for ws in (0.9, 0.75)
            for wb in (0.1, 0.25)
            for rep in ("remain", "disappear")
        )
        return ExperimentSpec(name, devices, conditions, (6,) * 7,
                              judge, chooser, replications, master_seed)
    raise ValueError(f"unknown preset {name!r}")


def spec_from_config(cfg: dict) -> ExperimentSpec:
    """Build a spec from a config mapping (see README for the schema)."""
    if "master_seed" not in cfg:
        raise DataFormatError("experiment config requires a master_seed")
    judge = cfg.get("judge")
    if isinstance(judge, dict):
        judge = JudgmentModelSpec.from_config(judge)
    chooser = cfg.get("chooser")
    if isinstance(chooser, dict):
        chooser = InterventionModelSpec.from_config(chooser)
    if "preset" in cfg:
        base = preset(
            cfg["preset"],
            judge=judge,
            chooser=chooser,
            replications=int(cfg.get("replications", 30)),
            master_seed=int(cfg["master_seed"]),
        )
        overrides = {}
        if "name" in cfg:
            overrides["name"] = cfg["name"]
        if "grid_size" in cfg:
            overrides["grid_size"] = int(cfg["grid_size"])
        if "grid_seed" in cfg:
            overrides["grid_seed"] = int(cfg["grid_seed"])
        if "prior" in cfg:
            overrides["prior"] = ParamPrior.from_config(cfg["prior"])
        if "ns_memory" in cfg:
            overrides["ns_memory"] = cfg["ns_memory"]
        return replace(base, **overrides) if overrides else base
    devices = tuple(
        Device(d["id"], int(d["n"]), CausalGraph.from_text(int(d["n"]), d["edges"]),
               d["label"])
        for d in cfg["devices"]
    )
    conditions = tuple(
        Condition(float(c["w_s"]), float(c["w_b"]), bool(c.get("w_known", True)),
                  c.get("reporting", "remain"))
        for c in cfg["conditions"]
    )
    return ExperimentSpec(
        name=cfg.get("name", "custom"),
        devices=devices,
        conditions=conditions,
        tests_per_problem=tuple(int(t) for t in cfg["tests_per_problem"]),
        judge=judge if judge is not None else "Posterior",
        chooser=chooser if chooser is not None else "ideal",
        replications=int(cfg.get("replications", 30)),
        master_seed=int(cfg["master_seed"]),
        grid_size=int(cfg.get("grid_size", DEFAULT_GRID_SIZE)),
        grid_seed=int(cfg.get("grid_seed", DEFAULT_GRID_SEED)),
        prior=ParamPrior.from_config(cfg.get("prior", {"kind": "UU"})),
        ns_memory=cfg.get("ns_memory", "problem"),
    )


@dataclass(frozen=True)
class SimRecord:
    """One simulated run plus the ground truth it was scored against."""

    data: ParticipantData
    devices: tuple[Device, ...]
    judge_kind: str
    chooser_kind: str

    def problem_accuracies(self) -> list[float]:
        out = []
        for problem, device in zip(self.data.problems, self.devices):
            final = problem.judgments[-1]
            matches = sum(a == b for a, b in zip(final.edges, device.graph.edges))
            out.append(matches / len(device.graph.edges))
        return out

    def edit_distances(self) -> list[int]:
        """Edits between consecutive reported judgments (b^t -> b^{t+1})."""
        out = []
        for problem in self.data.problems:
            js = problem.judgments
            out.extend(edit_distance(a, b) for a, b in zip(js, js[1:]))
        return out


def _choose(chooser, b_prev, recent, full, w, space, rng, cache, grid_belief):
    if chooser == "ideal":
        if grid_belief is not None:
            prior = grid_belief
        else:
            prior = posterior_known(BeliefDistribution.uniform(space), full, w)
        return greedy_intervention(prior, w, cache.candidates, rng)
    probs = intervention_choice_probs(chooser, b_prev, recent, full, w, space, cache)
    return cache.candidates[rng.choice(len(probs), p=probs)]


def _simulate_judge(judge, space, b_prev, recent_prod, full_prod, trial, w, rng):
    if judge == "Posterior":
        marg = full_prod.mean(axis=1) if full_prod.ndim == 2 else full_prod
        return space.graphs[rng.choice(len(space), p=marg / marg.sum())]
    if judge == "MAP":
        marg = full_prod.mean(axis=1) if full_prod.ndim == 2 else full_prod
        best = np.flatnonzero(marg >= marg.max() - 1e-12)
        return space.graphs[best[rng.integers(len(best))]]
    return _simulate_one_judgment(judge, space, b_prev, recent_prod, full_prod,
                                  trial, w, rng)


def run_simulation(spec: ExperimentSpec) -> list[SimRecord]:
    """Simulate replications x conditions of the full task loop."""
    records = []
    seed_seq = np.random.SeedSequence(spec.master_seed)
    children = seed_seq.spawn(len(spec.conditions) * spec.replications)
    grid = None
    if any(not c.w_known for c in spec.conditions):
        grid = draw_param_grid(spec.prior, spec.grid_size,
                               np.random.default_rng(spec.grid_seed))
    caches: dict = {}
    for ci, condition in enumerate(spec.conditions):
        w_true = Params(condition.w_s, condition.w_b)
        w_model = w_true if condition.w_known else grid
        for rep in range(spec.replications):
            rng = np.random.default_rng(children[ci * spec.replications + rep])
            problems = []
            for device, n_tests in zip(spec.devices, spec.tests_per_problem):
                space = hypothesis_space(device.n)
                cache_key = (device.n, "grid" if not condition.w_known
                             else (condition.w_s, condition.w_b))
                cache = caches.get(cache_key)
                if cache is None:
                    cache = LocalGainCache(space, w_model)
                    caches[cache_key] = cache
                G = len(space)
                grid_mode = isinstance(w_model, ParamGrid)
                recent_prod = np.ones((G, w_model.size)) if grid_mode else np.ones(G)
                full_prod = recent_prod.copy()
                grid_belief = GridBelief(space, w_model) if grid_mode else None
                b_prev = CausalGraph.empty(device.n)
                recent_trials: list[Trial] = []
                full_trials: list[Trial] = []
                trials, judgments = [], []
                for _ in range(n_tests):
                    c = _choose(spec.chooser, b_prev, recent_trials, full_trials,
                                w_model, space, rng, cache, grid_belief)
                    d = sample_outcome(device.graph, w_true, c, rng)
                    trial = Trial(c, d)
                    lik = space_trial_likelihoods(space, trial, w_model)
                    recent_prod = recent_prod * lik
                    full_prod = full_prod * lik
                    if grid_belief is not None:
                        grid_belief = grid_belief.updated([trial])
                    b = _simulate_judge(spec.judge, space, b_prev, recent_prod,
                                        full_prod, trial, w_model, rng)
                    trials.append(trial)
                    judgments.append(b)
                    recent_trials.append(trial)
                    if b != b_prev:
                        if spec.ns_memory == "reset-on-change":
                            recent_prod = np.ones_like(recent_prod)
                            recent_trials = []
                        b_prev = b
                problems.append(
                    ProblemData(device.id, device.n, tuple(trials), tuple(judgments))
                )
            pid = f"sim-{spec.name}-c{ci}-r{rep}"
            data = ParticipantData(pid, spec.name, condition, tuple(problems))
            records.append(SimRecord(data, spec.devices, spec.judge_kind,
                                     spec.chooser_kind))
    return records


# -- summaries -----------------------------------------------------------------

def summarize(records: list[SimRecord]) -> dict:
    """Tidy tables: accuracy by device label, edit-distance stats by judge
    model, and intervention-type proportions by test index."""
    if not records:
        raise ValueError("no records to summarize")
    acc_rows: dict = {}
    for rec in records:
        for problem, device, acc in zip(
            rec.data.problems, rec.devices, rec.problem_accuracies()
        ):
            key = (rec.data.experiment, device.n, device.label)
            acc_rows.setdefault(key, []).append(acc)
    accuracy_table = [
        {
            "experiment": exp,
            "variables": n,
            "device_label": label,
            "mean_accuracy": float(np.mean(vals)),
            "sd_accuracy": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
            "n": len(vals),
        }
        for (exp, n, label), vals in sorted(acc_rows.items())
    ]

    edit_rows: dict = {}
    for rec in records:
        for problem, device in zip(rec.data.problems, rec.devices):
            js = problem.judgments
            key = (rec.judge_kind, device.n)
            edit_rows.setdefault(key, []).extend(
                edit_distance(a, b) for a, b in zip(js, js[1:])
            )
    edit_table = [
        {
            "model": judge,
            "variables": n,
            "mean_edits": float(np.mean(vals)),
            "sd_edits": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
            "n": len(vals),
        }
        for (judge, n), vals in sorted(edit_rows.items())
    ]

    type_rows: dict = {}
    for rec in records:
        for problem in rec.data.problems:
            for t, trial in enumerate(problem.trials):
                key = (rec.chooser_kind, t, classify_intervention(trial.intervention))
                type_rows[key] = type_rows.get(key, 0) + 1
    totals: dict = {}
    for (chooser, t, _label), count in type_rows.items():
        totals[(chooser, t)] = totals.get((chooser, t), 0) + count
    type_table = [
        {
            "chooser": chooser,
            "test_index": t,
            "intervention_type": label,
            "proportion": count / totals[(chooser, t)],
            "n": count,
        }
        for (chooser, t, label), count in sorted(type_rows.items())
    ]
    return {
        "accuracy_by_device": accuracy_table,
        "edit_distance": edit_table,
        "intervention_types": type_table,
    }


# -- behavioral file I/O ---------------------------------------------------------

BASE_COLUMNS = (
    "participant_id", "experiment", "w_s", "w_b", "w_known", "reporting",
    "device_id", "trial_index", "intervention", "outcome", "judgment",
)


def _judgment_text(judgment) -> str:
    return judgment.to_text() if judgment is not None else "?"


def behavior_rows(data: ParticipantData) -> list[dict]:
    """One CSV row per test in the documented schema."""
    rows = []
    cond = data.condition
    for problem in data.problems:
        pairs = node_pairs(problem.n)
        for t, (trial, judgment) in enumerate(zip(problem.trials, problem.judgments)):
            row = {
                "participant_id": data.participant_id,
                "experiment": data.experiment,
                "w_s": repr(cond.w_s),
                "w_b": repr(cond.w_b),
                "w_known": "1" if cond.w_known else "0",
                "reporting": cond.reporting,
                "device_id": problem.device_id,
                "trial_index": str(t),
                "intervention": trial.intervention.to_text(),
                "outcome": trial.outcome.to_text(),
                "judgment": _judgment_text(judgment),
            }
            conf = problem.confidences[t]
            if conf:
                for (i, j), value in conf.items():
                    row[f"confidence_{pair_label(i, j)}"] = repr(float(value))
            pred = problem.predictions[t]
            if pred:
                for node, value in pred.items():
                    row[f"prediction_{NODE_LABELS[node]}"] = repr(float(value))
            rows.append(row)
    return rows


def behavior_csv_text(participants) -> str:
    rows = []
    for p in participants:
        data = p.data if isinstance(p, SimRecord) else p
        rows.extend(behavior_rows(data))
    extras = sorted({k for r in rows for k in r} - set(BASE_COLUMNS))
    columns = list(BASE_COLUMNS) + extras
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, restval="", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_behavior_csv(participants, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(behavior_csv_text(participants))


def _parse_judgment(n, text, row_num, strict):
    text = text.strip()
    if text == "?":
        return None
    try:
        states = parse_graph_text(n, text)
    except ValueError as exc:
        raise DataFormatError(str(exc), row=row_num, column="judgment") from None
    if any(s is None for s in states):
        return None
    if not is_acyclic(n, states):
        if strict:
            raise DataFormatError("cyclic judgment", row=row_num, column="judgment")
        return None
    return CausalGraph(n, tuple(states))


def ingest_behavior(path, strict: bool = False) -> list[ParticipantData]:
    """Read a behavioral CSV into aligned participant records.

    Unspecified ("?") and cyclic judgments become skipped tests (None)
    unless ``strict`` turns cyclic rows into errors.  Problems are split
    on trial_index resets; rows must arrive in stream order.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "participant_id" not in reader.fieldnames:
            raise DataFormatError("missing header or participant_id column")
        by_participant: dict = {}
        order = []
        for row_num, row in enumerate(reader, start=2):
            pid = row["participant_id"]
            if pid not in by_participant:
                by_participant[pid] = []
                order.append(pid)
            by_participant[pid].append((row_num, row))

    participants = []
    for pid in order:
        rows = by_participant[pid]
        first = rows[0][1]
        try:
            condition = Condition(
                float(first["w_s"]), float(first["w_b"]),
                first["w_known"].strip() in ("1", "true", "True"),
                first["reporting"].strip() or "remain",
            )
        except (KeyError, ValueError) as exc:
            raise DataFormatError(f"bad condition fields: {exc}", row=rows[0][0]) from None
        problems = []
        current: list = []

        def flush():
            if not current:
                return
            n = current[0][2].intervention.n
            problems.append(
                ProblemData(
                    device_id=current[0][1],
                    n=n,
                    trials=tuple(item[2] for item in current),
                    judgments=tuple(item[3] for item in current),
                    confidences=tuple(item[4] for item in current),
                    predictions=tuple(item[5] for item in current),
                )
            )
            current.clear()

        prev_index = None
        for row_num, row in rows:
            try:
                trial_index = int(row["trial_index"])
            except (KeyError, ValueError):
                raise DataFormatError("bad trial_index", row=row_num,
                                      column="trial_index") from None
            if trial_index == 0:
                flush()
            elif prev_index is not None and trial_index != prev_index + 1:
                raise DataFormatError(
                    f"trial_index jumps from {prev_index} to {trial_index}",
                    row=row_num, column="trial_index",
                )
            prev_index = trial_index
            try:
                intervention = Intervention.from_text(row["intervention"])
            except ValueError as exc:
                raise DataFormatError(str(exc), row=row_num, column="intervention") from None
            try:
                outcome = Outcome.from_text(row["outcome"])
                trial = Trial(intervention, outcome)
            except Exception as exc:
                raise DataFormatError(str(exc), row=row_num, column="outcome") from None
            judgment = _parse_judgment(intervention.n, row.get("judgment", "?"),
                                       row_num, strict)
            confidences = {}
            predictions = {}
            for key, value in row.items():
                if not value:
                    continue
                if key.startswith("confidence_"):
                    label = key[len("confidence_"):]
                    i, j = NODE_LABELS.index(label[0]), NODE_LABELS.index(label[1])
                    confidences[(i, j)] = float(value)
                elif key.startswith("prediction_"):
                    predictions[NODE_LABELS.index(key[len("prediction_"):])] = float(value)
            current.append((row_num, row["device_id"], trial, judgment,
                            confidences or None, predictions or None))
        flush()
        participants.append(
            ParticipantData(pid, first.get("experiment", ""), condition, tuple(problems))
        )
    return participants


# -- report emission -------------------------------------------------------------

def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_reports(tables: dict, fmt: str, out_dir) -> list[str]:
    """Write each table as CSV and/or JSON; identical inputs give
    identical bytes."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    formats = ("csv", "json") if fmt == "both" else (fmt,)
    for name, rows in sorted(tables.items()):
        if "json" in formats:
            path = os.path.join(out_dir, f"{name}.json")
            with open(path, "w") as fh:
                json.dump(rows, fh, sort_keys=True, indent=1)
                fh.write("\n")
            written.append(path)
        if "csv" in formats:
            path = os.path.join(out_dir, f"{name}.csv")
            buf = io.StringIO()
            columns = list(rows[0].keys()) if rows else []
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_format_cell(row.get(c, "")) for c in columns])
            with open(path, "w") as fh:
                fh.write(buf.getvalue())
            written.append(path)
    return written

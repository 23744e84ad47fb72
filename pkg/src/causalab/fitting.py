"""Per-participant maximum-likelihood fitting of judgment and intervention
models, information criteria, and the model-recovery study.

Likelihood evaluation is split in two: a walker turns one participant's
streams into per-test contexts (recent-evidence likelihood vectors, full
posteriors, endorsement targets) that do not depend on any fitted
parameter, and per-model scorers mix those contexts under candidate
parameters.  That keeps optimizer iterations cheap; the only parameter
that forces recomputation inside the loop is the search-sharpness omega,
which reshapes the transition matrix.

Per-observation log probabilities are floored at log(1e-12) so degenerate
parameter corners stay finite without disturbing rankings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import _kernels
from .devices import Condition
from .exceptions import DataFormatError, FitFailureError
from .graphs import CausalGraph, HypothesisSpace, Trial, hypothesis_space
from .inference import BeliefDistribution, expected_info_gain
from .learners import (
    JUDGMENT_KINDS,
    JudgmentModelSpec,
    K_CAP,
    poisson_weights,
    sample_search_length,
    se_update,
)
from .localfocus import (
    Focus,
    InterventionModelSpec,
    LocalGainCache,
    _softmax,
    focus_entropy,
)
from .noisyor import ParamGrid, Params, WMode, space_trial_likelihoods

LOG_FLOOR = math.log(1e-12)
DEFAULT_RESTARTS = 10


# -- participant data ----------------------------------------------------------

@dataclass(frozen=True)
class ProblemData:
    """One problem's aligned streams; judgment None marks a skipped test
    (unspecified or cyclic report, excluded from likelihoods)."""

    device_id: str
    n: int
    trials: tuple[Trial, ...]
    judgments: tuple  # CausalGraph | None per test
    confidences: tuple = None  # dict per test or None
    predictions: tuple = None

    def __post_init__(self):
        if len(self.trials) != len(self.judgments):
            raise DataFormatError(
                f"device {self.device_id}: {len(self.trials)} trials vs "
                f"{len(self.judgments)} judgments"
            )
        if self.confidences is None:
            object.__setattr__(self, "confidences", (None,) * len(self.trials))
        if self.predictions is None:
            object.__setattr__(self, "predictions", (None,) * len(self.trials))


@dataclass(frozen=True)
class ParticipantData:
    participant_id: str
    experiment: str
    condition: Condition
    problems: tuple[ProblemData, ...]

    def n_tests(self) -> int:
        return sum(len(p.trials) for p in self.problems)


@dataclass(frozen=True)
class FitResult:
    model: str
    target: str  # "judgment" | "intervention"
    participant_id: str
    params: dict
    nll: float
    n_params: int
    n_obs: int
    bic: float
    pseudo_r2: float

    @staticmethod
    def build(model, target, participant_id, params, nll, n_obs, baseline_nll):
        n_params = len(params)
        bic = 2.0 * nll + n_params * math.log(n_obs) if n_obs else 0.0
        r2 = 1.0 - nll / baseline_nll if baseline_nll > 0 else 0.0
        return FitResult(model, target, participant_id, dict(params), nll,
                         n_params, n_obs, bic, r2)


def w_mode_for(data: ParticipantData, grid: ParamGrid | None = None) -> WMode:
    """Known-condition parameters, or the supplied grid for unknown noise."""
    if data.condition.w_known:
        return Params(data.condition.w_s, data.condition.w_b)
    if grid is None:
        from .noisyor import ParamPrior, draw_param_grid

        grid = draw_param_grid(ParamPrior("UU"))
    return grid


# -- per-test contexts ---------------------------------------------------------

@dataclass
class _JTest:
    space: HypothesisSpace
    b_prev_idx: int
    b_idx: int  # -1 when skipped
    recent_lik: np.ndarray  # grid-marginal likelihood of the recent window, [G]
    post_full: np.ndarray  # normalized posterior from uniform over D^t, [G]
    stay_lik: float  # P(d^t | b_prev), grid-averaged
    se_plus_idx: int


def _judgment_contexts(data: ParticipantData, w: WMode) -> list[_JTest]:
    out = []
    for problem in data.problems:
        space = hypothesis_space(problem.n)
        G = len(space)
        grid = isinstance(w, ParamGrid)
        recent = np.ones((G, w.size)) if grid else np.ones(G)
        full = recent.copy()
        b_prev = CausalGraph.empty(problem.n)
        for trial, judgment in zip(problem.trials, problem.judgments):
            lik = space_trial_likelihoods(space, trial, w)
            recent = recent * lik
            full = full * lik
            recent_marg = recent.mean(axis=1) if grid else recent
            full_marg = full.mean(axis=1) if grid else full
            total = full_marg.sum()
            post = full_marg / total if total > 0 else np.full(G, 1.0 / G)
            b_prev_idx = space.index_of(b_prev)
            stay = float(lik[b_prev_idx].mean()) if grid else float(lik[b_prev_idx])
            out.append(
                _JTest(
                    space=space,
                    b_prev_idx=b_prev_idx,
                    b_idx=space.index_of(judgment) if judgment is not None else -1,
                    recent_lik=recent_marg,
                    post_full=post,
                    stay_lik=stay,
                    se_plus_idx=space.index_of(se_update(b_prev, trial)),
                )
            )
            if judgment is not None and judgment != b_prev:
                recent = np.ones_like(recent)
                b_prev = judgment
    return out


def _floored_nll(probs) -> float:
    return -float(np.sum(np.maximum(np.log(np.maximum(probs, 0.0) + 1e-300), LOG_FLOOR)))


_R0_STACK_CACHE: dict = {}


def _ns_k_probs(ctx: _JTest, omega: float) -> np.ndarray:
    """P(b^t | k resampling steps) for k = 0..K_CAP at one scored test."""
    space = ctx.space
    all_positive = bool((ctx.recent_lik > 0.0).all())
    if omega == 0.0 and all_positive:
        # the random-edit kernel ignores the data, so its power stacks are
        # shared across tests, participants and problems
        key = (space.n, ctx.b_prev_idx)
        rows = _R0_STACK_CACHE.get(key)
        if rows is None:
            R = _kernels.transition_matrix(np.ones(len(space)), space.neighbors, 0.0)
            rows = _kernels.row_power_stack(R, ctx.b_prev_idx, K_CAP)
            _R0_STACK_CACHE[key] = rows
        return rows[:, ctx.b_idx]
    R = _kernels.transition_matrix(ctx.recent_lik, space.neighbors, float(omega))
    rows = _kernels.row_power_stack(R, ctx.b_prev_idx, K_CAP)
    return rows[:, ctx.b_idx]


class JudgmentFitter:
    """Shared contexts plus per-model NLL functions for one participant."""

    def __init__(self, data: ParticipantData, w: WMode):
        self.data = data
        self.w = w
        self.contexts = [c for c in _judgment_contexts(data, w)]
        self.scored = [c for c in self.contexts if c.b_idx >= 0]
        if not self.scored:
            raise DataFormatError(
                f"participant {data.participant_id}: no scorable judgments"
            )
        self.n_obs = len(self.scored)
        self.baseline_nll = sum(math.log(len(c.space)) for c in self.scored)
        self._inv_sizes = np.array([1.0 / len(c.space) for c in self.scored])

    def nll(self, spec: JudgmentModelSpec) -> float:
        kind = spec.kind
        if kind == "Baseline":
            return self.baseline_nll
        if kind == "SE":
            probs = [
                spec.epsilon / len(c.space)
                + (1.0 - spec.epsilon)
                * (
                    spec.rho_se * (c.b_idx == c.se_plus_idx)
                    + (1.0 - spec.rho_se) * (c.b_idx == c.b_prev_idx)
                )
                for c in self.scored
            ]
            return _floored_nll(probs)
        if kind == "WSLS":
            probs = []
            for c in self.scored:
                stay = 1.0 - c.stay_lik if spec.wsls_stay_complement else c.stay_lik
                p = (1.0 - stay) * c.post_full[c.b_idx] + stay * (c.b_idx == c.b_prev_idx)
                probs.append(spec.epsilon / len(c.space) + (1.0 - spec.epsilon) * p)
            return _floored_nll(probs)
        if kind == "Rational":
            probs = []
            for c in self.scored:
                if spec.rational_log_space:
                    q = np.where(c.post_full > 0, c.post_full, 0.0) ** spec.theta
                else:
                    z = spec.theta * c.post_full
                    q = np.exp(z - z.max())
                probs.append(
                    spec.epsilon / len(c.space)
                    + (1.0 - spec.epsilon) * q[c.b_idx] / q.sum()
                )
            return _floored_nll(probs)
        if kind in ("NS", "NS-RE"):
            omega = 0.0 if kind == "NS-RE" else spec.omega
            kprobs = np.array([_ns_k_probs(c, omega) for c in self.scored])
            return self._ns_nll_from_kprobs(kprobs, spec.lam, spec.epsilon)
        raise ValueError(f"cannot evaluate kind {kind!r}")

    def _ns_nll_from_kprobs(self, kprobs: np.ndarray, lam, epsilon) -> float:
        probs = epsilon * self._inv_sizes + (1.0 - epsilon) * (kprobs @ poisson_weights(lam))
        return _floored_nll(probs)

    def ns_nll_fn(self, omega: float):
        """NLL(lam, epsilon) closure at held omega, contexts precomputed."""
        kprobs = np.array([_ns_k_probs(c, omega) for c in self.scored])

        def fn(lam, epsilon):
            return self._ns_nll_from_kprobs(kprobs, lam, epsilon)

        return fn


def judgment_nll(spec: JudgmentModelSpec, data: ParticipantData, w: WMode) -> float:
    """Negative log likelihood of the judgment stream under one model."""
    return JudgmentFitter(data, w).nll(spec)


# -- intervention contexts -----------------------------------------------------

@dataclass
class _ITest:
    space: HypothesisSpace
    c_idx: int
    edge_entropies: np.ndarray  # [P]
    effects_entropies: np.ndarray  # [N]
    conf_entropy: float  # nan when undefined (b_prev unconnected)
    edge_gains: np.ndarray  # [P, C]
    effects_gains: np.ndarray  # [N, C]
    conf_gains: np.ndarray  # [C] (zeros when undefined)
    global_eig: np.ndarray  # [C]


_GAIN_CACHES: dict = {}


def _shared_gain_cache(n: int, w: WMode) -> LocalGainCache:
    key = (n, (w.w_s, w.w_b) if isinstance(w, Params) else id(w))
    cache = _GAIN_CACHES.get(key)
    if cache is None:
        cache = LocalGainCache(hypothesis_space(n), w)
        _GAIN_CACHES[key] = cache
    return cache


def _intervention_contexts(data: ParticipantData, w: WMode) -> list[_ITest]:
    from .inference import GridBelief, posterior_known

    out = []
    for problem in data.problems:
        space = hypothesis_space(problem.n)
        cache = _shared_gain_cache(problem.n, w)
        candidates = cache.candidates
        cand_index = {c: k for k, c in enumerate(candidates)}
        b_prev = CausalGraph.empty(problem.n)
        b0 = CausalGraph.empty(problem.n)
        recent: list[Trial] = []
        full: list[Trial] = []
        for trial, judgment in zip(problem.trials, problem.judgments):
            edge_h = np.array(
                [focus_entropy(Focus("edge", pair=p), b_prev, recent, w, space)
                 for p in space.pairs]
            )
            eff_h = np.array(
                [focus_entropy(Focus("effects", node=x), b_prev, recent, w, space)
                 for x in range(space.n)]
            )
            if b_prev == b0:
                conf_h = float("nan")
                conf_g = np.zeros(len(candidates))
            else:
                conf_h = focus_entropy(Focus("confirmation"), b_prev, recent, w, space)
                conf_g = cache.gain_row(Focus("confirmation"), b_prev)
            edge_g = np.array(
                [cache.gain_row(Focus("edge", pair=p), b_prev) for p in space.pairs]
            )
            eff_g = np.array(
                [cache.gain_row(Focus("effects", node=x), b_prev) for x in range(space.n)]
            )
            if isinstance(w, ParamGrid):
                belief = GridBelief(space, w)
                if full:
                    belief = belief.updated(full)
                eig = np.array([expected_info_gain(belief, c, w) for c in candidates])
            else:
                prior = BeliefDistribution.uniform(space)
                post = posterior_known(prior, full, w)
                eig = np.array([expected_info_gain(post, c, w) for c in candidates])
            out.append(
                _ITest(
                    space=space,
                    c_idx=cand_index[trial.intervention],
                    edge_entropies=edge_h,
                    effects_entropies=eff_h,
                    conf_entropy=conf_h,
                    edge_gains=edge_g,
                    effects_gains=eff_g,
                    conf_gains=conf_g,
                    global_eig=eig,
                )
            )
            full.append(trial)
            recent.append(trial)
            if judgment is not None and judgment != b_prev:
                recent = []
                b_prev = judgment
    return out


class InterventionFitter:
    """Shared contexts plus per-model NLL functions for one participant."""

    def __init__(self, data: ParticipantData, w: WMode):
        self.data = data
        self.w = w
        self.contexts = _intervention_contexts(data, w)
        if not self.contexts:
            raise DataFormatError(
                f"participant {data.participant_id}: no intervention choices"
            )
        self.n_obs = len(self.contexts)
        self.baseline_nll = sum(
            math.log(3 ** c.space.n) for c in self.contexts
        )

    def nll(self, spec: InterventionModelSpec) -> float:
        probs = [self._choice_prob(spec, c) for c in self.contexts]
        return _floored_nll(probs)

    def _choice_prob(self, spec: InterventionModelSpec, ctx: _ITest) -> float:
        n_cand = ctx.edge_gains.shape[1]
        kind = spec.kind
        if kind == "baseline":
            return 1.0 / n_cand
        if kind == "global":
            return float(_softmax(ctx.global_eig, spec.theta)[ctx.c_idx])
        defined_conf = not math.isnan(ctx.conf_entropy)
        if kind == "edge":
            entropies, gains = ctx.edge_entropies, ctx.edge_gains
        elif kind == "effects":
            entropies, gains = ctx.effects_entropies, ctx.effects_gains
        elif kind == "confirmation":
            if not defined_conf:
                return 1.0 / n_cand
            entropies, gains = np.array([ctx.conf_entropy]), ctx.conf_gains[None, :]
        else:  # mixed
            entropies = np.concatenate([ctx.edge_entropies, ctx.effects_entropies])
            gains = np.vstack([ctx.edge_gains, ctx.effects_gains])
            if defined_conf:
                entropies = np.append(entropies, ctx.conf_entropy)
                gains = np.vstack([gains, ctx.conf_gains[None, :]])
        stage1 = _softmax(entropies, spec.rho)
        total = 0.0
        for p_f, row in zip(stage1, gains):
            total += p_f * _softmax(row, spec.eta)[ctx.c_idx]
        return total


def intervention_nll(spec: InterventionModelSpec, data: ParticipantData, w: WMode) -> float:
    """Negative log likelihood of the intervention-choice stream."""
    return InterventionFitter(data, w).nll(spec)


# -- maximum-likelihood optimization -------------------------------------------

def _transform(value: float, how: str) -> float:
    # overflow-safe: Nelder-Mead may wander far outside the start box
    if how == "log":
        return math.exp(min(value, 700.0))
    if how == "logit":
        if value >= 0:
            return 1.0 / (1.0 + math.exp(-min(value, 700.0)))
        z = math.exp(max(value, -700.0))
        return z / (1.0 + z)
    return value


_JUDGMENT_PARAM_SPECS = {
    "NS": (("lambda", "log", (-5.0, 4.0)), ("omega", "log", (-4.0, 6.0)),
           ("epsilon", "logit", (-7.0, 7.0))),
    "NS-RE": (("lambda", "log", (-5.0, 4.0)), ("epsilon", "logit", (-7.0, 7.0))),
    "SE": (("rho", "logit", (-7.0, 7.0)), ("epsilon", "logit", (-7.0, 7.0))),
    "WSLS": (("epsilon", "logit", (-7.0, 7.0)),),
    "Rational": (("theta", "log", (-4.0, 8.0)), ("epsilon", "logit", (-7.0, 7.0))),
    "Baseline": (),
}

_INTERVENTION_PARAM_SPECS = {
    "edge": (("eta", "log", (-4.0, 6.0)), ("rho", "identity", (-50.0, 50.0))),
    "effects": (("eta", "log", (-4.0, 6.0)), ("rho", "identity", (-50.0, 50.0))),
    "confirmation": (("eta", "log", (-4.0, 6.0)),),
    "mixed": (("eta", "log", (-4.0, 6.0)), ("rho", "identity", (-50.0, 50.0))),
    "global": (("theta", "log", (-4.0, 8.0)),),
    "baseline": (),
}


def _optimize(objective, param_specs, restarts, rng):
    """Best-of-restarts Brent (1 parameter) or Nelder-Mead (several)."""
    if not param_specs:
        return (), objective(())
    bounds = [spec[2] for spec in param_specs]
    if len(param_specs) == 1:
        res = minimize_scalar(
            lambda x: objective((x,)), bounds=bounds[0], method="bounded",
            options={"xatol": 1e-5},
        )
        if not math.isfinite(res.fun):
            raise FitFailureError("objective non-finite over the search interval")
        return (float(res.x),), float(res.fun)
    best_x, best_f = None, math.inf
    for _ in range(max(1, restarts)):
        x0 = np.array([rng.uniform(lo, hi) for lo, hi in bounds])
        res = minimize(
            lambda x: objective(tuple(x)), x0, method="Nelder-Mead",
            options={"xatol": 1e-4, "fatol": 1e-7, "maxiter": 400},
        )
        if res.fun < best_f:
            best_x, best_f = np.clip(res.x, [b[0] for b in bounds],
                                     [b[1] for b in bounds]), float(res.fun)
    if best_x is None or not math.isfinite(best_f):
        raise FitFailureError("no finite objective found at any restart")
    return tuple(float(v) for v in best_x), best_f


def _spec_from_params(kind, names, raw, transforms, extra=None):
    values = {n: _transform(v, t) for n, v, t in zip(names, raw, transforms)}
    if extra:
        values.update(extra)
    if kind in JUDGMENT_KINDS:
        return JudgmentModelSpec.from_config({"kind": kind, **values}), values
    return InterventionModelSpec.from_config({"kind": kind, **values}), values


def fit_mle(kind: str, data: ParticipantData, w: WMode,
            restarts: int = DEFAULT_RESTARTS, rng=None,
            target: str | None = None, joint_omega: bool = False) -> FitResult:
    """Maximum-likelihood fit of one model to one participant.

    Judgment NS fits on mixed 3/4-variable data use the two-pass schedule
    (omega from the 3-variable problems, then lambda/epsilon on the full
    data with omega held) unless ``joint_omega`` forces a single joint
    fit.  Deterministic given the rng seed.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    if target is None:
        target = "judgment" if kind in JUDGMENT_KINDS else "intervention"

    if target == "judgment":
        fitter = JudgmentFitter(data, w)
        if kind == "NS" and not joint_omega:
            ns_result = _fit_ns_two_pass(fitter, data, w, restarts, rng)
            if ns_result is not None:
                return ns_result
        specs = _JUDGMENT_PARAM_SPECS[kind]
        names = [s[0] for s in specs]
        transforms = [s[1] for s in specs]

        def objective(raw):
            spec, _ = _spec_from_params(kind, names, raw, transforms)
            return fitter.nll(spec)

        raw, nll = _optimize(objective, specs, restarts, rng)
        _, params = _spec_from_params(kind, names, raw, transforms)
        return FitResult.build(kind, target, data.participant_id, params, nll,
                               fitter.n_obs, fitter.baseline_nll)

    ifitter = InterventionFitter(data, w)
    specs = _INTERVENTION_PARAM_SPECS[kind]
    names = [s[0] for s in specs]
    transforms = [s[1] for s in specs]

    def objective(raw):
        spec, _ = _spec_from_params(kind, names, raw, transforms)
        return ifitter.nll(spec)

    raw, nll = _optimize(objective, specs, restarts, rng)
    _, params = _spec_from_params(kind, names, raw, transforms)
    return FitResult.build(kind, target, data.participant_id, params, nll,
                           ifitter.n_obs, ifitter.baseline_nll)


def _fit_ns_two_pass(fitter: JudgmentFitter, data: ParticipantData, w: WMode,
                     restarts, rng) -> FitResult | None:
    """Omega from 3-variable problems, then lambda/epsilon on everything."""
    small = [p for p in data.problems if p.n <= 3]
    large = [p for p in data.problems if p.n > 3]
    if not small or not large:
        return None
    sub = ParticipantData(data.participant_id, data.experiment, data.condition,
                          tuple(small))
    sub_fitter = JudgmentFitter(sub, w)
    specs = _JUDGMENT_PARAM_SPECS["NS"]
    names = [s[0] for s in specs]
    transforms = [s[1] for s in specs]

    def pass1(raw):
        spec, _ = _spec_from_params("NS", names, raw, transforms)
        return sub_fitter.nll(spec)

    raw1, _ = _optimize(pass1, specs, restarts, rng)
    omega = _transform(raw1[1], "log")

    nll_fn = fitter.ns_nll_fn(omega)
    pass2_specs = (specs[0], specs[2])

    def pass2(raw):
        return nll_fn(_transform(raw[0], "log"), _transform(raw[1], "logit"))

    raw2, nll = _optimize(pass2, pass2_specs, restarts, rng)
    params = {
        "lambda": _transform(raw2[0], "log"),
        "omega": omega,
        "epsilon": _transform(raw2[1], "logit"),
    }
    return FitResult.build("NS", "judgment", data.participant_id, params, nll,
                           fitter.n_obs, fitter.baseline_nll)


# -- simulation of judgment streams (for recovery) ------------------------------

def simulate_judgments(spec: JudgmentModelSpec, data: ParticipantData, w: WMode,
                       rng) -> ParticipantData:
    """Synthetic participant: same problems and trials, model-generated
    judgments, following the same evidence-window semantics as fitting."""
    problems = []
    for problem in data.problems:
        space = hypothesis_space(problem.n)
        G = len(space)
        grid = isinstance(w, ParamGrid)
        recent = np.ones((G, w.size)) if grid else np.ones(G)
        full = recent.copy()
        b_prev = CausalGraph.empty(problem.n)
        judgments = []
        for trial in problem.trials:
            lik = space_trial_likelihoods(space, trial, w)
            recent = recent * lik
            full = full * lik
            b = _simulate_one_judgment(spec, space, b_prev, recent, full, trial, w, rng)
            judgments.append(b)
            if b != b_prev:
                recent = np.ones_like(recent)
                b_prev = b
        problems.append(
            ProblemData(problem.device_id, problem.n, problem.trials, tuple(judgments))
        )
    return ParticipantData(
        f"{data.participant_id}:{spec.kind}", data.experiment, data.condition,
        tuple(problems),
    )


def _simulate_one_judgment(spec, space, b_prev, recent, full, trial, w, rng):
    G = len(space)
    kind = spec.kind
    if kind != "Baseline" and spec.epsilon > 0 and rng.random() < spec.epsilon:
        return space.graphs[rng.integers(G)]
    if kind == "Baseline":
        return space.graphs[rng.integers(G)]
    if kind in ("NS", "NS-RE"):
        omega = 0.0 if kind == "NS-RE" else spec.omega
        lik = recent.mean(axis=1) if recent.ndim == 2 else recent
        g = space.index_of(b_prev)
        k = sample_search_length(rng, spec.lam)
        P = len(space.pairs)
        for _ in range(k):
            p = int(rng.integers(P))
            weights = np.asarray(
                _kernels._triple_weights(lik, space.neighbors[g, p], float(omega))
            )
            g = int(space.neighbors[g, p, rng.choice(3, p=weights)])
        return space.graphs[g]
    if kind == "SE":
        b_plus = se_update(b_prev, trial)
        return b_plus if rng.random() < spec.rho_se else b_prev
    full_marg = full.mean(axis=1) if full.ndim == 2 else full
    post = full_marg / full_marg.sum()
    if kind == "WSLS":
        b_prev_idx = space.index_of(b_prev)
        if isinstance(w, ParamGrid):
            lik_t = space_trial_likelihoods(space, trial, w)[b_prev_idx].mean()
        else:
            lik_t = space_trial_likelihoods(space, trial, w)[b_prev_idx]
        stay = 1.0 - lik_t if spec.wsls_stay_complement else lik_t
        if rng.random() < stay:
            return b_prev
        return space.graphs[rng.choice(G, p=post)]
    if kind == "Rational":
        if spec.rational_log_space:
            q = np.where(post > 0, post, 0.0) ** spec.theta
        else:
            z = spec.theta * post
            q = np.exp(z - z.max())
        return space.graphs[rng.choice(G, p=q / q.sum())]
    raise ValueError(f"cannot simulate kind {kind!r}")


# -- recovery and comparison ----------------------------------------------------

def fit_all_judgment_models(data: ParticipantData, w: WMode,
                            models=JUDGMENT_KINDS, restarts: int = DEFAULT_RESTARTS,
                            rng=None) -> dict:
    rng = rng if rng is not None else np.random.default_rng(0)
    return {kind: fit_mle(kind, data, w, restarts, rng) for kind in models}


def best_by_bic(fits: dict) -> str:
    """Winning model kind; BIC ties go to the fewer-parameter model."""
    return min(fits.values(), key=lambda f: (round(f.bic, 9), f.n_params)).model


def recovery_study(participants: list[ParticipantData],
                   fitted: dict, rng, models=JUDGMENT_KINDS,
                   restarts: int = 3, grid: ParamGrid | None = None) -> dict:
    """Generating-model x recovered-model confusion counts.

    ``fitted`` maps participant_id -> {kind -> FitResult}.  For every
    participant and generating model, simulate a synthetic participant
    with the fitted parameters on the same problems, refit all models,
    and tally the best-BIC winner.
    """
    confusion = {(g, r): 0 for g in models for r in models}
    for data in participants:
        w = w_mode_for(data, grid)
        for gen in models:
            fit = fitted[data.participant_id][gen]
            spec = JudgmentModelSpec.from_config({"kind": gen, **fit.params})
            synthetic = simulate_judgments(spec, data, w, rng)
            refits = fit_all_judgment_models(synthetic, w, models, restarts, rng)
            confusion[(gen, best_by_bic(refits))] += 1
    return confusion


def compare_models(fits_by_model: dict) -> list[dict]:
    """Population summary per model: summed BIC, total logL, median
    pseudo-R^2, median parameters, and the best-fit head count."""
    kinds = list(fits_by_model)
    participants = {f.participant_id for fits in fits_by_model.values() for f in fits}
    best_counts = {k: 0 for k in kinds}
    for pid in participants:
        per = {}
        for kind in kinds:
            for f in fits_by_model[kind]:
                if f.participant_id == pid:
                    per[kind] = f
        if per:
            best_counts[best_by_bic(per)] += 1
    rows = []
    for kind in kinds:
        fits = fits_by_model[kind]
        if not fits:
            continue
        param_names = sorted({name for f in fits for name in f.params})
        row = {
            "model": kind,
            "n_best_fit": best_counts[kind],
            "total_log_likelihood": -sum(f.nll for f in fits),
            "total_bic": sum(f.bic for f in fits),
            "median_pseudo_r2": float(np.median([f.pseudo_r2 for f in fits])),
        }
        for name in param_names:
            row[f"median_{name}"] = float(
                np.median([f.params[name] for f in fits if name in f.params])
            )
        rows.append(row)
    rows.sort(key=lambda r: r["total_bic"])
    return rows

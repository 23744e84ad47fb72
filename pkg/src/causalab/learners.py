"""Judgment models: single-hypothesis local search (NS), its random-edit
null (NS-RE), simple endorsement (SE), win-stay/lose-sample (WSLS), a
softmax-MAP Bayesian responder (Rational), and a uniform Baseline.

Each model exists in two forms: a likelihood evaluator returning the full
distribution over next beliefs (for fitting), and a step simulator (for
the harness).  The NS search chain is capped at K_CAP resampling steps
with the Poisson length distribution renormalized accordingly, in both
forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .graphs import CausalGraph, HypothesisSpace, Trial, hypothesis_space, node_pairs
from .inference import (
    BeliefDistribution,
    EvidenceLog,
    completion_indices,
    posterior_known,
    posterior_marginal,
)
from .noisyor import Params, WMode, marginal_evidence_likelihoods, trial_likelihood

K_CAP = 50

JUDGMENT_KINDS = ("NS", "NS-RE", "SE", "WSLS", "Rational", "Baseline")


@dataclass(frozen=True)
class JudgmentModelSpec:
    """Parameters of one judgment model.

    Which fields are meaningful depends on ``kind``: NS uses (lam, omega,
    epsilon); NS-RE (lam, epsilon) with omega pinned to 0; SE (rho_se,
    epsilon); WSLS (epsilon); Rational (theta, epsilon); Baseline nothing.
    ``wsls_stay_complement`` flips the WSLS stay probability to
    1 - P(d|b); ``rational_log_space`` applies the Rational softmax to log
    posterior probabilities.  Both default to the fitted equations.
    """

    kind: str
    lam: float = 0.0
    omega: float = 1.0
    rho_se: float = 0.0
    theta: float = 0.0
    epsilon: float = 0.0
    wsls_stay_complement: bool = False
    rational_log_space: bool = False

    def __post_init__(self):
        if self.kind not in JUDGMENT_KINDS:
            raise ValueError(f"unknown judgment model kind {self.kind!r}")
        if self.kind == "NS-RE" and self.omega != 0.0:
            object.__setattr__(self, "omega", 0.0)
        if self.lam < 0 or self.omega < 0 or self.theta < 0:
            raise ValueError("lam, omega and theta must be >= 0")
        if not (0.0 <= self.epsilon <= 1.0 and 0.0 <= self.rho_se <= 1.0):
            raise ValueError("epsilon and rho_se must lie in [0, 1]")

    @staticmethod
    def from_config(cfg: dict) -> "JudgmentModelSpec":
        return JudgmentModelSpec(
            kind=cfg["kind"],
            lam=float(cfg.get("lambda", 0.0)),
            omega=float(cfg.get("omega", 0.0 if cfg["kind"] == "NS-RE" else 1.0)),
            rho_se=float(cfg.get("rho", 0.0)),
            theta=float(cfg.get("theta", 0.0)),
            epsilon=float(cfg.get("epsilon", 0.0)),
            wsls_stay_complement=bool(cfg.get("stay_complement", False)),
            rational_log_space=bool(cfg.get("log_space", False)),
        )

    def to_config(self) -> dict:
        cfg = {"kind": self.kind}
        if self.kind in ("NS", "NS-RE"):
            cfg["lambda"] = self.lam
        if self.kind == "NS":
            cfg["omega"] = self.omega
        if self.kind == "SE":
            cfg["rho"] = self.rho_se
        if self.kind == "Rational":
            cfg["theta"] = self.theta
        if self.kind != "Baseline":
            cfg["epsilon"] = self.epsilon
        return cfg


@dataclass
class LearnerState:
    """One graph hypothesis plus the evidence kept since it last changed."""

    belief: CausalGraph
    recent: EvidenceLog = field(default_factory=EvidenceLog)
    rng: np.random.Generator = None

    @staticmethod
    def fresh(n: int, rng) -> "LearnerState":
        return LearnerState(belief=CausalGraph.empty(n), recent=EvidenceLog(), rng=rng)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic single-edge resampling kernel over a space."""

    space: HypothesisSpace
    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.shape != (len(self.space), len(self.space)):
            raise ValueError("entries must be square over the space")
        if np.abs(arr.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("rows must sum to 1")
        object.__setattr__(self, "entries", arr)
        arr.flags.writeable = False


_KS = np.arange(K_CAP + 1)
_LGAMMA = gammaln(_KS + 1)


def poisson_weights(lam: float, kmax: int = K_CAP) -> np.ndarray:
    """Poisson(lam) pmf over 0..kmax, renormalized to sum to 1.

    Normalized in log space so extreme rates stay well-defined (for
    lam >> kmax the capped distribution concentrates at kmax instead of
    underflowing to 0/0).
    """
    if lam == 0.0:
        w = np.zeros(kmax + 1)
        w[0] = 1.0
        return w
    ks = _KS if kmax == K_CAP else np.arange(kmax + 1)
    lg = _LGAMMA if kmax == K_CAP else gammaln(ks + 1)
    logw = ks * math.log(lam) - lg  # the -lam term is constant and cancels
    w = np.exp(logw - logw.max())
    return w / w.sum()


def sample_search_length(rng, lam: float, kmax: int = K_CAP) -> int:
    return int(rng.choice(kmax + 1, p=poisson_weights(lam, kmax)))


def gibbs_conditional(space: HypothesisSpace, pair, others, evidence, w: WMode,
                      omega: float = 1.0) -> np.ndarray:
    """Sharpened resampling distribution over one pair's states (-1, 0, +1).

    Proportional to the omega-th power of the conditional edge probability
    given the other edges and the recent evidence; cycle-inducing states
    are pinned at zero, and under omega=0 zero-probability states stay
    zero while the rest become uniform (0^0 := 0).
    """
    if isinstance(pair, tuple):
        pair = space.pairs.index(pair)
    states = others.edges if isinstance(others, CausalGraph) else others
    idx = completion_indices(space, pair, states)
    lik = marginal_evidence_likelihoods(space, list(evidence), w)
    return np.asarray(_kernels._triple_weights(lik, idx, float(omega)))


def build_transition_matrix(space: HypothesisSpace, evidence, w: WMode,
                            omega: float = 1.0) -> TransitionMatrix:
    """Average the per-pair resampling kernels into one Markov matrix.

    Each row moves mass only among graphs within a single edge edit of the
    row graph, weighting each pair 1/#pairs.
    """
    lik = marginal_evidence_likelihoods(space, list(evidence), w)
    entries = _kernels.transition_matrix(lik, space.neighbors, float(omega))
    return TransitionMatrix(space, entries)


def ns_predictive(b_prev: CausalGraph, evidence, w: WMode, lam: float,
                  omega: float, epsilon: float = 0.0,
                  space: HypothesisSpace | None = None) -> BeliefDistribution:
    """Distribution of the belief after a Poisson-length resampling search.

    Mixes the capped-Poisson average of transition-matrix powers from
    ``b_prev`` with an epsilon share of the uniform distribution.
    """
    space = space or hypothesis_space(b_prev.n)
    R = build_transition_matrix(space, evidence, w, omega)
    rows = _kernels.row_power_stack(R.entries, space.index_of(b_prev), K_CAP)
    probs = poisson_weights(lam) @ rows
    probs = (1.0 - epsilon) * probs + epsilon / len(space)
    return BeliefDistribution(space, probs / probs.sum())


def ns_step(state: LearnerState, trial: Trial, w: WMode, lam: float,
            omega: float) -> LearnerState:
    """One procedural update: absorb the trial, search, maybe reset memory.

    Draws k from the capped Poisson, resamples k uniformly chosen pairs in
    sequence (each conditioned on the current working graph and the full
    recent evidence), adopts the endpoint, and clears the recent evidence
    iff the belief changed.
    """
    space = hypothesis_space(state.belief.n)
    recent = state.recent.append(trial)
    lik = marginal_evidence_likelihoods(space, recent.trials, w)
    k = sample_search_length(state.rng, lam)
    g = space.index_of(state.belief)
    P = len(space.pairs)
    for _ in range(k):
        p = int(state.rng.integers(P))
        weights = np.asarray(_kernels._triple_weights(lik, space.neighbors[g, p], float(omega)))
        g = int(space.neighbors[g, p, state.rng.choice(3, p=weights)])
    belief = space.graphs[g]
    if belief != state.belief:
        recent = EvidenceLog()
    return LearnerState(belief=belief, recent=recent, rng=state.rng)


def se_update(b_prev: CausalGraph, trial: Trial) -> CausalGraph:
    """Endorsed graph: edges added from fixed-on nodes to activated free
    nodes and removed toward silent free nodes, opposite orientations
    overwritten; edits that would close a loop revert to the previous
    state, applied in canonical pair order."""
    n = b_prev.n
    on_nodes = [i for i in trial.intervention.fixed_nodes
                if trial.intervention.fixed_value(i) == 1]
    free = set(trial.intervention.free_nodes)
    desired = {}
    for u in on_nodes:
        for v in free:
            i, j = min(u, v), max(u, v)
            if trial.outcome.values[v] == 1:
                desired[(i, j)] = 1 if u < v else -1
            else:
                desired[(i, j)] = 0
    edges = list(b_prev.edges)
    from .graphs import is_acyclic

    for k, pair in enumerate(node_pairs(n)):
        if pair not in desired:
            continue
        old = edges[k]
        edges[k] = desired[pair]
        if not is_acyclic(n, edges):
            edges[k] = old
    return CausalGraph(n, tuple(edges))


def se_likelihood(b_prev: CausalGraph, trial: Trial, rho_se: float,
                  epsilon: float, space: HypothesisSpace | None = None) -> BeliefDistribution:
    """Mixture of endorsing the updated graph, keeping the old one, and a
    uniform lapse."""
    space = space or hypothesis_space(b_prev.n)
    probs = np.full(len(space), epsilon / len(space))
    b_plus = se_update(b_prev, trial)
    probs[space.index_of(b_plus)] += (1.0 - epsilon) * rho_se
    probs[space.index_of(b_prev)] += (1.0 - epsilon) * (1.0 - rho_se)
    return BeliefDistribution(space, probs)


def wsls_likelihood(b_prev: CausalGraph, evidence, latest: Trial, w: WMode,
                    epsilon: float, stay_complement: bool = False,
                    space: HypothesisSpace | None = None) -> BeliefDistribution:
    """Stay on b_prev with probability equal to the latest trial's
    likelihood under it, else sample the full-evidence posterior.

    ``stay_complement=True`` selects the alternate reading with stay
    probability 1 - P(d | b_prev).
    """
    space = space or hypothesis_space(b_prev.n)
    if isinstance(w, Params):
        stay = trial_likelihood(b_prev, w, latest)
    else:
        stay = float(
            np.mean([trial_likelihood(b_prev, Params(ws, wb), latest)
                     for ws, wb in w.samples])
        )
    if stay_complement:
        stay = 1.0 - stay
    uniform = BeliefDistribution.uniform(space)
    if isinstance(w, Params):
        post = posterior_known(uniform, evidence, w)
    else:
        post = posterior_marginal(uniform, evidence, w)
    probs = (1.0 - stay) * post.probs.copy()
    probs[space.index_of(b_prev)] += stay
    probs = (1.0 - epsilon) * probs + epsilon / len(space)
    return BeliefDistribution(space, probs)


def rational_likelihood(evidence, w: WMode, theta: float, epsilon: float,
                        space: HypothesisSpace, log_space: bool = False) -> BeliefDistribution:
    """Soft maximization over the exact posterior probabilities.

    The softmax applies to the posterior probabilities themselves; the
    ``log_space`` variant exponentiates theta * log P instead (i.e. P^theta).
    """
    uniform = BeliefDistribution.uniform(space)
    if isinstance(w, Params):
        post = posterior_known(uniform, evidence, w)
    else:
        post = posterior_marginal(uniform, evidence, w)
    if log_space:
        q = np.where(post.probs > 0.0, post.probs, 0.0) ** theta
        q[post.probs <= 0.0] = 0.0
    else:
        z = theta * post.probs
        q = np.exp(z - z.max())
    probs = (1.0 - epsilon) * q / q.sum() + epsilon / len(space)
    return BeliefDistribution(space, probs)


def baseline_likelihood(n: int) -> BeliefDistribution:
    """Uniform draw from all possible causal models."""
    return BeliefDistribution.uniform(hypothesis_space(n))


def judgment_distribution(spec: JudgmentModelSpec, space: HypothesisSpace,
                          b_prev: CausalGraph, recent, full, w: WMode) -> BeliefDistribution:
    """Distribution over the next reported belief under one model.

    Evidence scope per model: SE sees only the latest trial, NS/NS-RE the
    recent window, WSLS/Rational the full history.
    """
    kind = spec.kind
    if kind == "Baseline":
        return BeliefDistribution.uniform(space)
    if kind in ("NS", "NS-RE"):
        omega = 0.0 if kind == "NS-RE" else spec.omega
        return ns_predictive(b_prev, recent, w, spec.lam, omega, spec.epsilon, space)
    if kind == "SE":
        latest = list(full)[-1]
        return se_likelihood(b_prev, latest, spec.rho_se, spec.epsilon, space)
    if kind == "WSLS":
        trials = list(full)
        return wsls_likelihood(b_prev, trials, trials[-1], w, spec.epsilon,
                               spec.wsls_stay_complement, space)
    if kind == "Rational":
        return rational_likelihood(list(full), w, spec.theta, spec.epsilon,
                                   space, spec.rational_log_space)
    raise ValueError(f"no likelihood form for kind {kind!r}")

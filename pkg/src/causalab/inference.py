"""Exact Bayesian inference over enumerated hypothesis spaces.

Posteriors (known and grid-marginalized parameters), Shannon entropies,
expected information gain, greedy intervention choice, and the predictive
and per-edge analytics derived from a belief.

Everything here is pure and enumeration-based for n <= 5; this module is
the oracle the approximate learners are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateContextError, DegenerateEvidenceError
from .graphs import (
    EDGE_STATES,
    CausalGraph,
    HypothesisSpace,
    Intervention,
    Trial,
    is_acyclic,
    outcome_space,
)
from .noisyor import (
    ParamGrid,
    Params,
    WMode,
    evidence_likelihoods,
    marginal_evidence_likelihoods,
    space_trial_likelihoods,
)

TIE_TOL = 1e-9  # bits; argmax ties below this are broken uniformly at random


@dataclass(frozen=True)
class EvidenceLog:
    """Ordered, append-only sequence of trials."""

    trials: tuple[Trial, ...] = ()

    def append(self, trial: Trial) -> "EvidenceLog":
        return EvidenceLog(self.trials + (trial,))

    def __iter__(self):
        return iter(self.trials)

    def __len__(self):
        return len(self.trials)


@dataclass(frozen=True)
class BeliefDistribution:
    """Probability vector over the graphs of a hypothesis space."""

    space: HypothesisSpace
    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        if arr.shape != (len(self.space),):
            raise ValueError("probs must have one entry per graph")
        if arr.min() < -1e-12 or abs(arr.sum() - 1.0) > 1e-9:
            raise ValueError("probs must be a normalized distribution")
        object.__setattr__(self, "probs", arr)
        arr.flags.writeable = False

    @staticmethod
    def uniform(space: HypothesisSpace) -> "BeliefDistribution":
        return BeliefDistribution(space, np.full(len(space), 1.0 / len(space)))

    @staticmethod
    def point_mass(space: HypothesisSpace, g: CausalGraph) -> "BeliefDistribution":
        probs = np.zeros(len(space))
        probs[space.index_of(g)] = 1.0
        return BeliefDistribution(space, probs)

    def map_graph(self) -> CausalGraph:
        return self.space.graphs[int(np.argmax(self.probs))]

    def sample(self, rng) -> CausalGraph:
        return self.space.graphs[rng.choice(len(self.space), p=self.probs)]

    def entropy(self) -> float:
        return shannon_entropy(self.probs)


class GridBelief:
    """Joint weights over (graph, grid sample) pairs.

    Keeps the graph-parameter coupling that builds up as evidence arrives
    in the unknown-noise case; the plain ``BeliefDistribution`` is its
    graph marginal.
    """

    def __init__(self, space: HypothesisSpace, grid: ParamGrid, weights=None):
        self.space = space
        self.grid = grid
        if weights is None:
            weights = np.full((len(space), grid.size), 1.0 / (len(space) * grid.size))
        self.weights = np.asarray(weights, dtype=float)
        total = self.weights.sum()
        if total <= 0.0:
            raise DegenerateEvidenceError("all-zero joint weights")
        self.weights = self.weights / total

    def updated(self, trials) -> "GridBelief":
        lik = evidence_likelihoods(self.space, trials, self.grid)
        w = self.weights * lik
        if w.sum() <= 0.0:
            raise DegenerateEvidenceError("evidence impossible under belief support")
        return GridBelief(self.space, self.grid, w)

    def marginal(self) -> BeliefDistribution:
        return BeliefDistribution(self.space, self.weights.sum(axis=1))


def shannon_entropy(dist) -> float:
    """Shannon entropy in bits, with 0 * log 0 = 0."""
    p = np.asarray(dist, dtype=float)
    pos = p[p > 0.0]
    return float(-(pos * np.log2(pos)).sum())


def posterior_known(prior: BeliefDistribution, evidence, w: Params) -> BeliefDistribution:
    """Bayes update of the prior by the evidence at known parameters."""
    trials = list(evidence)
    if not trials:
        return prior
    lik = evidence_likelihoods(prior.space, trials, w)
    probs = prior.probs * lik
    total = probs.sum()
    if total <= 0.0:
        raise DegenerateEvidenceError("evidence has zero likelihood under the prior")
    return BeliefDistribution(prior.space, probs / total)


def posterior_marginal(prior: BeliefDistribution, evidence, grid: ParamGrid) -> BeliefDistribution:
    """Bayes update with the likelihood averaged over the parameter grid."""
    trials = list(evidence)
    if not trials:
        return prior
    lik = marginal_evidence_likelihoods(prior.space, trials, grid)
    probs = prior.probs * lik
    total = probs.sum()
    if total <= 0.0:
        raise DegenerateEvidenceError("evidence has zero likelihood under the prior")
    return BeliefDistribution(prior.space, probs / total)


def _joint_weights(prior, w):
    """Normalize the (belief, w-mode) combinations to joint [G, S] weights."""
    if isinstance(prior, GridBelief):
        return prior.space, prior.weights, prior.grid
    if isinstance(w, ParamGrid):
        weights = np.outer(prior.probs, np.full(w.size, 1.0 / w.size))
        return prior.space, weights, w
    return prior.space, prior.probs[:, None], w


def expected_info_gain(prior, c: Intervention, w: WMode) -> float:
    """Expected reduction (bits) in model uncertainty from intervention c.

    Exhaustive over the outcome space: sum over outcomes of the entropy
    drop, weighted by the outcome's marginal likelihood under the prior.
    ``prior`` may be a BeliefDistribution (with w Params or a fresh grid)
    or a GridBelief carrying evidence-coupled joint weights.
    """
    space, W, wmode = _joint_weights(prior, w)
    h0 = shannon_entropy(W.sum(axis=1))
    gain = 0.0
    for d in outcome_space(c):
        lik = space_trial_likelihoods(space, Trial(c, d), wmode)
        if lik.ndim == 1:
            lik = lik[:, None]
        joint = W * lik
        p_d = joint.sum()
        if p_d <= 0.0:
            continue
        post = joint.sum(axis=1) / p_d
        gain += p_d * (h0 - shannon_entropy(post))
    return float(gain)


def greedy_intervention(prior, w: WMode, candidates, rng) -> Intervention:
    """Argmax-EIG candidate; ties within TIE_TOL broken uniformly."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidates must be nonempty")
    values = np.array([expected_info_gain(prior, c, w) for c in candidates])
    best = values.max()
    tied = np.flatnonzero(values >= best - TIE_TOL)
    return candidates[tied[rng.integers(len(tied))]]


def predictive_distribution(g_or_belief, c: Intervention, w: WMode) -> dict:
    """Activation probability of each free node: {node: P(node = 1)}.

    For a single graph this is the exhaustive sum over the outcome space;
    for a belief it is the model-averaged version.
    """
    if isinstance(g_or_belief, CausalGraph):
        space = None
        n = g_or_belief.n
    else:
        space, W, w = _joint_weights(g_or_belief, w)
        n = space.n
    acc = {x: 0.0 for x in c.free_nodes}
    for d in outcome_space(c):
        if space is None:
            if isinstance(w, ParamGrid):
                from .noisyor import trial_likelihood

                p_d = float(
                    np.mean(
                        [
                            trial_likelihood(g_or_belief, Params(ws, wb), Trial(c, d))
                            for ws, wb in w.samples
                        ]
                    )
                )
            else:
                from .noisyor import trial_likelihood

                p_d = trial_likelihood(g_or_belief, w, Trial(c, d))
        else:
            lik = space_trial_likelihoods(space, Trial(c, d), w)
            if lik.ndim == 1:
                lik = lik[:, None]
            p_d = float((W * lik).sum())
        for x in c.free_nodes:
            if d.values[x] == 1:
                acc[x] += p_d
    return acc


def edge_marginals(belief: BeliefDistribution) -> np.ndarray:
    """Belief mass per pair and edge state: float64 [P, 3] over (-1, 0, +1)."""
    space = belief.space
    out = np.zeros((len(space.pairs), 3))
    for s, state in enumerate(EDGE_STATES):
        mask = space.edge_states == state  # [G, P]
        out[:, s] = belief.probs @ mask
    return out


def completion_indices(space: HypothesisSpace, pair_index: int, others) -> np.ndarray:
    """Graph indices of the <=3 acyclic completions of an other-edge context.

    ``others`` is a full edge-state sequence whose entry at ``pair_index``
    is ignored.  Entry s corresponds to edge state EDGE_STATES[s]; -1 marks
    a cyclic completion.  Raises when no completion is acyclic.
    """
    others = list(others)
    idx = np.full(3, -1, dtype=np.int64)
    for s, state in enumerate(EDGE_STATES):
        others[pair_index] = state
        candidate = tuple(others)
        if is_acyclic(space.n, candidate):
            idx[s] = space.index[CausalGraph(space.n, candidate)]
    if (idx < 0).all():
        raise DegenerateContextError("other-edge assignment admits no acyclic completion")
    return idx


def _pair_index(space: HypothesisSpace, pair) -> int:
    if isinstance(pair, int):
        return pair
    return space.pairs.index(tuple(pair))


def edge_conditional(space: HypothesisSpace, pair, others, evidence, w: WMode) -> np.ndarray:
    """P(edge state | other edges, evidence, w) over (-1, 0, +1).

    ``others`` may be a CausalGraph or an edge-state sequence; the target
    pair's own entry is ignored.  Cycle-inducing states get probability 0.
    """
    p = _pair_index(space, pair)
    states = others.edges if isinstance(others, CausalGraph) else others
    idx = completion_indices(space, p, states)
    lik = marginal_evidence_likelihoods(space, list(evidence), w)
    probs = np.zeros(3)
    for s in range(3):
        if idx[s] >= 0:
            probs[s] = lik[idx[s]]
    total = probs.sum()
    if total <= 0.0:
        # evidence impossible under every admissible completion; uniform
        # over the acyclic states keeps the distribution proper
        probs = (idx >= 0).astype(float)
        total = probs.sum()
    return probs / total

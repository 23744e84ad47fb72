"""Two-stage local intervention choice.

Stage 1 picks a question to focus on (one edge's state, one node's
descendant set, or current-vs-unconnected hypothesis) by softmax over the
focus entropies implied by recently gathered evidence.  Stage 2 picks an
intervention by softmax over the expected entropy reduction of the focus
variable, computed under a uniform pseudo-prior over the focus's
admissible local possibilities and ignoring pre-existing evidence.

The six intervention-choice likelihood models (edge, effects,
confirmation, mixed, global, baseline) are composed from these pieces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import UndefinedFocusError
from .graphs import (
    CausalGraph,
    HypothesisSpace,
    Intervention,
    Trial,
    enumerate_interventions,
    outcome_space,
)
from .inference import (
    BeliefDistribution,
    GridBelief,
    completion_indices,
    edge_conditional,
    expected_info_gain,
    posterior_known,
    shannon_entropy,
)
from .noisyor import ParamGrid, WMode, marginal_evidence_likelihoods, space_trial_likelihoods

INTERVENTION_KINDS = ("edge", "effects", "confirmation", "mixed", "global", "baseline")


@dataclass(frozen=True)
class Focus:
    """A local question: one edge, one node's effects, or confirmation."""

    kind: str
    pair: tuple | None = None
    node: int | None = None

    def __post_init__(self):
        if self.kind not in ("edge", "effects", "confirmation"):
            raise ValueError(f"unknown focus kind {self.kind!r}")
        if self.kind == "edge" and (self.pair is None or self.pair[0] >= self.pair[1]):
            raise ValueError("edge focus needs an ordered pair (i, j), i < j")
        if self.kind == "effects" and self.node is None:
            raise ValueError("effects focus needs a node")


def edge_foci(space: HypothesisSpace) -> tuple[Focus, ...]:
    return tuple(Focus("edge", pair=p) for p in space.pairs)


def effects_foci(space: HypothesisSpace) -> tuple[Focus, ...]:
    return tuple(Focus("effects", node=x) for x in range(space.n))


def mixed_foci(space: HypothesisSpace) -> tuple[Focus, ...]:
    return edge_foci(space) + effects_foci(space) + (Focus("confirmation"),)


def foci_for_kind(kind: str, space: HypothesisSpace) -> tuple[Focus, ...]:
    if kind == "edge":
        return edge_foci(space)
    if kind == "effects":
        return effects_foci(space)
    if kind == "confirmation":
        return (Focus("confirmation"),)
    if kind == "mixed":
        return mixed_foci(space)
    raise ValueError(f"kind {kind!r} has no focus set")


@dataclass(frozen=True)
class InterventionModelSpec:
    """Parameters of one intervention-choice model.

    eta is the per-focus choice sharpness (all local kinds), rho the
    focus-selection sharpness (edge/effects/mixed; may be negative), theta
    the global model's sharpness.
    """

    kind: str
    eta: float = 0.0
    rho: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in INTERVENTION_KINDS:
            raise ValueError(f"unknown intervention model kind {self.kind!r}")
        if self.eta < 0 or self.theta < 0:
            raise ValueError("eta and theta must be >= 0")

    @staticmethod
    def from_config(cfg: dict) -> "InterventionModelSpec":
        return InterventionModelSpec(
            kind=cfg["kind"],
            eta=float(cfg.get("eta", 0.0)),
            rho=float(cfg.get("rho", 0.0)),
            theta=float(cfg.get("theta", 0.0)),
        )

    def to_config(self) -> dict:
        cfg = {"kind": self.kind}
        if self.kind in ("edge", "effects", "confirmation", "mixed"):
            cfg["eta"] = self.eta
        if self.kind in ("edge", "effects", "mixed"):
            cfg["rho"] = self.rho
        if self.kind == "global":
            cfg["theta"] = self.theta
        return cfg


def _softmax(values: np.ndarray, sharpness: float) -> np.ndarray:
    z = sharpness * np.asarray(values, dtype=float)
    z = z - z.max()
    w = np.exp(z)
    return w / w.sum()


def _desc_partition(space: HypothesisSpace, node: int):
    """Partition ids of the graphs by their descendant set of ``node``."""
    keys = space.desc_masks[:, node].astype(np.int64)
    uniq, ids = np.unique(keys, return_inverse=True)
    return ids, len(uniq)


def focus_entropy(f: Focus, b: CausalGraph, evidence, w: WMode,
                  space: HypothesisSpace) -> float:
    """Current uncertainty (bits) of the focus given the recent evidence.

    Edge: entropy of the edge's conditional given b's other edges.
    Effects: entropy of the descendant-set partition of the posterior from
    a uniform model prior.  Confirmation: entropy of the two-point
    renormalized posterior over {b, unconnected}; undefined when b is
    itself unconnected.
    """
    trials = list(evidence)
    if f.kind == "edge":
        probs = edge_conditional(space, f.pair, b, trials, w)
        return shannon_entropy(probs)
    if f.kind == "effects":
        lik = marginal_evidence_likelihoods(space, trials, w)
        total = lik.sum()
        post = lik / total if total > 0 else np.full(len(space), 1.0 / len(space))
        ids, n_parts = _desc_partition(space, f.node)
        masses = np.bincount(ids, weights=post, minlength=n_parts)
        return shannon_entropy(masses)
    # confirmation
    b0 = CausalGraph.empty(space.n)
    if b == b0:
        raise UndefinedFocusError("confirmation focus undefined when belief is unconnected")
    lik = marginal_evidence_likelihoods(space, trials, w)
    pair_lik = np.array([lik[space.index_of(b)], lik[space.index_of(b0)]])
    total = pair_lik.sum()
    if total <= 0:
        pair_lik = np.array([0.5, 0.5])
        total = 1.0
    return shannon_entropy(pair_lik / total)


def focus_selection_probs(foci, entropies, rho: float) -> np.ndarray:
    """Stage-1 softmax over the (defined) foci's raw entropies in bits."""
    if len(foci) == 0:
        raise ValueError("focus set must be nonempty")
    return _softmax(np.asarray(entropies, dtype=float), rho)


def _marginal_outcome_likelihoods(space, w, c):
    """Per-outcome, per-graph likelihoods for one candidate: [D, G]."""
    rows = []
    for d in outcome_space(c):
        lik = space_trial_likelihoods(space, Trial(c, d), w)
        if lik.ndim == 2:
            lik = lik.mean(axis=1)
        rows.append(lik)
    return np.array(rows)


def _gain_from_subset(lik_dg: np.ndarray, weights: np.ndarray, part_ids=None,
                      n_parts: int = 0) -> float:
    """Expected entropy drop of a uniformly weighted local possibility set.

    ``weights`` is the pseudo-prior over graphs (zero outside the local
    set); ``part_ids`` optionally coarsens graphs into partition cells
    whose masses carry the entropy (effects focus).
    """
    if part_ids is None:
        prior_masses = weights[weights > 0]
    else:
        prior_masses = np.bincount(part_ids, weights=weights, minlength=n_parts)
    h0 = shannon_entropy(prior_masses)
    gain = 0.0
    for lik in lik_dg:
        joint = weights * lik
        p_d = joint.sum()
        if p_d <= 0:
            continue
        post = joint / p_d
        if part_ids is None:
            masses = post[weights > 0]
        else:
            masses = np.bincount(part_ids, weights=post, minlength=n_parts)
        gain += p_d * (h0 - shannon_entropy(masses))
    return float(gain)


def local_expected_gain(f: Focus, c: Intervention, b: CausalGraph, w: WMode,
                        space: HypothesisSpace) -> float:
    """Stage-2 value (bits) of intervention c for the focus.

    Uses a uniform pseudo-prior over the focus's admissible possibilities
    and no pre-existing evidence: the edge focus conditions on b's other
    edges (cycle-inducing states excluded), the effects focus partitions a
    uniform prior over all models and so is b-independent, confirmation
    weighs b against the unconnected graph.
    """
    lik_dg = _marginal_outcome_likelihoods(space, w, c)
    weights, part = _focus_pseudoprior(f, b, space)
    if part is None:
        return _gain_from_subset(lik_dg, weights)
    return _gain_from_subset(lik_dg, weights, part[0], part[1])


def _focus_pseudoprior(f: Focus, b: CausalGraph, space: HypothesisSpace):
    """Uniform pseudo-prior over graph space encoding the local possibilities."""
    G = len(space)
    if f.kind == "edge":
        p = space.pairs.index(f.pair)
        idx = completion_indices(space, p, b.edges)
        weights = np.zeros(G)
        admissible = idx[idx >= 0]
        weights[admissible] = 1.0 / len(admissible)
        return weights, None
    if f.kind == "effects":
        ids, n_parts = _desc_partition(space, f.node)
        return np.full(G, 1.0 / G), (ids, n_parts)
    b0 = CausalGraph.empty(space.n)
    if b == b0:
        raise UndefinedFocusError("confirmation focus undefined when belief is unconnected")
    weights = np.zeros(G)
    weights[space.index_of(b)] = 0.5
    weights[space.index_of(b0)] = 0.5
    return weights, None


def intervention_probs_given_focus(f: Focus, candidates, b: CausalGraph,
                                   w: WMode, eta: float,
                                   space: HypothesisSpace) -> np.ndarray:
    """Stage-2 softmax over the candidates' local expected gains."""
    gains = np.array([local_expected_gain(f, c, b, w, space) for c in candidates])
    return _softmax(gains, eta)


class LocalGainCache:
    """Memoizes stage-2 gain rows, which depend only on (focus, b context).

    Effects rows are belief-independent; edge rows depend only on the other
    edges; confirmation rows only on b.  Worth caching because fitting and
    simulation revisit the same contexts across tests and agents.
    """

    def __init__(self, space: HypothesisSpace, w: WMode, candidates=None):
        self.space = space
        self.w = w
        self.candidates = tuple(candidates) if candidates is not None else enumerate_interventions(space.n)
        self._lik: dict = {}
        self._rows: dict = {}

    def _lik_for(self, c: Intervention) -> np.ndarray:
        if c not in self._lik:
            self._lik[c] = _marginal_outcome_likelihoods(self.space, self.w, c)
        return self._lik[c]

    def gain_row(self, f: Focus, b: CausalGraph) -> np.ndarray:
        if f.kind == "edge":
            p = self.space.pairs.index(f.pair)
            others = list(b.edges)
            others[p] = 0
            key = ("edge", p, tuple(others))
        elif f.kind == "effects":
            key = ("effects", f.node)
        else:
            key = ("confirmation", b.edges)
        row = self._rows.get(key)
        if row is None:
            weights, part = _focus_pseudoprior(f, b, self.space)
            row = np.array(
                [
                    _gain_from_subset(self._lik_for(c), weights, *(part or (None, 0)))
                    for c in self.candidates
                ]
            )
            self._rows[key] = row
        return row


def intervention_choice_probs(spec: InterventionModelSpec, b: CausalGraph,
                              recent, full, w: WMode, space: HypothesisSpace,
                              cache: LocalGainCache | None = None) -> np.ndarray:
    """Choice distribution over all 3^n candidates under one model.

    Local kinds mix the stage-2 softmaxes over their foci by the stage-1
    probabilities (undefined confirmation foci are dropped and the mass
    renormalized; a pure-confirmation model with no defined focus falls
    back to uniform).  The global kind softmaxes expected information gain
    under the full-evidence posterior; baseline is uniform.
    """
    cache = cache or LocalGainCache(space, w)
    candidates = cache.candidates
    n_cand = len(candidates)
    if spec.kind == "baseline":
        return np.full(n_cand, 1.0 / n_cand)
    if spec.kind == "global":
        prior = BeliefDistribution.uniform(space)
        trials = list(full)
        if isinstance(w, ParamGrid):
            belief = GridBelief(space, w).updated(trials) if trials else GridBelief(space, w)
            eigs = np.array([expected_info_gain(belief, c, w) for c in candidates])
        else:
            post = posterior_known(prior, trials, w)
            eigs = np.array([expected_info_gain(post, c, w) for c in candidates])
        return _softmax(eigs, spec.theta)

    foci = []
    for f in foci_for_kind(spec.kind, space):
        if f.kind == "confirmation" and b == CausalGraph.empty(space.n):
            continue
        foci.append(f)
    if not foci:
        return np.full(n_cand, 1.0 / n_cand)
    entropies = [focus_entropy(f, b, recent, w, space) for f in foci]
    stage1 = focus_selection_probs(foci, entropies, spec.rho)
    probs = np.zeros(n_cand)
    for f, p_f in zip(foci, stage1):
        probs += p_f * _softmax(cache.gain_row(f, b), spec.eta)
    return probs


def intervention_model_likelihood(spec: InterventionModelSpec, observed: Intervention,
                                  b: CausalGraph, recent, full, w: WMode,
                                  space: HypothesisSpace,
                                  cache: LocalGainCache | None = None) -> float:
    """Probability the model assigns to the observed intervention choice."""
    cache = cache or LocalGainCache(space, w)
    probs = intervention_choice_probs(spec, b, recent, full, w, space, cache)
    return float(probs[cache.candidates.index(observed)])

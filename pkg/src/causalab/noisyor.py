"""Noisy-OR parameterization: activation probabilities, trial likelihoods,
forward sampling, and parameter priors/grids for the unknown-strength case.

A single (w_s, w_b) pair is shared by all edges and nodes.  A node with k
active parents activates with probability ``1 - (1 - w_b) * (1 - w_s)^k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels
from .graphs import CausalGraph, HypothesisSpace, Intervention, Outcome, Trial, topological_order

DEFAULT_GRID_SIZE = 1000
DEFAULT_GRID_SEED = 12345


@dataclass(frozen=True)
class Params:
    """Shared causal strength and background activation probabilities."""

    w_s: float
    w_b: float

    def __post_init__(self):
        if not (0.0 <= self.w_s <= 1.0 and 0.0 <= self.w_b <= 1.0):
            raise ValueError("w_s and w_b must lie in [0, 1]")


@dataclass(frozen=True)
class ParamGrid:
    """Equally weighted (w_s, w_b) samples used to marginalize unknown noise."""

    samples: np.ndarray  # float64 [S, 2], columns (w_s, w_b)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
            raise ValueError("grid needs shape [S, 2] with S >= 1")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("grid samples must lie in [0, 1]")
        object.__setattr__(self, "samples", arr)
        arr.flags.writeable = False

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    @property
    def w_s(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def w_b(self) -> np.ndarray:
        return self.samples[:, 1]


WMode = Union[Params, ParamGrid]

_PRINTED_SHAPES = {
    # (w_s density, w_b density) exactly as printed; the swapped orientation
    # exchanges the Beta shape pairs in case the printed ones were transposed.
    "UU": (("uniform", None), ("uniform", None)),
    "SU": (("beta", (2.0, 10.0)), ("uniform", None)),
    "SS": (("beta", (2.0, 10.0)), ("beta", (10.0, 2.0))),
}


@dataclass(frozen=True)
class ParamPrior:
    """Independent prior densities on w_s and w_b.

    ``kind`` is one of the named presets UU / SU / SS, or "custom" with
    explicit per-parameter specs.  ``swapped=True`` flips the Beta shape
    pairs of SU/SS (both orientations are runnable; the printed one is the
    default).
    """

    kind: str = "UU"
    swapped: bool = False
    w_s_spec: tuple = None
    w_b_spec: tuple = None

    def resolved(self) -> tuple:
        if self.kind in _PRINTED_SHAPES:
            ws, wb = _PRINTED_SHAPES[self.kind]
            if self.swapped:
                ws = _swap_beta(ws)
                wb = _swap_beta(wb)
            return ws, wb
        if self.kind == "custom":
            return self.w_s_spec, self.w_b_spec
        raise ValueError(f"unknown prior kind {self.kind!r}")

    @staticmethod
    def from_config(cfg: dict) -> "ParamPrior":
        kind = cfg.get("kind", "UU")
        if kind in _PRINTED_SHAPES:
            return ParamPrior(kind=kind, swapped=bool(cfg.get("swapped", False)))
        if kind == "beta-uniform":
            return ParamPrior(
                kind="custom",
                w_s_spec=("beta", tuple(cfg["wS"])),
                w_b_spec=("uniform", None),
            )
        if kind == "uniform-beta":
            return ParamPrior(
                kind="custom",
                w_s_spec=("uniform", None),
                w_b_spec=("beta", tuple(cfg["wB"])),
            )
        if kind == "beta-beta":
            return ParamPrior(
                kind="custom",
                w_s_spec=("beta", tuple(cfg["wS"])),
                w_b_spec=("beta", tuple(cfg["wB"])),
            )
        raise ValueError(f"unknown prior kind {kind!r}")


def _swap_beta(spec):
    if spec[0] == "beta":
        a, b = spec[1]
        return ("beta", (b, a))
    return spec


def _draw(spec, count, rng):
    family, shape = spec
    if family == "uniform":
        return rng.uniform(0.0, 1.0, size=count)
    if family == "beta":
        return rng.beta(shape[0], shape[1], size=count)
    raise ValueError(f"unknown density family {family!r}")


def draw_param_grid(prior: ParamPrior, count: int = DEFAULT_GRID_SIZE,
                    rng=None) -> ParamGrid:
    """Independent (w_s, w_b) draws from the prior; deterministic given seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if rng is None:
        rng = np.random.default_rng(DEFAULT_GRID_SEED)
    ws_spec, wb_spec = prior.resolved()
    samples = np.column_stack([_draw(ws_spec, count, rng), _draw(wb_spec, count, rng)])
    return ParamGrid(samples)


def node_activation_prob(active_parent_count: int, w: Params) -> float:
    """P(node = 1) with k active parents: 1 - (1-w_b)(1-w_s)^k."""
    return 1.0 - (1.0 - w.w_b) * (1.0 - w.w_s) ** active_parent_count


def activation_table(n: int, w: Params) -> np.ndarray:
    """Activation probability indexed by active-parent count 0..n-1."""
    counts = np.arange(n)
    return 1.0 - (1.0 - w.w_b) * (1.0 - w.w_s) ** counts


def grid_activation_table(n: int, grid: ParamGrid) -> np.ndarray:
    """Per-grid-sample activation table: float64 [S, n]."""
    counts = np.arange(n)[None, :]
    return 1.0 - (1.0 - grid.w_b[:, None]) * (1.0 - grid.w_s[:, None]) ** counts


def trial_likelihood(g: CausalGraph, w: Params, t: Trial) -> float:
    """Probability of the trial's outcome under graph g.

    Product over free nodes of P(value | active parents); parents read
    their values from the outcome (fixed nodes carry their fixed values).
    """
    act = activation_table(g.n, w)
    values = t.outcome.values
    lik = 1.0
    for x in t.intervention.free_nodes:
        k = sum(values[p] for p in g.parents(x))
        p1 = act[k]
        lik *= p1 if values[x] == 1 else 1.0 - p1
    return lik


def sample_outcome(g: CausalGraph, w: Params, c: Intervention, rng) -> Outcome:
    """Draw one outcome; fixed nodes keep their fixed values, free nodes
    sample in topological order so parent states are resolved first."""
    act = activation_table(g.n, w)
    values = [0] * g.n
    free = set(c.free_nodes)
    for x in c.fixed_nodes:
        values[x] = c.fixed_value(x)
    for x in topological_order(g.n, g.edges):
        if x not in free:
            continue
        k = sum(values[p] for p in g.parents(x))
        values[x] = 1 if rng.random() < act[k] else 0
    return Outcome(tuple(values))


# -- vectorized sweeps over a hypothesis space --------------------------------

def _trial_arrays(trial: Trial):
    values = np.array(trial.outcome.values, dtype=np.int8)
    free = np.array([s == 0 for s in trial.intervention.settings], dtype=np.bool_)
    active_bits = 0
    for i, v in enumerate(trial.outcome.values):
        if v:
            active_bits |= 1 << i
    return active_bits, values, free


def space_trial_likelihoods(space: HypothesisSpace, trial: Trial, w: WMode) -> np.ndarray:
    """Likelihood of one trial under every graph: [G] (Params) or [G, S] (grid)."""
    active_bits, values, free = _trial_arrays(trial)
    if isinstance(w, Params):
        act = activation_table(space.n, w)
        return _kernels.trial_likelihoods(space.parent_masks, active_bits, values, free, act)
    act_grid = grid_activation_table(space.n, w)
    return _kernels.grid_trial_likelihoods(space.parent_masks, active_bits, values, free, act_grid)


def evidence_likelihoods(space: HypothesisSpace, trials, w: WMode) -> np.ndarray:
    """Joint likelihood of a trial sequence: [G] or [G, S] (i.i.d. product)."""
    if isinstance(w, Params):
        lik = np.ones(len(space))
    else:
        lik = np.ones((len(space), w.size))
    for t in trials:
        lik = lik * space_trial_likelihoods(space, t, w)
    return lik


def marginal_evidence_likelihoods(space: HypothesisSpace, trials, w: WMode) -> np.ndarray:
    """Per-graph evidence likelihood, grid-averaged when w is a grid: [G]."""
    lik = evidence_likelihoods(space, trials, w)
    if lik.ndim == 2:
        return lik.mean(axis=1)
    return lik

"""Hot numeric kernels: per-graph likelihood sweeps, edge-resampling
transition matrices, their Poisson-weighted powers, and Monte-Carlo search
chains.

Every kernel exists twice: a vectorized pure-numpy implementation
(``*_np``) and a numba ``@njit`` loop version (``*_nb``).  The public,
unsuffixed names point at the numba builds unless numba is unavailable or
``CAUSALAB_DISABLE_NUMBA=1`` is set, in which case the numpy path is used.
``benchmarks/bench_kernels.py`` times the two side by side.

Shapes and conventions:
  G graphs, N nodes, P node pairs, S parameter-grid samples.
  ``parent_masks`` uint8 [G, N]: bitmask of each node's parents.
  ``neighbors`` int32 [G, P, 3]: index of the graph reached by setting
  pair p to edge state (-1, 0, +1); -1 marks a cyclic (forbidden) variant.
  ``act`` float64 [N]: activation probability by active-parent count.
"""

from __future__ import annotations

import os

import numpy as np

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)

DISABLE_ENV = "CAUSALAB_DISABLE_NUMBA"


def _numba_enabled() -> bool:
    if os.environ.get(DISABLE_ENV, "").strip() in ("1", "true", "yes"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_enabled()


# -- trial likelihoods --------------------------------------------------------

def trial_likelihoods_np(parent_masks, active_bits, values, free, act):
    """Likelihood of one trial under every graph: float64 [G].

    Free nodes contribute P(value | #active parents); fixed nodes factor 1.
    """
    counts = _POPCOUNT[parent_masks & np.uint8(active_bits)]
    p1 = act[counts]
    factors = np.where(values[None, :] == 1, p1, 1.0 - p1)
    factors[:, ~free] = 1.0
    return factors.prod(axis=1)


def grid_trial_likelihoods_np(parent_masks, active_bits, values, free, act_grid):
    """Per-graph, per-grid-sample likelihood of one trial: float64 [G, S]."""
    counts = _POPCOUNT[parent_masks & np.uint8(active_bits)]
    G = parent_masks.shape[0]
    S = act_grid.shape[0]
    lik = np.ones((G, S))
    for x in range(parent_masks.shape[1]):
        if not free[x]:
            continue
        px = act_grid[:, counts[:, x]].T  # [G, S]
        lik *= px if values[x] == 1 else 1.0 - px
    return lik


def _trial_likelihoods_loop(parent_masks, active_bits, values, free, act):
    G, N = parent_masks.shape
    out = np.ones(G)
    for g in range(G):
        lik = 1.0
        for x in range(N):
            if not free[x]:
                continue
            k = 0
            m = parent_masks[g, x] & active_bits
            while m:
                k += m & 1
                m >>= 1
            p1 = act[k]
            lik *= p1 if values[x] == 1 else 1.0 - p1
        out[g] = lik
    return out


def _grid_trial_likelihoods_loop(parent_masks, active_bits, values, free, act_grid):
    G, N = parent_masks.shape
    S = act_grid.shape[0]
    out = np.ones((G, S))
    for g in range(G):
        for x in range(N):
            if not free[x]:
                continue
            k = 0
            m = parent_masks[g, x] & active_bits
            while m:
                k += m & 1
                m >>= 1
            if values[x] == 1:
                for s in range(S):
                    out[g, s] *= act_grid[s, k]
            else:
                for s in range(S):
                    out[g, s] *= 1.0 - act_grid[s, k]
    return out


# -- resampling weights and transition matrices -------------------------------

def _triple_weights(lik, idx, omega):
    """Resampling distribution over the <=3 variants of one pair.

    Weight of state e is lik[variant_e]^omega, zero for cyclic variants and
    for zero-likelihood variants (the 0^0 := 0 convention keeps excluded
    states excluded at omega=0).  Computed in log space so large omega does
    not underflow.  All-zero rows fall back to uniform over the acyclic
    variants, which is unreachable for parameters strictly inside (0, 1).
    """
    w = np.zeros(3)
    best = -np.inf
    for s in range(3):
        if idx[s] >= 0 and lik[idx[s]] > 0.0:
            lv = np.log(lik[idx[s]])
            if lv > best:
                best = lv
    if best == -np.inf:
        total = 0.0
        for s in range(3):
            if idx[s] >= 0:
                w[s] = 1.0
                total += 1.0
        return w / total
    total = 0.0
    for s in range(3):
        if idx[s] >= 0 and lik[idx[s]] > 0.0:
            w[s] = np.exp(omega * (np.log(lik[idx[s]]) - best))
            total += w[s]
    return w / total


def transition_matrix_np(lik, neighbors, omega):
    """Single-edge resampling kernel averaged over pairs: float64 [G, G]."""
    G, P, _ = neighbors.shape
    valid = neighbors >= 0
    lv = np.where(valid, lik[np.where(valid, neighbors, 0)], 0.0)  # [G, P, 3]
    pos = lv > 0.0
    with np.errstate(divide="ignore"):
        logv = np.where(pos, np.log(np.where(pos, lv, 1.0)), -np.inf)
    best = np.max(np.where(pos, logv, -np.inf), axis=2, keepdims=True)
    w = np.where(pos, np.exp(omega * (logv - best)), 0.0)
    totals = w.sum(axis=2, keepdims=True)
    dead = (totals == 0.0)[..., 0]
    if dead.any():
        w[dead] = valid[dead].astype(float)
        totals = w.sum(axis=2, keepdims=True)
    w /= totals
    R = np.zeros((G, G))
    rows = np.repeat(np.arange(G), P * 3)
    cols = np.where(valid, neighbors, 0).ravel()
    np.add.at(R, (rows, cols), (w / P).ravel())
    return R


def _transition_matrix_loop(lik, neighbors, omega):
    G, P, _ = neighbors.shape
    R = np.zeros((G, G))
    for g in range(G):
        for p in range(P):
            w = _triple_weights(lik, neighbors[g, p], omega)
            for s in range(3):
                if neighbors[g, p, s] >= 0:
                    R[g, neighbors[g, p, s]] += w[s] / P
    return R


def row_power_stack_np(R, start, kmax):
    """Rows of R^k from a point mass at ``start``: float64 [kmax+1, G]."""
    G = R.shape[0]
    rows = np.empty((kmax + 1, G))
    v = np.zeros(G)
    v[start] = 1.0
    rows[0] = v
    for k in range(1, kmax + 1):
        v = v @ R
        rows[k] = v
    return rows


def _row_power_stack_loop(R, start, kmax):
    G = R.shape[0]
    rows = np.zeros((kmax + 1, G))
    rows[0, start] = 1.0
    for k in range(1, kmax + 1):
        for j in range(G):
            acc = 0.0
            for i in range(G):
                acc += rows[k - 1, i] * R[i, j]
            rows[k, j] = acc
    return rows


# -- Monte-Carlo search chains ------------------------------------------------

def _search_endpoints_loop(lik, neighbors, omega, k_draws, start, seed):
    """Endpoint of a k-step single-edge resampling search, per run."""
    np.random.seed(seed)
    P = neighbors.shape[1]
    runs = k_draws.shape[0]
    out = np.empty(runs, dtype=np.int64)
    for r in range(runs):
        g = start
        for _ in range(k_draws[r]):
            p = np.random.randint(0, P)
            w = _triple_weights(lik, neighbors[g, p], omega)
            u = np.random.random()
            acc = 0.0
            for s in range(3):
                acc += w[s]
                if u < acc:
                    g = neighbors[g, p, s]
                    break
        out[r] = g
    return out


def search_endpoints_np(lik, neighbors, omega, k_draws, start, seed):
    rng = np.random.default_rng(seed)
    P = neighbors.shape[1]
    out = np.empty(len(k_draws), dtype=np.int64)
    for r, k in enumerate(k_draws):
        g = start
        for _ in range(k):
            p = rng.integers(P)
            w = _triple_weights(lik, neighbors[g, p], omega)
            g = neighbors[g, p, rng.choice(3, p=w)]
        out[r] = g
    return out


def _chain_visits_loop(lik, neighbors, omega, n_steps, start, seed):
    """Visit counts of a single n_steps-long resampling chain."""
    np.random.seed(seed)
    G, P, _ = neighbors.shape
    visits = np.zeros(G, dtype=np.int64)
    g = start
    for _ in range(n_steps):
        p = np.random.randint(0, P)
        w = _triple_weights(lik, neighbors[g, p], omega)
        u = np.random.random()
        acc = 0.0
        for s in range(3):
            acc += w[s]
            if u < acc:
                g = neighbors[g, p, s]
                break
        visits[g] += 1
    return visits


def chain_visits_np(lik, neighbors, omega, n_steps, start, seed):
    rng = np.random.default_rng(seed)
    G, P, _ = neighbors.shape
    visits = np.zeros(G, dtype=np.int64)
    g = start
    for _ in range(n_steps):
        p = rng.integers(P)
        w = _triple_weights(lik, neighbors[g, p], omega)
        g = neighbors[g, p, rng.choice(3, p=w)]
        visits[g] += 1
    return visits


# -- dispatch -----------------------------------------------------------------

if NUMBA_ENABLED:
    from numba import njit

    _jit = njit(cache=True, fastmath=False)
    _triple_weights = _jit(_triple_weights)
    trial_likelihoods_nb = _jit(_trial_likelihoods_loop)
    grid_trial_likelihoods_nb = _jit(_grid_trial_likelihoods_loop)
    transition_matrix_nb = _jit(_transition_matrix_loop)
    row_power_stack_nb = _jit(_row_power_stack_loop)
    search_endpoints_nb = _jit(_search_endpoints_loop)
    chain_visits_nb = _jit(_chain_visits_loop)

    def row_power_stack(R, start, kmax):
        # loop version wins on small spaces, BLAS matvec on large ones
        if R.shape[0] <= 64:
            return row_power_stack_nb(R, start, kmax)
        return row_power_stack_np(R, start, kmax)

    trial_likelihoods = trial_likelihoods_nb
    grid_trial_likelihoods = grid_trial_likelihoods_nb
    transition_matrix = transition_matrix_nb
    search_endpoints = search_endpoints_nb
    chain_visits = chain_visits_nb
else:
    trial_likelihoods = trial_likelihoods_np
    grid_trial_likelihoods = grid_trial_likelihoods_np
    transition_matrix = transition_matrix_np
    row_power_stack = row_power_stack_np
    search_endpoints = search_endpoints_np
    chain_visits = chain_visits_np


def using_numba() -> bool:
    return NUMBA_ENABLED

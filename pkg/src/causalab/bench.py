"""Benchmark the jit-compiled kernels against their numpy fallbacks.

Times the four hot paths on both hypothesis-space sizes used in practice
(25 graphs / 3 nodes and 543 graphs / 4 nodes): per-trial likelihood
sweeps (scalar and grid), transition-matrix assembly, matrix-power
stacks, and Monte-Carlo search chains.
"""

import time

import numpy as np

from . import _kernels
from .graphs import Intervention, Outcome, Trial, hypothesis_space
from .noisyor import Params, space_trial_likelihoods


def _time(fn, *args, repeat=5, number=20):
    fn(*args)  # warm any jit compilation
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def run_benchmarks(verbose: bool = True) -> dict:
    results = {}
    rng = np.random.default_rng(0)
    for n in (3, 4):
        space = hypothesis_space(n)
        G = len(space)
        trial = Trial(
            Intervention(n, (1,) + (0,) * (n - 1)),
            Outcome((1,) * n),
        )
        lik = space_trial_likelihoods(space, trial, Params(0.8, 0.1))
        act = np.linspace(0.1, 0.9, n)
        act_grid = rng.random((1000, n))
        values = np.array(trial.outcome.values, dtype=np.int8)
        free = np.array([s == 0 for s in trial.intervention.settings], dtype=np.bool_)
        R = _kernels.transition_matrix_np(lik, space.neighbors, 5.0)
        k_draws = rng.poisson(1.5, size=2000).clip(0, 50)

        cases = {
            f"trial_likelihoods_G{G}": (
                (_kernels.trial_likelihoods_np, _kernels.__dict__.get("trial_likelihoods_nb")),
                (space.parent_masks, 3, values, free, act),
            ),
            f"grid_likelihoods_G{G}xS1000": (
                (_kernels.grid_trial_likelihoods_np,
                 _kernels.__dict__.get("grid_trial_likelihoods_nb")),
                (space.parent_masks, 3, values, free, act_grid),
            ),
            f"transition_matrix_G{G}": (
                (_kernels.transition_matrix_np,
                 _kernels.__dict__.get("transition_matrix_nb")),
                (lik, space.neighbors, 5.0),
            ),
            f"row_power_stack_G{G}": (
                (_kernels.row_power_stack_np,
                 _kernels.__dict__.get("row_power_stack_nb")),
                (R, 0, 50),
            ),
            f"search_endpoints_G{G}x2000": (
                (_kernels.search_endpoints_np,
                 _kernels.__dict__.get("search_endpoints_nb")),
                (lik, space.neighbors, 10.0, k_draws, 0, 7),
            ),
        }
        for name, ((np_fn, nb_fn), args) in cases.items():
            entry = {"numpy_s": _time(np_fn, *args)}
            if nb_fn is not None:
                entry["numba_s"] = _time(nb_fn, *args)
                entry["speedup"] = entry["numpy_s"] / entry["numba_s"]
            results[name] = entry
    if verbose:
        width = max(len(k) for k in results)
        header = f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}"
        print(header)
        print("-" * len(header))
        for name, entry in results.items():
            numba_s = entry.get("numba_s")
            print(
                f"{name:<{width}}  {entry['numpy_s'] * 1e6:>8.1f}us  "
                + (f"{numba_s * 1e6:>8.1f}us  {entry['speedup']:>7.2f}x"
                   if numba_s is not None else f"{'-':>10}  {'-':>8}")
            )
    return results


if __name__ == "__main__":
    run_benchmarks()

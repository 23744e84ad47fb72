#!/usr/bin/env python3
"""Time the numba kernels against the pure-numpy fallbacks.

Run directly or via `causalab bench`.  Set CAUSALAB_DISABLE_NUMBA=1 to
check which implementations the package itself would pick up.
"""

from causalab.bench import run_benchmarks

if __name__ == "__main__":
    run_benchmarks()

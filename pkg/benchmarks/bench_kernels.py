#!/usr/bin/env python3
"""Time the numba-jitted kernels against their pure-numpy fallbacks.

Run with the default environment to exercise the jitted path, or with
S2T_NO_NUMBA=1 to confirm the fallback wires up. This script imports both
implementations directly so one process covers both columns.
"""

import time

import numpy as np

from s2t import kernels as K


def bench(label, fn, *args, repeat=200, warmup=3):
    for _ in range(warmup):
        fn(*args)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def jitted(name):
    """The numba variant when compiled, else the numpy reference."""
    return getattr(K, f"_{name}_nb", getattr(K, f"{name}_np"))


def main():
    rng = np.random.default_rng(0)
    rows = []

    x = rng.normal(size=(4096, 56)).astype(np.float32)
    g = rng.normal(size=(4096, 56)).astype(np.float32)
    p = K.softmax_rows_np(x)
    rows.append(("softmax_rows (4096x56)",
                 bench("sm", jitted("softmax_rows"), x),
                 bench("sm", K.softmax_rows_np, x)))
    rows.append(("softmax_grad_rows",
                 bench("smg", jitted("softmax_grad_rows"), p, g),
                 bench("smg", K.softmax_grad_rows_np, p, g)))

    gain = np.ones(56, dtype=np.float32)
    bias = np.zeros(56, dtype=np.float32)
    rows.append(("layer_norm_rows (4096x56)",
                 bench("ln", jitted("layer_norm_rows"), x, gain, bias,
                       np.float32(1e-5)),
                 bench("ln", K.layer_norm_rows_np, x, gain, bias,
                       np.float32(1e-5))))

    n = 500_000
    theta = rng.normal(size=n).astype(np.float32)
    grad = rng.normal(size=n).astype(np.float32)
    m = np.zeros(n, dtype=np.float32)
    v = np.zeros(n, dtype=np.float32)
    rows.append(("adam_step (500k params)",
                 bench("ad", jitted("adam_step"), theta, grad, m, v,
                       8e-4, 0.9, 0.999, 1e-8, 0.1, 0.001, repeat=50),
                 bench("ad", K.adam_step_np, theta, grad, m, v,
                       8e-4, 0.9, 0.999, 1e-8, 0.1, 0.001, repeat=50)))

    a = rng.integers(0, 26, size=60).astype(np.int64)
    b = rng.integers(0, 26, size=64).astype(np.int64)
    rows.append(("levenshtein (60x64 chars)",
                 bench("lev", jitted("levenshtein_codes"), a, b, repeat=500),
                 bench("lev", K.levenshtein_codes_np, a, b, repeat=20)))

    pts = np.cumsum(rng.normal(size=(120, 2)), axis=0)
    rows.append(("resample_polyline (120->64)",
                 bench("rs", jitted("resample_polyline"), pts, 64, repeat=2000),
                 bench("rs", K.resample_polyline_np, pts, 64, repeat=2000)))

    path = "numba" if K.USING_NUMBA else "numpy only (S2T_NO_NUMBA or no numba)"
    print(f"kernel path: {path}")
    print("(production selection keeps numpy for softmax forward and adam, "
          "where the vectorized form wins)\n")
    print(f"{'kernel':34s} {'jitted':>12s} {'numpy ref':>12s} {'speedup':>9s}")
    for label, sel, ref in rows:
        print(f"{label:34s} {sel * 1e6:10.1f}us {ref * 1e6:10.1f}us {ref / sel:8.2f}x")


if __name__ == "__main__":
    main()

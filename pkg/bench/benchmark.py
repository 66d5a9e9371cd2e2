#!/usr/bin/env python3
"""Benchmark the numba-JIT kernels against the plain-numpy fallback.

The same loop-form source backs both paths (see nmrqc._kernels), so this
measures exactly the JIT speedup on the package's hot spots: stacked
Hermitian propagators, unitary chains, and the GRAPE fidelity+gradient
pass. A full grape_optimize run is timed as the end-to-end number.

Usage: python bench/benchmark.py [--segments N] [--repeats R]
The active path honours NMRQC_NO_NUMBA; both paths are always timed here
by calling the decorated and undecorated functions directly.
"""

import argparse
import time

import numpy as np

from nmrqc import _kernels
from nmrqc.control import Gate, GrapeConfig, gate_matrix, grape_optimize
from nmrqc.spinsys import control_operators, internal_hamiltonian, preset


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--segments", type=int, default=100)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    cfg = preset("triangulum")
    h0 = internal_hamiltonian(cfg).astype(np.complex128)
    controls, _ = control_operators(cfg)
    controls = controls.astype(np.complex128)
    rng = np.random.default_rng(0)
    u = rng.uniform(-1e3, 1e3, size=(args.segments, controls.shape[0]))
    hs = np.ascontiguousarray(h0[np.newaxis] + np.tensordot(u, controls, axes=(1, 0)))
    dt = 1.5e-3 / args.segments
    target = gate_matrix(Gate("X90", (1,)), 3)
    tdag = np.ascontiguousarray(target.conj().T)

    if not _kernels.NUMBA_ENABLED:
        print("numba path unavailable (NMRQC_NO_NUMBA set or numba missing); "
              "only the numpy path is timed.")

    pairs = [
        ("segment_propagators",
         lambda: _kernels.segment_propagators(hs, dt),
         lambda: _kernels._segment_propagators(hs, dt)),
    ]
    props = _kernels._segment_propagators(hs, dt)
    pairs += [
        ("unitary_chain",
         lambda: _kernels.unitary_chain(props),
         lambda: _kernels._unitary_chain(props)),
        ("grape_fidelity_and_gradient",
         lambda: _kernels.grape_fidelity_and_gradient(props, tdag, controls, dt),
         lambda: _kernels._grape_fidelity_and_gradient(props, tdag, controls, dt)),
    ]

    print(f"{'kernel':32s} {'numpy (ms)':>12s} {'jit (ms)':>12s} {'speedup':>9s}")
    for name, jit_fn, py_fn in pairs:
        if _kernels.NUMBA_ENABLED:
            jit_fn()  # compile outside the timing loop
            t_jit = timeit(jit_fn, args.repeats) * 1e3
        else:
            t_jit = float("nan")
        t_py = timeit(py_fn, args.repeats) * 1e3
        ratio = t_py / t_jit if t_jit == t_jit else float("nan")
        print(f"{name:32s} {t_py:12.3f} {t_jit:12.3f} {ratio:8.1f}x")

    gcfg = GrapeConfig(segments=args.segments, dt_s=dt, max_iters=30,
                       target_fidelity=0.9999)
    t0 = time.perf_counter()
    result = grape_optimize(target, cfg, gcfg, seed=1)
    print(f"\ngrape_optimize 30 iterations ({'jit' if _kernels.NUMBA_ENABLED else 'numpy'} "
          f"path): {time.perf_counter() - t0:.2f} s, F = {result.final_fidelity:.4f}")


if __name__ == "__main__":
    main()

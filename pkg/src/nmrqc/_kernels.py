"""Hot numeric kernels, JIT-compiled with numba when available.

The implementations are written in loop form so the exact same source runs
under numba's nopython mode and as plain numpy (the loops are over segment
counts; the per-segment work is dense linear algebra either way). Setting
``NMRQC_NO_NUMBA=1`` in the environment forces the plain-numpy path, which
is also used automatically when numba is not importable.

``bench/benchmark.py`` times the two paths against each other.
"""

import os

import numpy as np


def numba_disabled_by_env() -> bool:
    return os.environ.get("NMRQC_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")


def _segment_propagators(h_stack, dt):
    """exp(-i * h * dt) for a stack of Hermitian matrices, via eigendecomposition.

    h_stack: (N, d, d) complex Hermitian, rad/s. Returns (N, d, d) unitaries.
    """
    n, d, _ = h_stack.shape
    out = np.empty((n, d, d), dtype=np.complex128)
    for j in range(n):
        w, v = np.linalg.eigh(h_stack[j])
        out[j] = (v * np.exp(-1j * w * dt)) @ v.conj().T
    return out


def _unitary_chain(props):
    """Time-ordered product U_N ... U_2 U_1 of a propagator stack."""
    n, d, _ = props.shape
    acc = np.eye(d, dtype=np.complex128)
    for j in range(n):
        acc = props[j] @ acc
    return acc


def _chain_fidelity(props, target_dag):
    """|Tr(target^dag U_N...U_1)|^2 / d^2 without keeping partial products."""
    n, d, _ = props.shape
    acc = np.eye(d, dtype=np.complex128)
    for j in range(n):
        acc = props[j] @ acc
    ov = np.sum(target_dag * acc.T)
    return (ov.real * ov.real + ov.imag * ov.imag) / (d * d)


def _grape_fidelity_and_gradient(props, target_dag, controls, dt):
    """Gate fidelity and its first-order gradient w.r.t. segment amplitudes.

    props:      (N, d, d) segment propagators.
    target_dag: (d, d) conjugate transpose of the target unitary.
    controls:   (M, d, d) Hermitian control generators, rad/s per unit amplitude.
    dt:         segment duration, s.

    Returns (fidelity, grad) with grad shaped (N, M). The gradient treats
    dU_j/du ~ (-i dt B) U_j, first order in dt, which is what a central
    finite difference reproduces for small enough dt * ||B||.
    """
    n, d, _ = props.shape
    m = controls.shape[0]
    fwd = np.empty((n, d, d), dtype=np.complex128)
    acc = np.eye(d, dtype=np.complex128)
    for j in range(n):
        acc = props[j] @ acc
        fwd[j] = acc
    ov = np.sum(target_dag * acc.T)
    fid = (ov.real * ov.real + ov.imag * ov.imag) / (d * d)
    grad = np.empty((n, m), dtype=np.float64)
    scale = 2.0 / (d * d)
    back = target_dag.copy()
    for j in range(n - 1, -1, -1):
        y = fwd[j] @ back
        for k in range(m):
            tr = np.sum(controls[k].T * y)
            grad[j, k] = scale * (np.conj(ov) * (-1j * dt) * tr).real
        back = back @ props[j]
    return fid, grad


NUMBA_ENABLED = False
if not numba_disabled_by_env():
    try:
        from numba import njit
    except ImportError:
        njit = None
    if njit is not None:
        NUMBA_ENABLED = True
        segment_propagators = njit(cache=True)(_segment_propagators)
        unitary_chain = njit(cache=True)(_unitary_chain)
        chain_fidelity = njit(cache=True)(_chain_fidelity)
        grape_fidelity_and_gradient = njit(cache=True)(_grape_fidelity_and_gradient)

if not NUMBA_ENABLED:
    segment_propagators = _segment_propagators
    unitary_chain = _unitary_chain
    chain_fidelity = _chain_fidelity
    grape_fidelity_and_gradient = _grape_fidelity_and_gradient

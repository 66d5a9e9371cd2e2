"""Quantum-state formalism: kets, density matrices, Pauli algebra, fidelities.

Conventions used throughout the package:

* qubit 1 is the leftmost tensor factor, i.e. the most significant bit of
  the computational-basis index (|00>, |01>, |10>, |11> ordering);
* qubit indices in public APIs are 1-based, matching spin numbering;
* spin operators are I_a = sigma_a / 2 with hbar = 1.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

import numpy as np

from .errors import ValidationError

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-9
PURITY_TOL = 1e-9

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI = {"I": SIGMA_I, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}


def _qubit_count(dim: int, what: str) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim or n < 1:
        raise ValidationError(f"{what} dimension {dim} is not a power of two")
    return n


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two operators or two column vectors.

    The first argument becomes the leftmost (qubit-1) factor. Mixing a
    vector with a matrix is rejected.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != b.ndim or a.ndim not in (1, 2):
        raise ValidationError("tensor expects two vectors or two matrices")
    return np.kron(a, b)


def tensor_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.asarray(factors[0])
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f))
    return out


def embed_single(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Embed a 2x2 operator on `qubit` (1-based) into the n-qubit space."""
    if not 1 <= qubit <= n:
        raise ValidationError(f"qubit {qubit} out of range 1..{n}")
    return tensor_all([op if k == qubit else SIGMA_I for k in range(1, n + 1)])


def pauli_string_matrix(label: str) -> np.ndarray:
    """Matrix of a Pauli product string such as "XZ" or "IYI"."""
    try:
        return tensor_all([PAULI[c] for c in label])
    except KeyError as exc:
        raise ValidationError(f"bad Pauli letter in {label!r}") from exc


def all_pauli_strings(n: int) -> list[str]:
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n)]


class Ket:
    """Normalized pure-state vector over n qubits."""

    __slots__ = ("amplitudes", "n")

    def __init__(self, amplitudes: Iterable[complex]):
        amps = np.asarray(list(amplitudes) if not isinstance(amplitudes, np.ndarray) else amplitudes,
                          dtype=complex).reshape(-1)
        self.n = _qubit_count(amps.size, "ket")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > HERMITICITY_TOL:
            raise ValidationError(f"ket norm^2 = {norm}, not 1")
        amps.setflags(write=False)
        self.amplitudes = amps

    @classmethod
    def from_bits(cls, bits: str) -> "Ket":
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(amps)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self):
        return f"Ket(n={self.n})"


class DensityMatrix:
    """2^n x 2^n Hermitian, unit-trace, positive-semidefinite state matrix."""

    __slots__ = ("matrix", "n")

    def __init__(self, matrix: np.ndarray, validate: bool = True):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("density matrix must be square")
        self.n = _qubit_count(m.shape[0], "density matrix")
        if validate:
            herm = float(np.max(np.abs(m - m.conj().T)))
            if herm > HERMITICITY_TOL:
                raise ValidationError(f"density matrix not Hermitian (deviation {herm:.2e})")
            tr = complex(np.trace(m))
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValidationError(f"density matrix trace {tr}, not 1")
            lo = float(np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))))
            if lo < -EIGENVALUE_TOL:
                raise ValidationError(f"density matrix has negative eigenvalue {lo:.2e}")
        m.setflags(write=False)
        self.matrix = m

    @classmethod
    def basis(cls, n: int, state: Union[int, str]) -> "DensityMatrix":
        """|b><b| for a computational basis label ("01") or index."""
        idx = int(state, 2) if isinstance(state, str) else int(state)
        m = np.zeros((2**n, 2**n), dtype=complex)
        m[idx, idx] = 1.0
        return cls(m, validate=False)

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(np.eye(2**n, dtype=complex) / 2**n, validate=False)

    @classmethod
    def from_ket(cls, ket: Union[Ket, np.ndarray]) -> "DensityMatrix":
        amps = ket.amplitudes if isinstance(ket, Ket) else np.asarray(ket, dtype=complex).reshape(-1)
        return cls(np.outer(amps, amps.conj()))

    def evolved(self, u: np.ndarray, validate: bool = False) -> "DensityMatrix":
        """U rho U^dag. Unitarity of `u` is the caller's responsibility."""
        return DensityMatrix(u @ self.matrix @ u.conj().T, validate=validate)

    def probabilities(self) -> dict[str, float]:
        """Computational-basis populations, keyed by bit label."""
        diag = np.real(np.diag(self.matrix))
        return {format(i, f"0{self.n}b"): float(p) for i, p in enumerate(diag)}

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def is_pure(self) -> bool:
        return abs(self.purity() - 1.0) <= PURITY_TOL

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ op))

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "re": np.real(self.matrix).tolist(),
            "im": np.imag(self.matrix).tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "DensityMatrix":
        try:
            m = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
            n = int(d["n"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad density-matrix JSON: {exc}") from exc
        if m.shape != (2**n, 2**n):
            raise ValidationError(f"density-matrix JSON shape {m.shape} != 2^{n}")
        return cls(m)

    def __repr__(self):
        return f"DensityMatrix(n={self.n}, purity={self.purity():.6f})"


def _as_matrix(state) -> tuple[np.ndarray, bool]:
    """Normalize a Ket / DensityMatrix / ndarray into (matrix-or-vector, is_vector)."""
    if isinstance(state, Ket):
        return state.amplitudes, True
    if isinstance(state, DensityMatrix):
        return state.matrix, False
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return arr, True
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return arr, False
    raise ValidationError("state must be a vector or a square matrix")


def partial_trace(rho: DensityMatrix, keep: Union[int, Iterable[int]]) -> DensityMatrix:
    """Reduced state over the kept qubits (1-based indices, sorted order)."""
    keep_set = {keep} if isinstance(keep, int) else set(keep)
    if not keep_set:
        raise ValidationError("keep set must be nonempty")
    n = rho.n
    if any(not 1 <= q <= n for q in keep_set):
        raise ValidationError(f"keep indices {sorted(keep_set)} out of range 1..{n}")
    kept = sorted(keep_set)
    traced = [q for q in range(1, n + 1) if q not in keep_set]
    t = rho.matrix.reshape((2,) * (2 * n))
    # row axis of qubit q is q-1, column axis is n+q-1
    for num_done, q in enumerate(traced):
        ax = q - 1 - sum(1 for p in traced[:num_done] if p < q)
        cur_n = n - num_done
        t = np.trace(t, axis1=ax, axis2=cur_n + ax)
    d = 2 ** len(kept)
    return DensityMatrix(t.reshape(d, d))


def pauli_expand(rho: DensityMatrix) -> dict[str, float]:
    """Coefficients c_P = Tr(rho P) for every n-fold Pauli string.

    The all-identity coefficient equals Tr(rho) = 1. Coefficients are real
    for Hermitian input; the real part is returned.
    """
    return {
        label: float(np.real(np.trace(rho.matrix @ pauli_string_matrix(label))))
        for label in all_pauli_strings(rho.n)
    }


def pauli_reconstruct(coefficients: Mapping[str, float]) -> DensityMatrix:
    """rho = 2^-n * sum_P c_P P. Missing strings are treated as zero.

    The identity coefficient must be 1 (unit trace); it defaults to 1 when
    the all-identity string is absent from the mapping.
    """
    if not coefficients:
        raise ValidationError("empty coefficient mapping")
    n = len(next(iter(coefficients)))
    ident = "I" * n
    c_ident = float(coefficients.get(ident, 1.0))
    if abs(c_ident - 1.0) > TRACE_TOL:
        raise ValidationError(f"identity coefficient {c_ident} implies trace != 1")
    m = np.eye(2**n, dtype=complex)
    for label, c in coefficients.items():
        if len(label) != n:
            raise ValidationError(f"string {label!r} has wrong length (expected {n})")
        if label == ident:
            continue
        if c != 0.0:
            m += float(c) * pauli_string_matrix(label)
    return DensityMatrix(m / 2**n)


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))


def bloch_vector(rho: DensityMatrix) -> BlochVector:
    """(<sigma_x>, <sigma_y>, <sigma_z>) of a single-qubit state."""
    if rho.n != 1:
        raise ValidationError(f"bloch_vector needs a single qubit, got n={rho.n}")
    m = rho.matrix
    return BlochVector(
        float(np.real(np.trace(m @ SIGMA_X))),
        float(np.real(np.trace(m @ SIGMA_Y))),
        float(np.real(np.trace(m @ SIGMA_Z))),
    )


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    # numerical noise can push eigenvalues to ~ -1e-15; clamp before sqrt
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def _dominant_eigvec(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return v[:, -1]


def state_fidelity(a, b) -> float:
    """Fidelity between two states, each a Ket, DensityMatrix, or array.

    Pure/pure uses |<a|b>|^2, pure/mixed uses <a|rho|a>, mixed/mixed uses
    (Tr sqrt(sqrt(a) b sqrt(a)))^2. Symmetric in its arguments. A density
    matrix that passes the purity criterion is routed through the pure
    formulas, which the general one reduces to but with less rounding.
    """
    ma, va = _as_matrix(a)
    mb, vb = _as_matrix(b)
    da = ma.shape[0]
    db = mb.shape[0]
    if da != db:
        raise ValidationError(f"state dimensions differ: {da} vs {db}")
    if not va and abs(np.real(np.trace(ma @ ma)) - 1.0) <= PURITY_TOL:
        ma, va = _dominant_eigvec(ma), True
    if not vb and abs(np.real(np.trace(mb @ mb)) - 1.0) <= PURITY_TOL:
        mb, vb = _dominant_eigvec(mb), True
    if va and vb:
        f = abs(np.vdot(ma, mb)) ** 2
    elif va:
        f = np.real(np.vdot(ma, mb @ ma))
    elif vb:
        f = np.real(np.vdot(mb, ma @ mb))
    else:
        # Tr sqrt(sqrt(a) b sqrt(a)) equals the nuclear norm of sqrt(a) sqrt(b),
        # which singular values compute accurately even for rank-deficient states
        f = float(np.sum(np.linalg.svd(_psd_sqrt(ma) @ _psd_sqrt(mb), compute_uv=False))) ** 2
    return float(min(max(f, 0.0), 1.0))

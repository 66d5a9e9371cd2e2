"""Gate library, circuits, circuit-to-pulse compilation, and GRAPE.

Gates address qubits with 1-based indices, control first for two-qubit
gates. Compiled programs reproduce their circuit's unitary up to a global
phase; the pulse amplitude sets how close (J evolution during a square
pulse is the only error source, and it shrinks as the pulses shorten).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import _kernels
from .dynamics import Delay as DelayEvent
from .dynamics import PulseProgram, RfSegment
from .errors import UncoupledPairError, ValidationError
from .quantum import SIGMA_X, SIGMA_Y, SIGMA_Z
from .spinsys import SpinSystemConfig, control_operators, internal_hamiltonian

# Amplitude used when compiling circuits unless the caller overrides it.
# 5e8 Hz keeps the J-during-pulse error of a full two-qubit program below
# the 1e-9 infidelity budget while staying well inside double precision.
DEFAULT_PULSE_AMP_HZ = 5e8

_SINGLE_QUBIT_NAMES = {"I", "X", "Y", "Z", "H", "P", "X90", "Y90", "Rx", "Ry", "Rz"}
_TWO_QUBIT_NAMES = {"CNOT", "CZ", "CY", "SWAP"}


@dataclass(frozen=True)
class Gate:
    name: str
    targets: tuple[int, ...]
    params: tuple[float, ...] = ()
    matrix: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        arity = {"CNOT": 2, "CZ": 2, "CY": 2, "SWAP": 2, "Delay": 0}.get(self.name)
        if arity is None:
            arity = 1 if self.name in _SINGLE_QUBIT_NAMES else len(self.targets)
        if self.name != "U" and len(self.targets) != arity:
            raise ValidationError(f"gate {self.name} takes {arity} target(s)")
        if self.name in ("Rx", "Ry", "Rz", "P", "Delay") and len(self.params) != 1:
            raise ValidationError(f"gate {self.name} takes exactly one parameter")
        if any(not np.isfinite(p) for p in self.params):
            raise ValidationError(f"gate {self.name}: parameters must be finite")
        if self.name == "U":
            if self.matrix is None:
                raise ValidationError("gate U needs an explicit matrix")
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (2 ** len(self.targets),) * 2:
                raise ValidationError("gate U matrix size does not match target count")
            if np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))) > 1e-10:
                raise ValidationError("gate U matrix is not unitary")
            object.__setattr__(self, "matrix", m)


def X(q):
    return Gate("X", (q,))


def Y(q):
    return Gate("Y", (q,))


def Z(q):
    return Gate("Z", (q,))


def H(q):
    return Gate("H", (q,))


def P(q, phi):
    return Gate("P", (q,), (float(phi),))


def X90(q):
    return Gate("X90", (q,))


def Y90(q):
    return Gate("Y90", (q,))


def RX(q, theta):
    return Gate("Rx", (q,), (float(theta),))


def RY(q, theta):
    return Gate("Ry", (q,), (float(theta),))


def RZ(q, theta):
    return Gate("Rz", (q,), (float(theta),))


def CNOT(control, target):
    return Gate("CNOT", (control, target))


def CZ(control, target):
    return Gate("CZ", (control, target))


def CY(control, target):
    return Gate("CY", (control, target))


def SWAP(a, b):
    return Gate("SWAP", (a, b))


def DELAY(duration_s):
    return Gate("Delay", (), (float(duration_s),))


def UNITARY(matrix, *targets):
    return Gate("U", tuple(targets), (), np.asarray(matrix, dtype=complex))


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(not 1 <= t <= self.n for t in g.targets):
                raise ValidationError(f"gate {g.name} targets {g.targets} outside 1..{self.n}")

    def to_json_dict(self) -> dict:
        gates = []
        for g in self.gates:
            d: dict = {"name": g.name, "targets": list(g.targets), "params": list(g.params)}
            if g.matrix is not None:
                d["matrix"] = {"re": np.real(g.matrix).tolist(), "im": np.imag(g.matrix).tolist()}
            gates.append(d)
        return {"n": self.n, "gates": gates}

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "Circuit":
        try:
            n = int(d["n"])
            gates = []
            for i, g in enumerate(d["gates"]):
                matrix = None
                if "matrix" in g:
                    matrix = np.asarray(g["matrix"]["re"], dtype=float) + 1j * np.asarray(
                        g["matrix"]["im"], dtype=float
                    )
                gates.append(
                    Gate(
                        str(g["name"]),
                        tuple(int(t) for t in g.get("targets", ())),
                        tuple(float(p) for p in g.get("params", ())),
                        matrix,
                    )
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad circuit JSON: {exc}") from exc
        return cls(n=n, gates=tuple(gates))


def _rot(pauli: np.ndarray, theta: float) -> np.ndarray:
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * pauli


_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# controlled block of CY: |1><1| (x) (-i sigma_y), i.e. a controlled pi rotation about y
_MINUS_I_SY = np.array([[0, -1], [1, 0]], dtype=complex)


def _single_qubit_matrix(g: Gate) -> np.ndarray:
    name = g.name
    if name == "I":
        return np.eye(2, dtype=complex)
    if name == "X":
        return SIGMA_X.copy()
    if name == "Y":
        return SIGMA_Y.copy()
    if name == "Z":
        return SIGMA_Z.copy()
    if name == "H":
        return _HADAMARD.copy()
    if name == "P":
        return np.diag([1.0, np.exp(1j * g.params[0])])
    if name == "X90":
        return _rot(SIGMA_X, np.pi / 2)
    if name == "Y90":
        return _rot(SIGMA_Y, np.pi / 2)
    if name == "Rx":
        return _rot(SIGMA_X, g.params[0])
    if name == "Ry":
        return _rot(SIGMA_Y, g.params[0])
    if name == "Rz":
        return _rot(SIGMA_Z, g.params[0])
    raise ValidationError(f"not a single-qubit gate: {name}")


def _embed_matrix(u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Expand a gate matrix on `targets` (1-based, in order) to the full register."""
    k = len(targets)
    if u.shape != (2**k, 2**k):
        raise ValidationError("matrix size does not match target count")
    if len(set(targets)) != k:
        raise ValidationError(f"repeated target in {targets}")
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        col_bits = [(col >> (n - q)) & 1 for q in range(1, n + 1)]
        small_col = 0
        for t in targets:
            small_col = (small_col << 1) | col_bits[t - 1]
        for small_row in range(2**k):
            amp = u[small_row, small_col]
            if amp == 0:
                continue
            row_bits = list(col_bits)
            for i, t in enumerate(targets):
                row_bits[t - 1] = (small_row >> (k - 1 - i)) & 1
            row = 0
            for b in row_bits:
                row = (row << 1) | b
            full[row, col] += amp
    return full


_CNOT_BASE = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_CZ_BASE = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
_CY_BASE = np.block(
    [[np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), _MINUS_I_SY]]
).astype(complex)
_SWAP_BASE = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def gate_matrix(g: Gate, n: int, config: Optional[SpinSystemConfig] = None) -> np.ndarray:
    """Full 2^n x 2^n unitary of a gate embedded at its targets.

    Delay gates evolve under the machine's internal Hamiltonian and
    therefore require `config`.
    """
    if g.name in _SINGLE_QUBIT_NAMES:
        return _embed_matrix(_single_qubit_matrix(g), g.targets, n)
    if g.name in _TWO_QUBIT_NAMES:
        base = {"CNOT": _CNOT_BASE, "CZ": _CZ_BASE, "CY": _CY_BASE, "SWAP": _SWAP_BASE}[g.name]
        return _embed_matrix(base, g.targets, n)
    if g.name == "U":
        return _embed_matrix(g.matrix, g.targets, n)
    if g.name == "Delay":
        if config is None:
            raise ValidationError("Delay gate needs a machine config for its Hamiltonian")
        h0 = internal_hamiltonian(config).astype(np.complex128)
        return _kernels.segment_propagators(h0[np.newaxis], float(g.params[0]))[0]
    raise ValidationError(f"unknown gate {g.name!r}")


def circuit_unitary(c: Circuit, config: Optional[SpinSystemConfig] = None) -> np.ndarray:
    """Product of the gate matrices in time order (later gates on the left)."""
    u = np.eye(2**c.n, dtype=complex)
    for g in c.gates:
        u = gate_matrix(g, c.n, config) @ u
    return u


def decompose_single_qubit(u: np.ndarray) -> tuple[float, float, float, float]:
    """Angles (alpha, beta, gamma, delta) with u = e^{i alpha} Rx(beta) Ry(gamma) Rx(delta).

    Any single-qubit unitary admits this x-y-x form, so a hardware that
    plays only x and y pulses can realize it directly.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValidationError("expected a 2x2 matrix")
    if np.max(np.abs(u @ u.conj().T - np.eye(2))) > 1e-10:
        raise ValidationError("matrix is not unitary")
    alpha = 0.5 * np.angle(np.linalg.det(u))
    w = u * np.exp(-1j * alpha)
    # Conjugating by Hadamard turns the x-y-x problem into a standard z-y-z one.
    wt = _HADAMARD @ w @ _HADAMARD
    theta = 2.0 * np.arctan2(abs(wt[1, 0]), abs(wt[0, 0]))
    if abs(wt[0, 0]) > 1e-12 and abs(wt[1, 0]) > 1e-12:
        bpd = 2.0 * np.angle(wt[1, 1])
        bmd = 2.0 * np.angle(wt[1, 0])
        beta, delta = (bpd + bmd) / 2.0, (bpd - bmd) / 2.0
    elif abs(wt[0, 0]) <= 1e-12:
        beta, delta = 2.0 * np.angle(wt[1, 0]), 0.0
    else:
        beta, delta = 2.0 * np.angle(wt[1, 1]), 0.0
    gamma = -theta
    beta = _normalized_angle(beta)
    delta = _normalized_angle(delta)
    if abs(delta) > abs(beta) + 1e-12:
        # Rx(b) Ry(g) Rx(d) = Rx(b+pi) Ry(-g) Rx(d-pi): move the longer pulse last
        beta = _normalized_angle(beta + np.pi)
        gamma = -gamma
        delta = _normalized_angle(delta - np.pi)
    # angle normalization flips spinor signs; recover the exact global phase
    m = _rot(SIGMA_X, beta) @ _rot(SIGMA_Y, gamma) @ _rot(SIGMA_X, delta)
    alpha = float(np.angle(np.trace(m.conj().T @ u) / 2.0))
    return float(alpha), float(beta), float(gamma), float(delta)


def gate_fidelity(u: np.ndarray, target: np.ndarray) -> float:
    """|Tr(u target^dag)|^2 / d^2: global-phase-invariant gate overlap."""
    u = np.asarray(u, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if u.shape != target.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {target.shape}")
    d = u.shape[0]
    return float(abs(np.trace(u @ target.conj().T)) ** 2 / d**2)


def _normalized_angle(theta: float) -> float:
    t = (theta + np.pi) % (2 * np.pi) - np.pi
    if t == -np.pi:
        t = np.pi
    return t


class _PulseEmitter:
    def __init__(self, config: SpinSystemConfig, amp_hz: float):
        if amp_hz <= 0:
            raise ValidationError("pulse amplitude must be > 0")
        self.config = config
        self.channels = config.channels
        self.amp = float(amp_hz)
        self.events: list = []

    def pulse(self, qubit: int, axis: str, angle: float):
        theta = _normalized_angle(angle)
        if abs(theta) < 1e-12:
            return
        phase = 0.0 if axis == "x" else np.pi / 2
        if theta < 0:
            phase += np.pi  # negative rotation = same axis, phase + pi
        c = self.channels.index(self.config.channel_of(qubit))
        amps = [0.0] * len(self.channels)
        phases = [0.0] * len(self.channels)
        amps[c] = self.amp
        phases[c] = phase
        self.events.append(
            RfSegment(tuple(amps), tuple(phases), abs(theta) / (2 * np.pi * self.amp))
        )

    def delay(self, duration_s: float):
        self.events.append(DelayEvent(duration_s))

    def xyx(self, qubit: int, u2: np.ndarray):
        _, beta, gamma, delta = decompose_single_qubit(u2)
        self.pulse(qubit, "x", delta)
        self.pulse(qubit, "y", gamma)
        self.pulse(qubit, "x", beta)

    def cnot(self, control: int, target: int):
        j = float(self.config.j_hz[control - 1, target - 1])
        if j == 0.0:
            raise UncoupledPairError(
                f"CNOT between qubits {control},{target}: J is zero, gate not practical"
            )
        if j < 0.0:
            raise ValidationError(
                f"CNOT between qubits {control},{target}: negative J not supported by "
                "the square-pulse compiler"
            )
        # J-coupling CNOT: y90 on target, 1/(2J) of free evolution, then
        # -y90, x90 on target and -x90, y90, x90 on the control.
        self.pulse(target, "y", np.pi / 2)
        self.delay(1.0 / (2.0 * j))
        self.pulse(target, "y", -np.pi / 2)
        self.pulse(target, "x", np.pi / 2)
        self.pulse(control, "x", -np.pi / 2)
        self.pulse(control, "y", np.pi / 2)
        self.pulse(control, "x", np.pi / 2)


def compile_circuit(
    c: Circuit,
    config: SpinSystemConfig,
    pulse_amp_hz: float = DEFAULT_PULSE_AMP_HZ,
) -> PulseProgram:
    """Compile a circuit into square x/y pulses and J-coupling delays.

    Requires a weak-coupling machine whose nuclei all sit on distinct
    channels (heteronuclear addressing). Two-qubit gates are rewritten to
    CNOTs first; CNOT itself becomes a 1/(2J) delay wrapped in pi/2 pulses.
    """
    if c.n != config.n:
        raise ValidationError(f"circuit has {c.n} qubits, machine has {config.n}")
    if config.coupling_model != "weak":
        raise ValidationError("pulse compilation requires a weak-coupling machine")
    if len(config.channels) != config.n:
        raise ValidationError(
            "pulse compilation needs per-qubit channels (all nucleus labels distinct)"
        )
    em = _PulseEmitter(config, pulse_amp_hz)

    def emit(g: Gate):
        if g.name == "I":
            return
        if g.name == "Delay":
            em.delay(g.params[0])
        elif g.name in _SINGLE_QUBIT_NAMES:
            em.xyx(g.targets[0], _single_qubit_matrix(g))
        elif g.name == "U":
            if len(g.targets) != 1:
                raise ValidationError("only single-qubit custom unitaries compile to pulses")
            em.xyx(g.targets[0], g.matrix)
        elif g.name == "CNOT":
            em.cnot(*g.targets)
        elif g.name == "CZ":
            ctrl, tgt = g.targets
            emit(H(tgt))
            em.cnot(ctrl, tgt)
            emit(H(tgt))
        elif g.name == "CY":
            ctrl, tgt = g.targets
            emit(RY(tgt, np.pi / 2))
            em.cnot(ctrl, tgt)
            emit(RY(tgt, -np.pi / 2))
            em.cnot(ctrl, tgt)
        elif g.name == "SWAP":
            a, b = g.targets
            em.cnot(a, b)
            em.cnot(b, a)
            em.cnot(a, b)
        else:
            raise ValidationError(f"cannot compile gate {g.name!r}")

    for g in c.gates:
        emit(g)
    return PulseProgram(system=config, events=tuple(em.events))


@dataclass(frozen=True)
class GrapeConfig:
    """Knobs for the gradient-ascent pulse search.

    segments * dt_s is the total pulse duration. `initial` picks the seed
    amplitudes: "random" draws uniformly from +-random_amp_hz, "constant"
    fills every segment with constant_amp_hz.
    """

    segments: int
    dt_s: float
    max_iters: int = 1000
    target_fidelity: float = 0.9995
    initial: str = "random"
    random_amp_hz: float = 1000.0
    constant_amp_hz: float = 0.0
    max_step_hz: float = 1e4
    shrink: float = 0.5
    max_trials: int = 30
    improvement_tol: float = 1e-12

    def __post_init__(self):
        if self.segments <= 0:
            raise ValidationError("segments must be > 0")
        if self.dt_s <= 0:
            raise ValidationError("dt_s must be > 0")
        if not 0 < self.target_fidelity <= 1:
            raise ValidationError("target_fidelity must be in (0, 1]")
        if self.initial not in ("random", "constant"):
            raise ValidationError('initial must be "random" or "constant"')

    @property
    def duration_s(self) -> float:
        return self.segments * self.dt_s


@dataclass
class GrapeResult:
    """Optimized piecewise-constant controls plus the search trace."""

    amplitudes_hz: np.ndarray  # (segments, 2 * n_channels): (x, y) per channel
    channels: tuple[str, ...]
    dt_s: float
    fidelity_trace: np.ndarray
    final_unitary: np.ndarray
    final_fidelity: float
    iterations: int
    stop_reason: str
    seed: int

    def csv_text(self) -> str:
        buf = io.StringIO()
        buf.write("segment_index,channel,u_x_hz,u_y_hz\n")
        for j in range(self.amplitudes_hz.shape[0]):
            for ci, ch in enumerate(self.channels):
                ux = self.amplitudes_hz[j, 2 * ci]
                uy = self.amplitudes_hz[j, 2 * ci + 1]
                buf.write(f"{j},{ch},{ux:.12g},{uy:.12g}\n")
        return buf.getvalue()

    def metadata_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_fidelity": self.final_fidelity,
            "seed": self.seed,
            "stop_reason": self.stop_reason,
            "segments": int(self.amplitudes_hz.shape[0]),
            "dt_s": self.dt_s,
            "channels": list(self.channels),
        }


def grape_optimize(
    target: np.ndarray,
    config: SpinSystemConfig,
    gcfg: GrapeConfig,
    seed: int = 0,
) -> GrapeResult:
    """Gradient-ascent search for piecewise-constant controls realizing `target`.

    Each iteration evaluates the first-order fidelity gradient over all
    segment amplitudes, then backtracks along the normalized gradient
    (initial step max_step_hz, shrinking by `shrink`, at most `max_trials`
    tries) and accepts the first step that raises the fidelity. Stops on
    target_fidelity, max_iters, or when no step improves by more than
    improvement_tol. The fidelity trace is nondecreasing by construction.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (config.dim, config.dim):
        raise ValidationError(f"target shape {target.shape} != machine dim {config.dim}")
    h0 = internal_hamiltonian(config).astype(np.complex128)
    controls, channels = control_operators(config)
    controls = controls.astype(np.complex128)
    m = controls.shape[0]
    n_seg = gcfg.segments
    dt = float(gcfg.dt_s)
    target_dag = np.ascontiguousarray(target.conj().T)

    rng = np.random.default_rng(seed)
    if gcfg.initial == "random":
        u = rng.uniform(-gcfg.random_amp_hz, gcfg.random_amp_hz, size=(n_seg, m))
    else:
        u = np.full((n_seg, m), float(gcfg.constant_amp_hz))

    def props_of(amps: np.ndarray) -> np.ndarray:
        hs = h0[np.newaxis, :, :] + np.tensordot(amps, controls, axes=(1, 0))
        return _kernels.segment_propagators(np.ascontiguousarray(hs), dt)

    def fidelity_of(amps: np.ndarray) -> float:
        return float(_kernels.chain_fidelity(props_of(amps), target_dag))

    props = props_of(u)
    fid, grad = _kernels.grape_fidelity_and_gradient(props, target_dag, controls, dt)
    trace = [float(fid)]
    stop_reason = "max_iters"
    iterations = 0
    for _ in range(gcfg.max_iters):
        if fid >= gcfg.target_fidelity:
            stop_reason = "target_fidelity"
            break
        gmax = float(np.max(np.abs(grad)))
        if gmax == 0.0:
            stop_reason = "stationary"
            break
        direction = grad / gmax
        step = gcfg.max_step_hz
        new_u = None
        new_fid = fid
        for _trial in range(gcfg.max_trials):
            cand = u + step * direction
            f2 = fidelity_of(cand)
            if f2 > fid:
                new_u, new_fid = cand, f2
                break
            step *= gcfg.shrink
        if new_u is None:
            stop_reason = "no_improving_step"
            break
        improvement = new_fid - fid
        u = new_u
        props = props_of(u)
        fid, grad = _kernels.grape_fidelity_and_gradient(props, target_dag, controls, dt)
        iterations += 1
        trace.append(float(fid))
        if improvement < gcfg.improvement_tol:
            stop_reason = "converged"
            break
    if fid >= gcfg.target_fidelity:
        stop_reason = "target_fidelity"

    final_u = _kernels.unitary_chain(props)
    return GrapeResult(
        amplitudes_hz=u,
        channels=channels,
        dt_s=dt,
        fidelity_trace=np.asarray(trace),
        final_unitary=final_u,
        final_fidelity=gate_fidelity(final_u, target),
        iterations=iterations,
        stop_reason=stop_reason,
        seed=seed,
    )

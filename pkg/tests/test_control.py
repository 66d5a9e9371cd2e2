import numpy as np
import pytest

from conftest import make_weak_config, random_unitary
from nmrqc.control import (
    CNOT,
    CY,
    CZ,
    DELAY,
    SWAP,
    Circuit,
    Gate,
    H,
    P,
    RX,
    RY,
    RZ,
    UNITARY,
    X,
    X90,
    Y90,
    circuit_unitary,
    compile_circuit,
    decompose_single_qubit,
    gate_fidelity,
    gate_matrix,
)
from nmrqc.dynamics import Delay as DelayEvent
from nmrqc.dynamics import RfSegment, program_unitary
from nmrqc.errors import UncoupledPairError, ValidationError
from nmrqc.quantum import SIGMA_X, SIGMA_Y

CNOT12 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CNOT21 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
SWAP_M = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def rot(pauli, theta):
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * pauli


class TestGateMatrices:
    def test_cnot_both_directions(self):
        assert np.allclose(gate_matrix(CNOT(1, 2), 2), CNOT12)
        m21 = gate_matrix(CNOT(2, 1), 2)
        assert np.allclose(m21, CNOT21)
        assert np.allclose(m21 @ np.array([0, 1, 0, 0]), [0, 0, 0, 1])  # |01> -> |11>

    def test_full_rotation_spinor_sign(self):
        assert np.allclose(gate_matrix(RX(1, 2 * np.pi), 1), -np.eye(2))

    def test_involutions(self):
        h = gate_matrix(H(1), 1)
        assert np.allclose(h @ h, np.eye(2))
        assert np.allclose(CNOT12 @ CNOT12, np.eye(4))
        cy = gate_matrix(CY(1, 2), 2)
        assert np.allclose(np.linalg.matrix_power(cy, 4), np.eye(4))

    def test_cy_action(self):
        cy = gate_matrix(CY(1, 2), 2)
        assert np.allclose(cy @ np.array([0, 0, 1, 0]), [0, 0, 0, 1])  # |10> -> |11>
        assert np.allclose(cy @ np.array([0, 0, 0, 1]), [0, 0, -1, 0])  # |11> -> -|10>

    def test_unitarity_all_gates(self, gemini):
        gates = [
            X(1), H(2), P(1, 0.7), X90(2), Y90(1), RX(1, 0.3), RY(2, -1.2), RZ(1, 2.2),
            CNOT(1, 2), CZ(2, 1), CY(1, 2), SWAP(1, 2), DELAY(1e-4),
            UNITARY(rot(SIGMA_Y, 0.4), 2),
        ]
        for g in gates:
            u = gate_matrix(g, 2, gemini)
            assert np.max(np.abs(u @ u.conj().T - np.eye(4))) < 1e-12

    def test_embedding_on_three_qubits(self):
        u = gate_matrix(CNOT(3, 1), 3)
        # control on qubit 3, target qubit 1: |001> -> |101>
        vec = np.zeros(8)
        vec[1] = 1.0
        assert np.allclose(u @ vec, np.eye(8)[5])

    def test_delay_needs_config(self):
        with pytest.raises(ValidationError):
            gate_matrix(DELAY(1e-3), 2)

    def test_malformed_gates(self):
        with pytest.raises(ValidationError):
            Gate("CNOT", (1,))
        with pytest.raises(ValidationError):
            Gate("Rx", (1,), ())
        with pytest.raises(ValidationError):
            UNITARY(np.array([[1, 1], [0, 1]]), 1)


class TestCircuitUnitary:
    def test_bell_circuit(self):
        u = circuit_unitary(Circuit(2, (H(1), CNOT(1, 2))))
        out = u @ np.array([1, 0, 0, 0], dtype=complex)
        assert np.allclose(out, np.array([1, 0, 0, 1]) / np.sqrt(2))

    def test_swap_from_three_cnots(self):
        u = circuit_unitary(Circuit(2, (CNOT(1, 2), CNOT(2, 1), CNOT(1, 2))))
        assert np.max(np.abs(u - SWAP_M)) < 1e-12
        assert np.max(np.abs(gate_matrix(SWAP(1, 2), 2) - SWAP_M)) < 1e-12

    def test_empty_circuit(self):
        assert np.allclose(circuit_unitary(Circuit(2, ())), np.eye(4))

    def test_time_ordering(self):
        # X then H differs from H then X
        u = circuit_unitary(Circuit(1, (X(1), H(1))))
        expected = gate_matrix(H(1), 1) @ gate_matrix(X(1), 1)
        assert np.allclose(u, expected)

    def test_json_roundtrip(self):
        c = Circuit(2, (H(1), RX(2, 0.31), CNOT(1, 2), UNITARY(rot(SIGMA_X, 1.0), 2)))
        c2 = Circuit.from_json_dict(c.to_json_dict())
        assert np.max(np.abs(circuit_unitary(c) - circuit_unitary(c2))) < 1e-12

    def test_target_range_checked(self):
        with pytest.raises(ValidationError):
            Circuit(1, (X(2),))


class TestDecomposeSingleQubit:
    def reconstruct(self, angles):
        a, b, g, d = angles
        return np.exp(1j * a) * rot(SIGMA_X, b) @ rot(SIGMA_Y, g) @ rot(SIGMA_X, d)

    def test_pure_x_rotation(self):
        angles = decompose_single_qubit(rot(SIGMA_X, 0.8))
        assert np.max(np.abs(self.reconstruct(angles) - rot(SIGMA_X, 0.8))) < 1e-9

    def test_hadamard(self):
        h = gate_matrix(H(1), 1)
        angles = decompose_single_qubit(h)
        assert np.max(np.abs(self.reconstruct(angles) - h)) < 1e-9

    def test_random_roundtrip(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            u = random_unitary(rng, 2)
            angles = decompose_single_qubit(u)
            assert np.max(np.abs(self.reconstruct(angles) - u)) < 1e-9

    def test_non_unitary_rejected(self):
        with pytest.raises(ValidationError):
            decompose_single_qubit(np.array([[1.0, 0.1], [0.0, 1.0]]))


class TestGateFidelity:
    def test_self_and_phase(self):
        rng = np.random.default_rng(32)
        u = random_unitary(rng, 4)
        assert gate_fidelity(u, u) == pytest.approx(1.0)
        assert gate_fidelity(np.exp(1j * 0.9) * u, u) == pytest.approx(1.0)

    def test_traceless_pair(self):
        assert gate_fidelity(np.eye(2), SIGMA_X) == pytest.approx(0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            gate_fidelity(np.eye(2), np.eye(4))


class TestCompile:
    GATES = [
        ("H", H(1)),
        ("X", X(1)),
        ("Y", Gate("Y", (2,))),
        ("Z", Gate("Z", (1,))),
        ("X90", X90(2)),
        ("Y90", Y90(1)),
        ("Rz", RZ(1, 1.1)),
        ("P", P(2, np.pi / 4)),
        ("CNOT12", CNOT(1, 2)),
        ("CNOT21", CNOT(2, 1)),
        ("CZ", CZ(1, 2)),
        ("CY", CY(1, 2)),
        ("SWAP", SWAP(1, 2)),
    ]

    @pytest.mark.parametrize("name,gate", GATES, ids=[g[0] for g in GATES])
    def test_compiled_gate_equivalence(self, gemini, name, gate):
        circuit = Circuit(2, (gate,))
        prog = compile_circuit(circuit, gemini)
        fid = gate_fidelity(program_unitary(prog), circuit_unitary(circuit, gemini))
        assert fid >= 1 - 1e-9

    def test_cnot_program_contains_half_j_delay(self, gemini):
        prog = compile_circuit(Circuit(2, (CNOT(1, 2),)), gemini)
        delays = [ev.duration_s for ev in prog.events if isinstance(ev, DelayEvent)]
        assert delays == [pytest.approx(1.0 / (2 * 697.4))]
        # approx 720 us on this machine
        assert delays[0] == pytest.approx(720e-6, rel=5e-3)

    def test_x_as_two_x90_segments(self, gemini):
        prog = compile_circuit(Circuit(2, (X90(1), X90(1))), gemini)
        segs = [ev for ev in prog.events if isinstance(ev, RfSegment)]
        assert len(segs) == 2
        x180 = compile_circuit(Circuit(2, (X(1),)), gemini)
        assert gate_fidelity(program_unitary(prog), program_unitary(x180)) >= 1 - 1e-9

    def test_hadamard_pulse_pair(self, gemini):
        # short y rotation (90) followed by a long x rotation (180)
        prog = compile_circuit(Circuit(2, (H(1),)), gemini)
        segs = [ev for ev in prog.events if isinstance(ev, RfSegment)]
        assert len(segs) == 2
        first, second = segs
        amp = first.amplitudes_hz[0]
        assert first.phases_rad[0] == pytest.approx(np.pi / 2)  # y pulse
        assert first.duration_s * amp * 2 * np.pi == pytest.approx(np.pi / 2)
        assert second.phases_rad[0] == pytest.approx(0.0)  # x pulse
        assert second.duration_s * amp * 2 * np.pi == pytest.approx(np.pi)

    def test_cnot_truth_table_states(self, gemini):
        for direction, table in (
            ((1, 2), {"00": "00", "01": "01", "10": "11", "11": "10"}),
            ((2, 1), {"00": "00", "01": "11", "10": "10", "11": "01"}),
        ):
            prog = compile_circuit(Circuit(2, (CNOT(*direction),)), gemini)
            u = program_unitary(prog)
            for bits, out_bits in table.items():
                vec = np.zeros(4, dtype=complex)
                vec[int(bits, 2)] = 1.0
                out = u @ vec
                assert abs(out[int(out_bits, 2)]) ** 2 >= 1 - 1e-9

    def test_zero_j_pair_rejected(self):
        cfg = make_weak_config([0.0, 10.0], [[0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(UncoupledPairError):
            compile_circuit(Circuit(2, (CNOT(1, 2),)), cfg)

    def test_isotropic_machine_rejected(self, triangulum):
        with pytest.raises(ValidationError):
            compile_circuit(Circuit(3, (X(1),)), triangulum)

    def test_z_rotation_cnot_decomposition(self, gemini):
        # z-rotation route to CNOT: Rz1(90) Rz2(-90) Rx2(90) U_J(1/2J) Ry2(90),
        # equal to CNOT up to a global phase of pi/4
        circuit = Circuit(
            2,
            (
                RY(2, np.pi / 2),
                DELAY(1.0 / (2 * 697.4)),
                RX(2, np.pi / 2),
                RZ(2, -np.pi / 2),
                RZ(1, np.pi / 2),
            ),
        )
        u = circuit_unitary(circuit, gemini)
        assert gate_fidelity(u, CNOT12) == pytest.approx(1.0, abs=1e-12)
        phase = u[0, 0] / CNOT12[0, 0]
        assert np.angle(phase) == pytest.approx(-np.pi / 4, abs=1e-9)

import numpy as np
import pytest

from conftest import make_weak_config, random_density_matrix
from nmrqc.dynamics import (
    Crusher,
    Delay,
    PulseProgram,
    RfSegment,
    apply_crusher,
    apply_relaxation,
    evolve_program,
    program_unitary,
    segment_propagator,
)
from nmrqc.errors import ValidationError
from nmrqc.quantum import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    bloch_vector,
    pauli_expand,
    pauli_reconstruct,
    tensor,
)
from nmrqc.spinsys import thermal_state


def single_spin(offset=0.0, t1=4.0, t2=0.2, eps=1e-5):
    return make_weak_config([offset], [[0.0]], t1=t1, t2=t2, polarization=eps)


class TestSegmentPropagator:
    def test_zero_hamiltonian(self):
        u = segment_propagator(np.zeros((4, 4)), 1.7)
        assert np.max(np.abs(u - np.eye(4))) < 1e-14

    def test_x180_closed_form(self):
        # 2 pi u I_x for a duration with 2 pi u t = pi gives exp(-i pi sigma_x / 2) = -i sigma_x
        u_hz = 12.5e3
        h = 2 * np.pi * u_hz * SIGMA_X / 2
        u = segment_propagator(h, 1.0 / (2 * u_hz))
        assert np.max(np.abs(u - (-1j) * SIGMA_X)) < 1e-12

    def test_j_evolution_phases(self):
        j = 697.4
        h = 2 * np.pi * j * tensor(SIGMA_Z / 2, SIGMA_Z / 2)
        u = segment_propagator(h, 1.0 / (2 * j))
        expected = np.diag(np.exp(-1j * np.pi / 4 * np.array([1, -1, -1, 1])))
        assert np.max(np.abs(u - expected)) < 1e-12

    def test_composition(self):
        rng = np.random.default_rng(21)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = a + a.conj().T
        u_total = segment_propagator(h, 0.7)
        u_split = segment_propagator(h, 0.3) @ segment_propagator(h, 0.4)
        assert np.max(np.abs(u_total - u_split)) < 1e-9

    def test_unitarity(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
            u = segment_propagator(a + a.conj().T, rng.uniform(0, 2))
            assert np.max(np.abs(u @ u.conj().T - np.eye(8))) < 1e-10

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValidationError):
            segment_propagator(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.1)

    def test_off_resonance_nutation_axis(self):
        # offset D and drive u tilt the axis by atan(u/D) from z at rate sqrt(D^2+u^2)
        d_hz, u_hz, t = 300.0, 400.0, 1.3e-3
        h = 2 * np.pi * (d_hz * SIGMA_Z / 2 + u_hz * SIGMA_X / 2)
        u = segment_propagator(h, t)
        eff = np.hypot(d_hz, u_hz)
        axis = np.array([u_hz, 0.0, d_hz]) / eff
        angle = 2 * np.pi * eff * t
        n_dot_sigma = axis[0] * SIGMA_X + axis[1] * SIGMA_Y + axis[2] * SIGMA_Z
        closed_form = np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * n_dot_sigma
        assert np.max(np.abs(u - closed_form)) < 1e-9
        assert np.arctan2(u_hz, d_hz) == pytest.approx(np.arctan(u_hz / d_hz))


class TestEvolveProgram:
    def test_rabi_quarter_turn(self):
        cfg = single_spin()
        u_hz = 10e3
        dur = 1.0 / (8 * u_hz)  # 2 pi u t = pi/4 * 2 -> 90 degrees
        prog = PulseProgram(cfg, (RfSegment((u_hz,), (0.0,), dur * 2),))
        rho = evolve_program(DensityMatrix.basis(1, 0), prog)
        target = np.array([1.0, -1.0j]) / np.sqrt(2)
        assert np.max(np.abs(rho.matrix - np.outer(target, target.conj()))) < 1e-9

    def test_free_precession_phase(self):
        nu = 85.0
        cfg = single_spin(offset=nu)
        t = 3.3e-3
        plus = DensityMatrix.from_ket(np.array([1, 1], dtype=complex) / np.sqrt(2))
        rho = evolve_program(plus, PulseProgram(cfg, (Delay(t),)))
        vec = bloch_vector(rho)
        angle = 2 * np.pi * nu * t
        assert np.hypot(vec.x, vec.y) == pytest.approx(1.0, abs=1e-9)
        assert np.arctan2(vec.y, vec.x) % (2 * np.pi) == pytest.approx(
            angle % (2 * np.pi), abs=1e-9
        )

    def test_empty_program(self, gemini):
        rho = thermal_state(gemini)
        out = evolve_program(rho, PulseProgram(gemini, ()))
        assert np.max(np.abs(out.matrix - rho.matrix)) == 0.0

    def test_spectrum_preserved_without_relaxation(self, gemini):
        rng = np.random.default_rng(23)
        rho = random_density_matrix(rng, 2)
        prog = PulseProgram(
            gemini,
            (
                RfSegment((5e3, 0.0), (0.0, 0.0), 37e-6),
                Delay(410e-6),
                RfSegment((0.0, 5e3), (0.0, np.pi / 2), 11e-6),
            ),
        )
        out = evolve_program(rho, prog)
        before = np.sort(np.linalg.eigvalsh(rho.matrix))
        after = np.sort(np.linalg.eigvalsh(out.matrix))
        assert np.max(np.abs(before - after)) < 1e-9

    def test_dimension_mismatch(self, gemini):
        with pytest.raises(ValidationError):
            evolve_program(DensityMatrix.basis(1, 0), PulseProgram(gemini, ()))

    def test_program_json_roundtrip(self, gemini):
        prog = PulseProgram(
            gemini,
            (RfSegment((1e3, 0.0), (0.0, 0.0), 2e-5), Delay(1e-4), Crusher()),
        )
        again = PulseProgram.from_json_dict(prog.to_json_dict(), gemini)
        assert again == prog
        assert again.duration_s == pytest.approx(1.2e-4)

    def test_program_unitary_rejects_crushers(self, gemini):
        with pytest.raises(ValidationError):
            program_unitary(PulseProgram(gemini, (Crusher(),)))


class TestCrusher:
    def test_full_dephasing_of_plus(self):
        plus = DensityMatrix.from_ket(np.array([1, 1], dtype=complex) / np.sqrt(2))
        assert np.max(np.abs(apply_crusher(plus).matrix - np.eye(2) / 2)) < 1e-15

    def test_diagonal_states_unchanged_and_idempotent(self):
        rng = np.random.default_rng(24)
        rho = random_density_matrix(rng, 2)
        once = apply_crusher(rho)
        twice = apply_crusher(once)
        assert np.max(np.abs(once.matrix - np.diag(np.diag(rho.matrix)))) == 0.0
        assert np.max(np.abs(twice.matrix - once.matrix)) == 0.0
        assert np.trace(once.matrix) == pytest.approx(1.0)

    def test_deviation_example(self):
        # sz1 + sz2/2 - sqrt(3)/2 sy2 loses only its transverse part
        dev = (
            tensor(SIGMA_Z, np.eye(2))
            + 0.5 * tensor(np.eye(2), SIGMA_Z)
            - (np.sqrt(3) / 2) * tensor(np.eye(2), SIGMA_Y)
        )
        rho = DensityMatrix(np.eye(4) / 4 + dev / 40)
        out = apply_crusher(rho)
        expected_dev = tensor(SIGMA_Z, np.eye(2)) + 0.5 * tensor(np.eye(2), SIGMA_Z)
        assert np.max(np.abs(out.matrix - (np.eye(4) / 4 + expected_dev / 40))) < 1e-12


class TestRelaxation:
    def test_transverse_decay_rate(self):
        cfg = single_spin(eps=0.0, t2=0.37)
        rho = pauli_reconstruct({"I": 1.0, "X": 1.0})
        out = apply_relaxation(rho, 0.37, cfg)
        assert pauli_expand(out)["X"] == pytest.approx(np.exp(-1.0), rel=1e-10)

    def test_inversion_recovery_curve(self):
        eps = 1e-3
        cfg = single_spin(eps=eps, t1=2.0)
        inverted = pauli_reconstruct({"I": 1.0, "Z": -eps})
        for dt in (0.1, 1.0, 5.0):
            out = apply_relaxation(inverted, dt, cfg)
            expected = eps * (1 - 2 * np.exp(-dt / 2.0))
            assert pauli_expand(out)["Z"] == pytest.approx(expected, abs=1e-15)

    def test_identity_at_zero_duration(self, gemini):
        rng = np.random.default_rng(25)
        rho = random_density_matrix(rng, 2)
        out = apply_relaxation(rho, 0.0, gemini)
        assert np.max(np.abs(out.matrix - rho.matrix)) == 0.0

    def test_trace_and_hermiticity_preserved(self, gemini):
        rng = np.random.default_rng(26)
        for _ in range(20):
            rho = random_density_matrix(rng, 2)
            out = apply_relaxation(rho, 0.05, gemini)
            assert np.trace(out.matrix).real == pytest.approx(1.0, abs=1e-14)
            assert abs(np.trace(out.matrix).imag) < 1e-14
            assert np.max(np.abs(out.matrix - out.matrix.conj().T)) < 1e-12

    def test_fixed_point_is_thermal(self, gemini):
        rng = np.random.default_rng(27)
        rho = random_density_matrix(rng, 2)
        out = apply_relaxation(rho, 50 * 6.0, gemini)  # 50x the longest T1
        assert np.max(np.abs(out.matrix - thermal_state(gemini).matrix)) < 1e-9

    def test_positivity_on_random_states(self, gemini):
        rng = np.random.default_rng(28)
        for _ in range(200):
            rho = random_density_matrix(rng, 2)
            out = apply_relaxation(rho, float(rng.uniform(0, 1.0)), gemini)
            assert np.min(np.linalg.eigvalsh(out.matrix)) > -1e-9

    def test_multi_spin_z_products_damp_by_product(self, gemini):
        rho = pauli_reconstruct({"II": 1.0, "ZZ": 0.5})
        dt = 0.11
        out = apply_relaxation(rho, dt, gemini)
        expected = 0.5 * np.exp(-dt / 4.0) * np.exp(-dt / 6.0)
        zz = pauli_expand(out)["ZZ"]
        # the restoration terms also generate no ZZ weight
        assert zz == pytest.approx(expected, abs=1e-12)

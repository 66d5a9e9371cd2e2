"""NMR observation: FID synthesis, spectra, peak readout, state tomography.

Detection is quadrature per channel. With this package's +Zeeman sign
convention the complex signal that puts a spin with offset nu at +nu Hz in
the spectrum is Tr(rho(t) sum_k (sigma_x^k + i sigma_y^k)), the conjugate
of the lowering-operator form written for the -Zeeman convention; the two
differ only by a mirrored frequency axis. Under it, the line of qubit k
with coupled partners in state m sits at nu_k + sum_j (1-2 m_j) J_kj / 2
and carries amplitude sum_p w_p(m) (c_xp + i c_yp), where p runs over the
partner z-patterns and w_p(m) is the product of the partner signs. Readout
inverts exactly that relation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Optional

import numpy as np

from .control import DEFAULT_PULSE_AMP_HZ, Circuit, Gate, compile_circuit, gate_matrix
from .dynamics import program_unitary
from .errors import UnresolvedPeaksError, ValidationError
from .quantum import (
    SIGMA_X,
    SIGMA_Y,
    DensityMatrix,
    embed_single,
    pauli_reconstruct,
)
from .spinsys import SpinSystemConfig, internal_hamiltonian

_MAX_GRID = 2**20


@dataclass(frozen=True)
class FIDSignal:
    """Complex free-induction-decay samples for one receiver channel."""

    channel: str
    samples: np.ndarray
    dt_s: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 1 or s.size < 2:
            raise ValidationError("FID needs at least 2 samples")
        if self.dt_s <= 0:
            raise ValidationError("FID sample spacing must be > 0")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def times_s(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.dt_s

    def csv_text(self) -> str:
        lines = ["t_s,re,im"]
        for t, s in zip(self.times_s, self.samples):
            lines.append(f"{t:.12g},{s.real:.12g},{s.imag:.12g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Spectrum:
    """Unitary DFT of an FID on an fftshifted frequency grid (Hz)."""

    channel: str
    frequencies_hz: np.ndarray
    amplitudes: np.ndarray

    def csv_text(self) -> str:
        lines = ["freq_hz,re,im,magnitude"]
        for f, a in zip(self.frequencies_hz, self.amplitudes):
            lines.append(f"{f:.12g},{a.real:.12g},{a.imag:.12g},{abs(a):.12g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Peak:
    """One spectral line: frequency plus complex amplitude in tone units
    (real part = x phase, imaginary part = y phase)."""

    frequency_hz: float
    amplitude: complex


def _channel_t2(config: SpinSystemConfig, channel: str) -> float:
    return min(config.nuclei[k - 1].t2_s for k in config.channel_members(channel))


def _detection_operator(config: SpinSystemConfig, channel: str) -> np.ndarray:
    d = np.zeros((config.dim, config.dim), dtype=complex)
    for k in config.channel_members(channel):
        d += embed_single(SIGMA_X, k, config.n) + 1j * embed_single(SIGMA_Y, k, config.n)
    return d


def synthesize_fid(
    rho: DensityMatrix,
    config: SpinSystemConfig,
    channel: str,
    duration_s: float,
    dt_s: float,
) -> FIDSignal:
    """Free-induction decay of `rho` observed on one channel.

    S(t) = Tr(U(t) rho U(t)^dag D_channel) * exp(-t / T2_channel) with U
    generated by the internal Hamiltonian. Only density-matrix terms with
    exactly one transverse factor contribute.
    """
    if rho.n != config.n:
        raise ValidationError(f"state has {rho.n} qubits, machine has {config.n}")
    n_samples = int(round(duration_s / dt_s))
    if n_samples < 2:
        raise ValidationError("duration/dt must give at least 2 samples")
    detect = _detection_operator(config, channel)  # raises for unknown channel
    h0 = internal_hamiltonian(config)
    w, v = np.linalg.eigh(h0)
    rho_e = v.conj().T @ rho.matrix @ v
    det_e = v.conj().T @ detect @ v
    weights = (rho_e * det_e.T).ravel()
    delta = (w[:, None] - w[None, :]).ravel()  # rad/s
    keep = np.abs(weights) > 0
    weights = weights[keep]
    delta = delta[keep]
    t = np.arange(n_samples) * dt_s
    signal = (
        np.zeros(n_samples, dtype=complex)
        if weights.size == 0
        else weights @ np.exp(-1j * np.outer(delta, t))
    )
    signal *= np.exp(-t / _channel_t2(config, channel))
    return FIDSignal(channel=channel, samples=signal, dt_s=dt_s)


def spectrum_of(fid: FIDSignal) -> Spectrum:
    """Unitary-normalized DFT, so FID energy equals spectrum energy."""
    n = fid.samples.size
    amps = np.fft.fftshift(np.fft.fft(fid.samples)) / np.sqrt(n)
    freqs = np.fft.fftshift(np.fft.fftfreq(n, fid.dt_s))
    return Spectrum(channel=fid.channel, frequencies_hz=freqs, amplitudes=amps)


def spectrum_peaks(fid: FIDSignal, threshold: float = 0.05) -> list[Peak]:
    """Local maxima of the spectrum magnitude above threshold * max.

    Peak amplitudes are rescaled to tone units: a unit-amplitude on-bin
    undamped complex exponential reports amplitude 1.
    """
    spec = spectrum_of(fid)
    mag = np.abs(spec.amplitudes)
    top = float(np.max(mag))
    if top <= 0.0:
        return []
    n = fid.samples.size
    peaks = []
    for i in range(mag.size):
        left = mag[i - 1] if i > 0 else -np.inf
        right = mag[i + 1] if i < mag.size - 1 else -np.inf
        if mag[i] >= threshold * top and mag[i] > left and mag[i] >= right:
            peaks.append(
                Peak(
                    frequency_hz=float(spec.frequencies_hz[i]),
                    amplitude=complex(spec.amplitudes[i] / np.sqrt(n)),
                )
            )
    return peaks


@dataclass(frozen=True)
class _Line:
    qubit: int
    partner_bits: tuple[int, ...]  # bit per partner qubit, ascending qubit order
    frequency_hz: float


def _weak_lines(config: SpinSystemConfig, channel: str) -> list[_Line]:
    lines = []
    n = config.n
    for k in config.channel_members(channel):
        partners = [q for q in range(1, n + 1) if q != k]
        for bits in itertools.product((0, 1), repeat=len(partners)):
            f = config.nuclei[k - 1].offset_hz
            for q, b in zip(partners, bits):
                f += (1 - 2 * b) * config.j_hz[k - 1, q - 1] / 2.0
            lines.append(_Line(qubit=k, partner_bits=bits, frequency_hz=f))
    return lines


def _exact_grid(freqs: list[float]) -> tuple[float, int]:
    """Duration and sample count putting every line exactly on a DFT bin."""
    fracs = [Fraction(f).limit_denominator(10**6) for f in freqs]
    den = lcm(*(fr.denominator for fr in fracs)) if fracs else 1
    ints = [int(fr * den) for fr in fracs]
    g = 0
    for i in ints:
        g = gcd(g, abs(i))
    duration = den / g if g else 1e-2
    fmax = max((abs(f) for f in freqs), default=0.0)
    n = 64
    while n < 4.0 * (fmax * duration + 1.0):
        n *= 2
        if n > _MAX_GRID:
            raise ValidationError(
                "readout grid would be enormous; use config frequencies with short "
                "decimal expansions"
            )
    return duration, n


def _check_resolved(lines: list[_Line], t2: float):
    lw = 1.0 / (np.pi * t2)
    freqs = sorted(line.frequency_hz for line in lines)
    for a, b in zip(freqs, freqs[1:]):
        if b - a < 3.0 * lw:
            raise UnresolvedPeaksError(
                f"lines at {a:.6g} and {b:.6g} Hz closer than 3 linewidths ({3 * lw:.3g} Hz)"
            )


def readout_peak_table(rho: DensityMatrix, config: SpinSystemConfig) -> dict[str, list[Peak]]:
    """Per-channel spectral lines with amplitudes in coefficient units.

    A deviation sigma_x^k alone gives every line of qubit k amplitude 1;
    adding sigma_x^k sigma_z^j moves weight between the partner-|0> and
    partner-|1> lines of qubit k.
    """
    if config.coupling_model != "weak":
        raise ValidationError("peak readout is defined for weak-coupling systems")
    if config.n > 3:
        raise ValidationError("peak readout is defined for n <= 3")
    out: dict[str, list[Peak]] = {}
    for channel in config.channels:
        lines = _weak_lines(config, channel)
        t2 = _channel_t2(config, channel)
        _check_resolved(lines, t2)
        duration, n_samples = _exact_grid([line.frequency_hz for line in lines])
        fid = synthesize_fid(rho, config, channel, duration, duration / n_samples)
        corrected = fid.samples * np.exp(fid.times_s / t2)
        bins = np.fft.fft(corrected) / n_samples
        scale = 2 ** (config.n - 1)
        peaks = []
        for line in lines:
            idx = int(round(line.frequency_hz * duration)) % n_samples
            peaks.append(
                Peak(frequency_hz=line.frequency_hz, amplitude=complex(scale * bins[idx]))
            )
        out[channel] = peaks
    return out


def readout_pauli_coefficients(rho: DensityMatrix, config: SpinSystemConfig) -> dict[str, float]:
    """All Pauli coefficients with exactly one x/y factor, from spectra.

    For each qubit k the 2^(n-1) line amplitudes of its channel are
    inverted through the partner-sign table: the real parts give the
    sigma_x^k (x) z-pattern coefficients, the imaginary parts the
    sigma_y^k ones.
    """
    n = config.n
    coeffs: dict[str, float] = {}
    table = readout_peak_table(rho, config)
    for channel, peaks in table.items():
        lines = _weak_lines(config, channel)
        by_member: dict[int, list[tuple[_Line, complex]]] = {}
        for line, peak in zip(lines, peaks):
            by_member.setdefault(line.qubit, []).append((line, peak.amplitude))
        for k, entries in by_member.items():
            partners = [q for q in range(1, n + 1) if q != k]
            norm = 2 ** len(partners)
            for pattern in itertools.product((0, 1), repeat=len(partners)):
                cx = 0.0
                cy = 0.0
                for line, amp in entries:
                    wgt = 1.0
                    for b, p in zip(line.partner_bits, pattern):
                        if p:
                            wgt *= 1 - 2 * b
                    cx += wgt * amp.real
                    cy += wgt * amp.imag
                letters_x = ["I"] * n
                letters_y = ["I"] * n
                letters_x[k - 1] = "X"
                letters_y[k - 1] = "Y"
                for q, p in zip(partners, pattern):
                    if p:
                        letters_x[q - 1] = "Z"
                        letters_y[q - 1] = "Z"
                coeffs["".join(letters_x)] = cx / norm
                coeffs["".join(letters_y)] = cy / norm
    return coeffs


# Conjugation tables for the three readout settings: measuring letter q on
# the rotated state equals measuring (sign, letter) on the original state.
_SETTING_MAP = {
    "I": {"I": ("I", 1), "X": ("X", 1), "Y": ("Y", 1), "Z": ("Z", 1)},
    "X90": {"I": ("I", 1), "X": ("X", 1), "Y": ("Z", -1), "Z": ("Y", 1)},
    "Y90": {"I": ("I", 1), "X": ("Z", 1), "Y": ("Y", 1), "Z": ("X", -1)},
}
_SETTING_GATE = {"X90": "X90", "Y90": "Y90"}


def _setting_unitary(
    setting: tuple[str, ...],
    config: SpinSystemConfig,
    compiled: bool,
    pulse_amp_hz: Optional[float],
) -> np.ndarray:
    n = config.n
    gates = [
        Gate(_SETTING_GATE[s], (q,))
        for q, s in enumerate(setting, start=1)
        if s != "I"
    ]
    if not compiled:
        u = np.eye(config.dim, dtype=complex)
        for g in gates:
            u = gate_matrix(g, n) @ u
        return u
    prog = compile_circuit(
        Circuit(n, tuple(gates)), config, pulse_amp_hz or DEFAULT_PULSE_AMP_HZ
    )
    return program_unitary(prog)


def tomography_peak_tables(
    rho: DensityMatrix, config: SpinSystemConfig
) -> dict[str, dict[str, list[Peak]]]:
    """Per-setting, per-channel spectral lines seen during tomography.

    Keys are setting labels like "I,Y90"; values map channel label to the
    peak list of the rotated state. This is the raw data tomography inverts.
    """
    tables = {}
    for setting in itertools.product(("I", "X90", "Y90"), repeat=config.n):
        u = _setting_unitary(setting, config, compiled=False, pulse_amp_hz=None)
        tables[",".join(setting)] = readout_peak_table(rho.evolved(u), config)
    return tables


def tomography(
    rho: DensityMatrix,
    config: SpinSystemConfig,
    compiled_readout: bool = False,
    pulse_amp_hz: Optional[float] = None,
) -> DensityMatrix:
    """Full state reconstruction from the 3^n readout-pulse settings.

    Each setting applies {identity, X90, Y90} per qubit, reads the
    single-transverse-factor coefficients off the spectra, and maps them
    back through the rotation; every one of the 4^n - 1 coefficients is
    determined at least once (duplicates are averaged).
    """
    if config.n > 3:
        raise ValidationError("tomography supports n <= 3")
    if rho.n != config.n:
        raise ValidationError(f"state has {rho.n} qubits, machine has {config.n}")
    determinations: dict[str, list[float]] = {}
    for setting in itertools.product(("I", "X90", "Y90"), repeat=config.n):
        u = _setting_unitary(setting, config, compiled_readout, pulse_amp_hz)
        rotated = rho.evolved(u)
        measured = readout_pauli_coefficients(rotated, config)
        for q_string, value in measured.items():
            letters = []
            sign = 1
            for s, q_letter in zip(setting, q_string):
                letter, sgn = _SETTING_MAP[s][q_letter]
                letters.append(letter)
                sign *= sgn
            target = "".join(letters)
            if set(target) == {"I"}:
                continue
            determinations.setdefault(target, []).append(sign * value)
    coeffs = {label: float(np.mean(vals)) for label, vals in determinations.items()}
    missing = [
        label
        for label in map("".join, itertools.product("IXYZ", repeat=config.n))
        if label != "I" * config.n and label not in coeffs
    ]
    if missing:
        raise ValidationError(f"tomography did not determine {missing}")
    coeffs["I" * config.n] = 1.0
    return pauli_reconstruct(coeffs)

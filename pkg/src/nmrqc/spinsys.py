"""Machine model: nuclei, offsets, J network, relaxation times, Hamiltonians.

All config frequencies are in Hz; every Hamiltonian matrix is in rad/s
(the 2*pi happens here, once). Sign convention: H0 = +2*pi*nu*I_z plus
+2*pi*J couplings, and polarization > 0 means excess population in |0>.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import ValidationError
from .quantum import SIGMA_X, SIGMA_Y, SIGMA_Z, DensityMatrix, embed_single

COUPLING_MODELS = ("weak", "isotropic")


@dataclass(frozen=True)
class NucleusSpec:
    """One spin-1/2 nucleus: label, rotating-frame offset, T1/T2, polarization."""

    label: str
    offset_hz: float
    t1_s: float
    t2_s: float
    polarization: float

    def __post_init__(self):
        if self.t1_s <= 0 or self.t2_s <= 0:
            raise ValidationError(f"nucleus {self.label!r}: t1_s and t2_s must be > 0")
        if abs(self.polarization) > 1:
            raise ValidationError(f"nucleus {self.label!r}: |polarization| must be <= 1")


@dataclass(frozen=True)
class SpinSystemConfig:
    """Spin system: nuclei plus a symmetric J-coupling matrix (Hz)."""

    name: str
    nuclei: tuple[NucleusSpec, ...]
    j_hz: np.ndarray
    coupling_model: str = "weak"

    def __post_init__(self):
        n = len(self.nuclei)
        if not 1 <= n <= 6:
            raise ValidationError(f"nuclei count {n} outside 1..6")
        if self.coupling_model not in COUPLING_MODELS:
            raise ValidationError(f"coupling_model must be one of {COUPLING_MODELS}")
        j = np.array(self.j_hz, dtype=float)
        if j.shape != (n, n):
            raise ValidationError(f"j_hz shape {j.shape} != ({n}, {n})")
        if np.max(np.abs(j - j.T), initial=0.0) > 1e-12:
            raise ValidationError("j_hz must be symmetric")
        if np.any(np.diag(j) != 0.0):
            raise ValidationError("j_hz diagonal must be exactly 0")
        j.setflags(write=False)
        object.__setattr__(self, "j_hz", j)

    @property
    def n(self) -> int:
        return len(self.nuclei)

    @property
    def dim(self) -> int:
        return 2**self.n

    @property
    def channels(self) -> tuple[str, ...]:
        """Distinct nucleus labels, in first-appearance order. One RF channel each."""
        seen: list[str] = []
        for nuc in self.nuclei:
            if nuc.label not in seen:
                seen.append(nuc.label)
        return tuple(seen)

    def channel_members(self, channel: str) -> tuple[int, ...]:
        """1-based qubit indices driven by (and observed on) a channel."""
        members = tuple(k for k, nuc in enumerate(self.nuclei, start=1) if nuc.label == channel)
        if not members:
            raise ValidationError(f"no nucleus with label {channel!r}")
        return members

    def channel_of(self, qubit: int) -> str:
        return self.nuclei[qubit - 1].label

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "coupling_model": self.coupling_model,
            "nuclei": [
                {
                    "label": nuc.label,
                    "offset_hz": nuc.offset_hz,
                    "t1_s": nuc.t1_s,
                    "t2_s": nuc.t2_s,
                    "polarization": nuc.polarization,
                }
                for nuc in self.nuclei
            ],
            "j_hz": self.j_hz.tolist(),
        }


def _config_from_dict(d: dict, source: str) -> SpinSystemConfig:
    def fail(field, msg):
        raise ValidationError(f"{source}: field {field!r}: {msg}")

    if not isinstance(d, dict):
        raise ValidationError(f"{source}: top level must be a JSON object")
    nuclei = []
    raw_nuclei = d.get("nuclei")
    if not isinstance(raw_nuclei, list) or not raw_nuclei:
        fail("nuclei", "must be a nonempty list")
    for i, raw in enumerate(raw_nuclei):
        try:
            nuclei.append(
                NucleusSpec(
                    label=str(raw["label"]),
                    offset_hz=float(raw["offset_hz"]),
                    t1_s=float(raw["t1_s"]),
                    t2_s=float(raw["t2_s"]),
                    polarization=float(raw["polarization"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            fail(f"nuclei[{i}]", str(exc))
    if "j_hz" not in d:
        fail("j_hz", "missing")
    try:
        j = np.asarray(d["j_hz"], dtype=float)
    except (TypeError, ValueError) as exc:
        fail("j_hz", str(exc))
    try:
        return SpinSystemConfig(
            name=str(d.get("name", source)),
            nuclei=tuple(nuclei),
            j_hz=j,
            coupling_model=str(d.get("coupling_model", "weak")),
        )
    except ValidationError as exc:
        raise ValidationError(f"{source}: {exc}") from exc


def load_machine_config(path: Union[str, Path]) -> SpinSystemConfig:
    """Load and validate a machine-config JSON file.

    Schema: {"name", "coupling_model", "nuclei": [{label, offset_hz, t1_s,
    t2_s, polarization}], "j_hz": [[...]]}. Keys starting with "_" are
    ignored (used for notes in the shipped presets).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read machine config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return _config_from_dict(data, str(path))


def preset(name: str) -> SpinSystemConfig:
    """A packaged machine preset: "gemini" (1H/31P) or "triangulum" (3x 19F)."""
    ref = resources.files(__package__).joinpath(f"presets/{name}.json")
    try:
        data = json.loads(ref.read_text())
    except FileNotFoundError as exc:
        raise ValidationError(f"unknown preset {name!r}") from exc
    return _config_from_dict(data, f"preset:{name}")


def internal_hamiltonian(config: SpinSystemConfig) -> np.ndarray:
    """H0 in rad/s: Zeeman offsets plus J couplings.

    Weak model: sum_k 2*pi*nu_k I_z^k + sum_{j<k} 2*pi*J_jk I_z^j I_z^k,
    so the computational basis is the eigenbasis. The isotropic model
    adds the x and y coupling terms.
    """
    n = config.n
    h = np.zeros((config.dim, config.dim), dtype=complex)
    for k, nuc in enumerate(config.nuclei, start=1):
        if nuc.offset_hz != 0.0:
            h += 2 * np.pi * nuc.offset_hz * embed_single(SIGMA_Z / 2, k, n)
    paulis = (SIGMA_X, SIGMA_Y, SIGMA_Z) if config.coupling_model == "isotropic" else (SIGMA_Z,)
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            j_ab = config.j_hz[a - 1, b - 1]
            if j_ab == 0.0:
                continue
            for p in paulis:
                h += 2 * np.pi * j_ab * (embed_single(p / 2, a, n) @ embed_single(p / 2, b, n))
    return h


def control_operators(config: SpinSystemConfig) -> tuple[np.ndarray, tuple[str, ...]]:
    """Per-channel x/y drive generators, rad/s per Hz of amplitude.

    Returns (ops, channels) with ops shaped (2*len(channels), d, d), ordered
    (ch0_x, ch0_y, ch1_x, ch1_y, ...). Homonuclear spins share one channel,
    so a channel's generator sums I_x (I_y) over all its members.
    """
    n = config.n
    channels = config.channels
    ops = np.zeros((2 * len(channels), config.dim, config.dim), dtype=complex)
    for c, label in enumerate(channels):
        for k in config.channel_members(label):
            ops[2 * c] += 2 * np.pi * embed_single(SIGMA_X / 2, k, n)
            ops[2 * c + 1] += 2 * np.pi * embed_single(SIGMA_Y / 2, k, n)
    return ops, channels


def rf_hamiltonian(
    config: SpinSystemConfig,
    amplitudes_hz: Sequence[float],
    phases_rad: Sequence[float],
) -> np.ndarray:
    """Rotating-frame RF Hamiltonian, rad/s, one (amplitude, phase) per channel.

    H_rf = sum_ch 2*pi*u_ch * (cos(phi) * sum I_x + sin(phi) * sum I_y)
    with the sums running over the channel's member spins.
    """
    channels = config.channels
    if len(amplitudes_hz) != len(channels) or len(phases_rad) != len(channels):
        raise ValidationError(
            f"need one amplitude and phase per channel ({len(channels)}: {channels})"
        )
    ops, _ = control_operators(config)
    h = np.zeros((config.dim, config.dim), dtype=complex)
    for c in range(len(channels)):
        u = float(amplitudes_hz[c])
        if u == 0.0:
            continue
        phi = float(phases_rad[c])
        h += u * (np.cos(phi) * ops[2 * c] + np.sin(phi) * ops[2 * c + 1])
    return h


def thermal_state(config: SpinSystemConfig) -> DensityMatrix:
    """High-temperature equilibrium state 2^-n (I + sum_k eps_k sigma_z^k).

    Rejects polarization sets large enough to break positivity
    (sum_k |eps_k| > 1).
    """
    n = config.n
    m = np.eye(config.dim, dtype=complex)
    for k, nuc in enumerate(config.nuclei, start=1):
        m += nuc.polarization * embed_single(SIGMA_Z, k, n)
    m /= config.dim
    total = sum(abs(nuc.polarization) for nuc in config.nuclei)
    if total > 1.0 + 1e-12:
        raise ValidationError(
            f"polarizations sum to {total:.3g} > 1; thermal state would not be positive"
        )
    return DensityMatrix(m)

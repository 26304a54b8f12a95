"""Effective incoherent noise model: depolarizing gates, SPAM flips, idle dephasing
and the asymmetric channel acting on data qubits during mid-circuit detection.

Scalar ``sample_*`` functions draw one fault for one location and are used by the
per-shot tableau engine.  The ``batch_*`` helpers draw the same channels for a
block of shots at once and are used by the frame sampler.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import circuit as C
from .pauli import PauliString

# Pauli letters encoded as (x, z) bit pairs; index 0 is the identity.
PAULI_XZ = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=bool)  # I X Y Z

# The 15 non-identity two-qubit Paulis sigma_k (x) sigma_l, ordered by (k, l).
TWO_QUBIT_PAULIS = tuple((k, l) for k in range(4) for l in range(4) if (k, l) != (0, 0))


@dataclass(frozen=True)
class NoiseModel:
    p_1q: float = 0.0036
    p_2q: float = 0.027
    p_init: float = 0.003
    p_meas: float = 0.003
    p_mid_x: float = 0.011
    p_mid_y: float = 0.024
    p_mid_z: float = 0.035
    T2: float = 50_000.0
    idle_enabled: bool = True
    mid_circuit_enabled: bool = True
    # extra dephasing time (us) charged to data qubits per mid-circuit detection;
    # 0 means the mid-circuit channel already accounts for it
    mid_circuit_idle_time: float = 0.0

    def __post_init__(self):
        for name in ("p_1q", "p_2q", "p_init", "p_meas", "p_mid_x", "p_mid_y", "p_mid_z"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} is not a probability")
        if self.p_mid_x + self.p_mid_y + self.p_mid_z > 1.0:
            raise ValueError("mid-circuit Pauli rates sum to more than 1")
        if not self.T2 > 0:
            raise ValueError(f"T2 must be positive, got {self.T2}")
        if self.mid_circuit_idle_time < 0:
            raise ValueError("mid_circuit_idle_time must be non-negative")

    @classmethod
    def default(cls) -> "NoiseModel":
        return cls()

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, idle_enabled=False, mid_circuit_enabled=False)

    @classmethod
    def two_qubit_only(cls, p_2q: float = 0.025) -> "NoiseModel":
        return dataclasses.replace(cls.noiseless(), p_2q=p_2q)

    def replace(self, **changes) -> "NoiseModel":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict, base: "NoiseModel | None" = None) -> "NoiseModel":
        base = base or cls()
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown noise parameters: {sorted(unknown)}")
        return dataclasses.replace(base, **data)

    @property
    def p_mid(self) -> tuple[float, float, float]:
        if not self.mid_circuit_enabled:
            return (0.0, 0.0, 0.0)
        return (self.p_mid_x, self.p_mid_y, self.p_mid_z)

    def p_idle(self, duration: float) -> float:
        if not self.idle_enabled:
            return 0.0
        return idle_dephasing_prob(duration, self.T2)

    @property
    def is_noiseless(self) -> bool:
        return (
            self.p_1q == self.p_2q == self.p_init == self.p_meas == 0.0
            and sum(self.p_mid) == 0.0
            and not self.idle_enabled
        )


PROFILES = {
    "paper-default": NoiseModel(),
    "noiseless": NoiseModel.noiseless(),
    "two-qubit-only": NoiseModel.two_qubit_only(0.025),
}


def idle_dephasing_prob(t: float, T2: float) -> float:
    """Probability of a Z fault on a qubit idling for ``t`` microseconds."""
    if t < 0:
        raise ValueError(f"idle time must be non-negative, got {t}")
    if T2 <= 0:
        raise ValueError(f"T2 must be positive, got {T2}")
    return 0.5 * -math.expm1(-t / T2)


# -- scalar samplers ---------------------------------------------------------


def sample_gate_fault(
    kind: str, qubits: Sequence[int], n: int, model: NoiseModel, rng: np.random.Generator
) -> PauliString | None:
    """Fault applied after an ideal gate, or None."""
    if kind in C.ONE_QUBIT_GATES:
        if rng.random() >= model.p_1q:
            return None
        letter = "XYZ"[rng.integers(3)]
        return PauliString.from_sparse(n, {qubits[0]: letter})
    if kind in C.TWO_QUBIT_GATES:
        if rng.random() >= model.p_2q:
            return None
        k, l = TWO_QUBIT_PAULIS[rng.integers(15)]
        return PauliString.from_sparse(n, {qubits[0]: "IXYZ"[k], qubits[1]: "IXYZ"[l]})
    raise ValueError(f"{kind!r} is not a gate")


def sample_spam_fault(kind: str, model: NoiseModel, rng: np.random.Generator) -> bool:
    """True when an X fault hits after a preparation or before a measurement."""
    if kind in C.PREPARATIONS:
        return bool(rng.random() < model.p_init)
    if kind in C.MEASUREMENTS:
        return bool(rng.random() < model.p_meas)
    raise ValueError(f"{kind!r} is neither a preparation nor a measurement")


def sample_idle_faults(
    instruction: C.Instruction, n_qubits: int, model: NoiseModel, rng: np.random.Generator
) -> list[int]:
    """Qubits that pick up a Z fault while idling during ``instruction``."""
    if instruction.kind not in C.GATES:
        raise ValueError("idle noise is charged for gate instructions only")
    p = model.p_idle(instruction.duration)
    if p == 0.0:
        return []
    idle = [q for q in range(n_qubits) if q not in instruction.qubits]
    hits = rng.random(len(idle)) < p
    return [q for q, h in zip(idle, hits) if h]


def sample_mid_circuit_faults(
    data_qubits: Sequence[int], model: NoiseModel, rng: np.random.Generator
) -> dict[int, str]:
    """Independent X/Y/Z faults on each data qubit for one mid-circuit detection."""
    px, py, pz = model.p_mid
    p_idle = model.p_idle(model.mid_circuit_idle_time) if model.mid_circuit_idle_time else 0.0
    out: dict[int, str] = {}
    for q in data_qubits:
        u = rng.random()
        letter = "X" if u < px else "Y" if u < px + py else "Z" if u < px + py + pz else None
        if p_idle and rng.random() < p_idle:
            letter = {None: "Z", "X": "Y", "Y": "X", "Z": None}[letter]
        if letter is not None:
            out[q] = letter
    return out


# -- batched samplers --------------------------------------------------------


def batch_bernoulli(rng: np.random.Generator, shape: tuple[int, int], p: float) -> tuple[np.ndarray, np.ndarray]:
    """Positions of independent Bernoulli(p) hits in an array of ``shape``.

    Returns (row, column) index arrays.  The hit count is binomial and the
    positions are a uniform subset, which is exactly i.i.d. Bernoulli sampling
    but cheap when p is small.
    """
    total = shape[0] * shape[1]
    if p <= 0.0 or total == 0:
        empty = np.empty(0, np.intp)
        return empty, empty
    if p >= 0.25:
        flat = np.flatnonzero(rng.random(total) < p)
    else:
        k = int(rng.binomial(total, p))
        flat = rng.choice(total, size=k, replace=False) if k else np.empty(0, np.intp)
    return np.unravel_index(flat, shape)


def batch_paulis(rng: np.random.Generator, count: int, weights: Sequence[float]) -> np.ndarray:
    """Draw ``count`` indices into ``weights`` (normalised)."""
    w = np.asarray(weights, dtype=float)
    if count == 0:
        return np.empty(0, np.intp)
    if np.allclose(w, w[0]):
        return rng.integers(len(w), size=count)
    return rng.choice(len(w), size=count, p=w / w.sum())

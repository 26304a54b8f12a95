"""Exhaustive single-fault enumeration and fault-tolerance checking.

Every fault location of a circuit is listed with every Pauli the noise model
could put there.  Each fault becomes one shot of the frame sampler under the
noiseless model, and a circuit passes when every shot either decodes to the
right logical state or is discarded by a verification flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import circuit as C
from .builders import Experiment
from .engine import FrameProgram
from .noise import NoiseModel, TWO_QUBIT_PAULIS
from .protocol import BatchDecoder

_LETTERS = "IXYZ"
_XZ = {"X": (True, False), "Y": (True, True), "Z": (False, True)}


@dataclass(frozen=True)
class Fault:
    index: int  # instruction index
    paulis: tuple[tuple[int, str], ...]  # (qubit, letter)
    site: str  # gate, prep, measure, mid_circuit, idle

    def describe(self, circuit: C.Circuit) -> str:
        ins = circuit.instructions[self.index]
        ops = " ".join(f"{l}{q}" for q, l in self.paulis)
        where = "before" if self.site == "measure" else "after"
        return f"{ops} {where} #{self.index} {ins.to_text()} ({self.site})"


def fault_locations(circuit: C.Circuit, include_idle: bool = True) -> list[Fault]:
    """All single faults: E1 at 1q gates, preparations and measurements, E2 at
    CNOTs, X/Y/Z per data qubit at mid-circuit markers, Z on idling qubits."""
    out: list[Fault] = []
    data = circuit.qubits_with_role("data")
    for i, ins in enumerate(circuit.instructions):
        k = ins.kind
        if k in C.ONE_QUBIT_GATES or k in C.PREPARATIONS or k in C.MEASUREMENTS:
            site = "gate" if k in C.GATES else "prep" if k in C.PREPARATIONS else "measure"
            out += [Fault(i, ((ins.qubits[0], l),), site) for l in "XYZ"]
        elif k == C.CNOT:
            a, b = ins.qubits
            for p, q in TWO_QUBIT_PAULIS:
                ops = tuple((qq, _LETTERS[l]) for qq, l in ((a, p), (b, q)) if l)
                out.append(Fault(i, ops, "gate"))
        elif k == C.MID_CIRCUIT:
            out += [Fault(i, ((q, l),), "mid_circuit") for q in data for l in "XYZ"]
        if include_idle and k in C.GATES:
            out += [
                Fault(i, ((q, "Z"),), "idle")
                for q in range(circuit.n_qubits)
                if q not in ins.qubits
            ]
    return out


def sample_with_faults(program: FrameProgram, faults: list[Fault], seed: int = 0):
    """One frame-sampler shot per fault."""
    grouped: dict[tuple[int, int, bool, bool], list[int]] = {}
    for s, f in enumerate(faults):
        for q, letter in f.paulis:
            grouped.setdefault((f.index, q) + _XZ[letter], []).append(s)
    injections: dict[int, list] = {}
    for (i, q, x, z), shots in grouped.items():
        injections.setdefault(i, []).append((np.array(shots, dtype=np.intp), q, x, z))
    return program.sample(len(faults), np.random.default_rng(seed), injections)


@dataclass
class FaultReport:
    name: str
    n_faults: int
    n_discarded: int
    failures: list[Fault] = field(default_factory=list)
    circuit: C.Circuit | None = None

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: {self.n_faults} faults, {self.n_discarded} discarded, "
            f"{len(self.failures)} logical failures"
        )


def check_fault_tolerance(
    experiment: Experiment,
    name: str = "",
    include_idle: bool = True,
    require_flag: bool = True,
    seed: int = 0,
) -> FaultReport:
    circuit = experiment.circuit
    faults = fault_locations(circuit, include_idle)
    program = FrameProgram(circuit, NoiseModel.noiseless())
    batch = sample_with_faults(program, faults, seed)
    decoded = BatchDecoder(experiment.layout, require_flag).decode(batch)
    bad = np.flatnonzero(decoded.kept & ~decoded.success)
    return FaultReport(
        name or f"{experiment.layout.code.name}/{experiment.layout.protocol}/{experiment.layout.state}",
        len(faults),
        int((~decoded.kept).sum()),
        [faults[s] for s in bad],
        circuit,
    )

"""Noisy stabilizer-circuit execution.

Two interchangeable back ends share the same noise semantics:

* :func:`run_shot` runs one shot on a full tableau and handles arbitrary
  feed-forward.  It is exact and slow.
* :func:`run_many` samples blocks of shots with a Pauli-frame simulator that
  tracks, per shot, the Pauli difference from one noiseless reference run.
  Measurement randomness is recovered by re-randomising the Z (or X) frame
  component after every reset and measurement, which is a gauge of the
  post-measurement state.

Conditional blocks in the frame sampler are executed per shot under a mask.
This is only sound when running the block on the noiseless reference leaves the
stabilizer state unchanged, which :func:`reference_sample` verifies.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import circuit as C
from .noise import TWO_QUBIT_PAULIS, NoiseModel, PAULI_XZ, batch_bernoulli, batch_paulis
from . import noise as N
from .pauli import PauliString
from .tableau import Tableau

DEFAULT_BLOCK_SIZE = 8192
WORKERS_ENV = "STEANEQEC_WORKERS"

DISCARD_NONE = ""
DISCARD_REASONS = (C.TAG_VERIFY_ENCODING, C.TAG_VERIFY_GHZ, "postselect_branch")

_P2_X = np.array([[PAULI_XZ[k][0], PAULI_XZ[l][0]] for k, l in TWO_QUBIT_PAULIS], dtype=bool)
_P2_Z = np.array([[PAULI_XZ[k][1], PAULI_XZ[l][1]] for k, l in TWO_QUBIT_PAULIS], dtype=bool)
_P1_X = PAULI_XZ[1:, 0].copy()
_P1_Z = PAULI_XZ[1:, 1].copy()


class ExecutionError(RuntimeError):
    pass


@dataclass
class ShotOutcome:
    records: dict[str, int]
    discarded: bool = False
    reason: str = DISCARD_NONE
    executed_path: list[bool] = field(default_factory=list)


def shot_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream keyed on (seed, index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _discard_reason(circuit: C.Circuit, records: Mapping[str, int]) -> str:
    for rec in circuit.records:
        tag = circuit.record_tags.get(rec)
        if tag in C.VERIFICATION_TAGS and records.get(rec):
            return tag
    return DISCARD_NONE


# -- tableau back end --------------------------------------------------------


def _term_value(term: str, records: Mapping[str, int]) -> int:
    head, latest = C.parse_term(term)
    if head not in records:
        raise ExecutionError(f"predicate references missing record {head!r}")
    value = records[head]
    for r in latest:
        if r in records:
            return value ^ records[r]
    return value


def run_shot(
    circuit: C.Circuit,
    model: NoiseModel,
    rng: np.random.Generator,
    injections: Mapping[int, PauliString] | None = None,
) -> ShotOutcome:
    """Execute one noisy shot.

    ``injections`` maps an instruction index to an extra Pauli applied right
    after that instruction (right before it, for measurements).
    """
    injections = injections or {}
    n = circuit.n_qubits
    data = circuit.qubits_with_role("data")
    tab = Tableau(n)
    records: dict[str, int] = {}
    path: list[bool] = []
    skip_depth = 0
    for i, ins in enumerate(circuit.instructions):
        kind = ins.kind
        if kind == C.IF:
            if skip_depth:
                skip_depth += 1
                continue
            taken = any(_term_value(t, records) for t in ins.condition)
            path.append(taken)
            if not taken:
                skip_depth = 1
            continue
        if kind == C.END_IF:
            if skip_depth:
                skip_depth -= 1
            continue
        if skip_depth:
            continue
        extra = injections.get(i)
        if kind in C.MEASUREMENTS:
            q = ins.qubits[0]
            if extra is not None:
                tab.apply_pauli(extra)
            if kind == C.MEASURE_Z:
                if N.sample_spam_fault(kind, model, rng):
                    tab.pauli(q, "X")
                bit = tab.measure(q, rng)
            else:
                bit = tab.measure_x(q, rng) ^ int(N.sample_spam_fault(kind, model, rng))
            records[ins.record] = bit
            continue
        if kind in C.PREPARATIONS:
            q = ins.qubits[0]
            tab.reset(q)
            if N.sample_spam_fault(kind, model, rng):
                tab.pauli(q, "X")
        elif kind == C.MID_CIRCUIT:
            for q, letter in N.sample_mid_circuit_faults(data, model, rng).items():
                tab.pauli(q, letter)
        elif kind in C.GATES:
            if kind == C.H:
                tab.h(ins.qubits[0])
            elif kind == C.CNOT:
                tab.cnot(*ins.qubits)
            else:
                tab.pauli(ins.qubits[0], kind[-1].upper())
            fault = N.sample_gate_fault(kind, ins.qubits, n, model, rng)
            if fault is not None:
                tab.apply_pauli(fault)
            for q in N.sample_idle_faults(ins, n, model, rng):
                tab.pauli(q, "Z")
        if extra is not None:
            tab.apply_pauli(extra)
    reason = _discard_reason(circuit, records)
    return ShotOutcome(records, bool(reason), reason, path)


def reference_sample(circuit: C.Circuit) -> np.ndarray:
    """Noiseless record values with every conditional block executed.

    Random outcomes are fixed to 0.  Raises :class:`ExecutionError` when a
    conditional block changes the reference state, because masking that block
    per shot would then be unsound.
    """
    tab = Tableau(circuit.n_qubits)
    index = {r: j for j, r in enumerate(circuit.records)}
    ref = np.zeros(len(index), dtype=bool)
    snapshots: list[bytes] = []
    for ins in circuit.instructions:
        kind = ins.kind
        if kind == C.IF:
            snapshots.append(tab.canonical_form())
        elif kind == C.END_IF:
            if tab.canonical_form() != snapshots.pop():
                raise ExecutionError("conditional block is not neutral on the reference state")
        elif kind == C.MEASURE_Z:
            ref[index[ins.record]] = tab.measure(ins.qubits[0])
        elif kind == C.MEASURE_X:
            ref[index[ins.record]] = tab.measure_x(ins.qubits[0])
        elif kind in C.PREPARATIONS:
            tab.reset(ins.qubits[0])
        elif kind == C.H:
            tab.h(ins.qubits[0])
        elif kind == C.CNOT:
            tab.cnot(*ins.qubits)
        elif kind in (C.PAULI_X, C.PAULI_Y, C.PAULI_Z):
            tab.pauli(ins.qubits[0], kind[-1].upper())
    return ref


# -- frame back end ----------------------------------------------------------


@dataclass
class SampleBatch:
    """Outcomes of many shots.  ``bits[j, s]`` is record j of shot s."""

    records: list[str]
    bits: np.ndarray
    present: np.ndarray
    discard_code: np.ndarray  # 0 = kept, otherwise 1 + index into DISCARD_REASONS

    def __post_init__(self):
        self.index = {r: j for j, r in enumerate(self.records)}

    @property
    def shots(self) -> int:
        return self.bits.shape[1]

    @property
    def discarded(self) -> np.ndarray:
        return self.discard_code > 0

    def __getitem__(self, record: str) -> np.ndarray:
        return self.bits[self.index[record]]

    def rows(self, records: Sequence[str]) -> np.ndarray:
        return self.bits[[self.index[r] for r in records]]

    def outcome(self, shot: int) -> ShotOutcome:
        recs = {r: int(self.bits[j, shot]) for j, r in enumerate(self.records) if self.present[j, shot]}
        code = int(self.discard_code[shot])
        reason = DISCARD_REASONS[code - 1] if code else DISCARD_NONE
        return ShotOutcome(recs, bool(code), reason)

    def __iter__(self):
        return (self.outcome(s) for s in range(self.shots))

    @classmethod
    def concatenate(cls, batches: Sequence["SampleBatch"]) -> "SampleBatch":
        first = batches[0]
        return cls(
            list(first.records),
            np.concatenate([b.bits for b in batches], axis=1),
            np.concatenate([b.present for b in batches], axis=1),
            np.concatenate([b.discard_code for b in batches]),
        )


class FrameProgram:
    """A circuit compiled for block sampling under one noise model."""

    def __init__(self, circuit: C.Circuit, model: NoiseModel):
        self.circuit = circuit
        self.model = model
        self.n = circuit.n_qubits
        self.records = circuit.records
        self.reference = reference_sample(circuit)
        index = {r: j for j, r in enumerate(self.records)}
        self.data = np.array(circuit.qubits_with_role("data"), dtype=np.intp)
        everyone = np.arange(self.n)
        ops = []
        for ins in circuit.instructions:
            idle = None
            p_idle = 0.0
            if ins.kind in C.GATES:
                p_idle = model.p_idle(ins.duration)
                idle = np.setdiff1d(everyone, ins.qubits)
            rec = index[ins.record] if ins.record is not None else -1
            cond = [
                (index[head], [index[r] for r in latest])
                for head, latest in map(C.parse_term, ins.condition)
            ]
            ops.append((ins.kind, ins.qubits, rec, idle, p_idle, cond))
        self.ops = ops
        self.verify_rows = [
            (index[r], DISCARD_REASONS.index(circuit.record_tags[r]) + 1)
            for r in self.records
            if circuit.record_tags.get(r) in C.VERIFICATION_TAGS
        ]

    def sample(
        self,
        size: int,
        rng: np.random.Generator,
        injections: Mapping[int, Sequence[tuple[np.ndarray, int, bool, bool]]] | None = None,
    ) -> SampleBatch:
        """Sample ``size`` shots.

        ``injections[i]`` lists (shot indices, qubit, x, z) Paulis to add right
        after instruction i (right before it, for measurements).
        """
        model = self.model
        injections = injections or {}
        x = np.zeros((self.n, size), dtype=bool)
        z = rng.integers(0, 2, size=(self.n, size), dtype=np.uint8).astype(bool)
        bits = np.zeros((len(self.records), size), dtype=bool)
        present = np.zeros((len(self.records), size), dtype=bool)
        masks: list[np.ndarray | None] = []
        active: np.ndarray | None = None

        def inject(i):
            for shots, q, bx, bz in injections.get(i, ()):
                if active is not None:
                    shots = shots[active[shots]]
                if bx:
                    x[q, shots] ^= True
                if bz:
                    z[q, shots] ^= True

        def hits(p, rows=1):
            r, c = batch_bernoulli(rng, (rows, size), p)
            if active is not None and c.size:
                keep = active[c]
                r, c = r[keep], c[keep]
            return r, c

        def gauge(q, arr):
            fresh = rng.integers(0, 2, size=size, dtype=np.uint8).astype(bool)
            if active is None:
                arr[q] = fresh
            else:
                arr[q] = np.where(active, fresh, arr[q])

        for i, (kind, qs, rec, idle, p_idle, cond) in enumerate(self.ops):
            if kind == C.IF:
                taken = np.zeros(size, dtype=bool)
                for head, latest in cond:
                    val = bits[head].astype(bool)
                    seen = np.zeros(size, dtype=bool)
                    for r in latest:
                        use = present[r] & ~seen
                        val ^= bits[r].astype(bool) & use
                        seen |= present[r]
                    taken |= val
                masks.append(active)
                active = taken if active is None else (active & taken)
                continue
            if kind == C.END_IF:
                active = masks.pop()
                continue
            if kind in C.MEASUREMENTS:
                q = qs[0]
                inject(i)
                _, flips = hits(model.p_meas)
                if kind == C.MEASURE_Z:
                    x[q, flips] ^= True
                    val = x[q] ^ self.reference[rec]
                    gauge(q, z)
                else:
                    val = z[q] ^ self.reference[rec]
                    val[flips] ^= True
                    gauge(q, x)
                if active is None:
                    bits[rec] = val
                    present[rec] = True
                else:
                    bits[rec] = val & active
                    present[rec] = active
                continue
            if kind in C.PREPARATIONS:
                q = qs[0]
                if active is None:
                    x[q] = False
                else:
                    x[q] &= ~active
                gauge(q, z)
                _, c = hits(model.p_init)
                x[q, c] ^= True
            elif kind == C.MID_CIRCUIT:
                px, py, pz = model.p_mid
                total = px + py + pz
                if total > 0 and self.data.size:
                    r, c = hits(total, self.data.size)
                    kinds = batch_paulis(rng, c.size, (px, py, pz))
                    qq = self.data[r]
                    x[qq, c] ^= kinds < 2
                    z[qq, c] ^= kinds > 0
                if model.mid_circuit_idle_time:
                    r, c = hits(model.p_idle(model.mid_circuit_idle_time), self.data.size)
                    z[self.data[r], c] ^= True
            elif kind in C.GATES:
                if kind == C.H:
                    q = qs[0]
                    if active is None:
                        x[q], z[q] = z[q].copy(), x[q].copy()
                    else:
                        nx = np.where(active, z[q], x[q])
                        z[q] = np.where(active, x[q], z[q])
                        x[q] = nx
                elif kind == C.CNOT:
                    a, b = qs
                    if active is None:
                        x[b] ^= x[a]
                        z[a] ^= z[b]
                    else:
                        x[b] ^= x[a] & active
                        z[a] ^= z[b] & active
                # ideal Pauli gates live in the reference; the frame is unchanged
                if kind == C.CNOT:
                    _, c = hits(model.p_2q)
                    if c.size:
                        t = rng.integers(15, size=c.size)
                        for k in range(2):
                            x[qs[k], c] ^= _P2_X[t, k]
                            z[qs[k], c] ^= _P2_Z[t, k]
                else:
                    _, c = hits(model.p_1q)
                    if c.size:
                        t = rng.integers(3, size=c.size)
                        x[qs[0], c] ^= _P1_X[t]
                        z[qs[0], c] ^= _P1_Z[t]
                if p_idle > 0.0 and idle.size:
                    r, c = hits(p_idle, idle.size)
                    z[idle[r], c] ^= True
            inject(i)

        discard = np.zeros(size, dtype=np.int8)
        for row, code in self.verify_rows:
            discard = np.where((discard == 0) & bits[row], code, discard).astype(np.int8)
        return SampleBatch(list(self.records), bits.astype(np.uint8), present, discard)


def block_rng(seed: int, block: int) -> np.random.Generator:
    return shot_rng(seed, block)


def _sample_block(args):
    program, seed, block, size = args
    return program.sample(size, block_rng(seed, block))


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    return max(1, int(value)) if value else 1


def run_many(
    circuit: C.Circuit | FrameProgram,
    model: NoiseModel | None = None,
    shots: int = 1,
    seed: int = 0,
    workers: int | None = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> SampleBatch:
    """Sample ``shots`` shots in fixed-size blocks.

    Block b draws from a stream keyed on (seed, b), and blocks are concatenated
    in index order, so the result does not depend on ``workers``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    program = circuit if isinstance(circuit, FrameProgram) else FrameProgram(circuit, model)
    workers = default_workers() if workers is None else workers
    jobs = [
        (program, seed, b, min(block_size, shots - b * block_size))
        for b in range((shots + block_size - 1) // block_size)
    ]
    if workers <= 1 or len(jobs) == 1:
        parts = [_sample_block(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sample_block, jobs))
    return SampleBatch.concatenate(parts)

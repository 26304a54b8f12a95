"""Timed Clifford circuit representation with measurement records and feed-forward.

Circuits are flat instruction lists.  A conditional block is delimited by
``conditional_begin`` / ``conditional_end``; its predicate is "any of these
terms reads 1".  A term is either a record id ``a`` or ``a^b|c|...``, meaning
``a`` XOR the most recent of ``b, c, ...`` that was actually written (0 if none
was).  The second form lets a controller compare a fresh syndrome bit with the
last value it saw, even when earlier readouts were skipped.

``mid_circuit`` marks the moment a mid-circuit detection happens, at which
point every data qubit is exposed to the mid-circuit channel.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

PREPARE_0 = "prepare_0"
RESET = "reset"
H = "hadamard"
CNOT = "cnot"
PAULI_X = "pauli_x"
PAULI_Y = "pauli_y"
PAULI_Z = "pauli_z"
MEASURE_Z = "measure_z"
MEASURE_X = "measure_x"
MID_CIRCUIT = "mid_circuit"
IF = "conditional_begin"
END_IF = "conditional_end"

ONE_QUBIT_GATES = frozenset({H, PAULI_X, PAULI_Y, PAULI_Z})
TWO_QUBIT_GATES = frozenset({CNOT})
GATES = ONE_QUBIT_GATES | TWO_QUBIT_GATES
PREPARATIONS = frozenset({PREPARE_0, RESET})
MEASUREMENTS = frozenset({MEASURE_Z, MEASURE_X})
MARKERS = frozenset({MID_CIRCUIT, IF, END_IF})
KINDS = GATES | PREPARATIONS | MEASUREMENTS | MARKERS

# microseconds, gate durations include optics settling time
TWO_QUBIT_DURATION = 322.5
ONE_QUBIT_DURATION = 25.0

ROLES = ("data", "auxiliary", "flag")

# record tags; shots with a nonzero verification record are discarded
TAG_SYNDROME = "syndrome"
TAG_DATA = "data"
TAG_VERIFY_ENCODING = "encoding_verification"
TAG_VERIFY_GHZ = "ghz_flag"
TAG_RETRY = "verification_retry"  # failed attempt that triggers a re-preparation
VERIFICATION_TAGS = frozenset({TAG_VERIFY_ENCODING, TAG_VERIFY_GHZ})
RECORD_TAGS = frozenset({TAG_SYNDROME, TAG_DATA, TAG_RETRY}) | VERIFICATION_TAGS

_TEXT_NAMES = {
    PREPARE_0: "PREPARE_0",
    RESET: "RESET",
    H: "H",
    CNOT: "CNOT",
    PAULI_X: "X",
    PAULI_Y: "Y",
    PAULI_Z: "Z",
    MEASURE_Z: "MEASURE_Z",
    MEASURE_X: "MEASURE_X",
    MID_CIRCUIT: "MID_CIRCUIT",
    IF: "IF_ANY",
    END_IF: "END_IF",
}
_FROM_TEXT = {v: k for k, v in _TEXT_NAMES.items()}


class CircuitError(ValueError):
    """Structural problem in a circuit (nesting, records, roles, budget)."""


def parse_term(term: str) -> tuple[str, tuple[str, ...]]:
    """Split a predicate term into (record, fallback records)."""
    head, _, tail = term.partition("^")
    return head, tuple(tail.split("|")) if tail else ()


def term_records(term: str) -> tuple[str, ...]:
    head, tail = parse_term(term)
    return (head,) + tail


def make_term(record: str, latest: Sequence[str] = ()) -> str:
    return record + ("^" + "|".join(latest) if latest else "")


def default_duration(kind: str) -> float:
    if kind in TWO_QUBIT_GATES:
        return TWO_QUBIT_DURATION
    if kind in ONE_QUBIT_GATES:
        return ONE_QUBIT_DURATION
    return 0.0


@dataclass(frozen=True)
class Instruction:
    kind: str
    qubits: tuple[int, ...] = ()
    record: str | None = None
    duration: float = 0.0
    condition: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CircuitError(f"unknown instruction kind {self.kind!r}")
        arity = 2 if self.kind in TWO_QUBIT_GATES else 0 if self.kind in MARKERS else 1
        if len(self.qubits) != arity:
            raise CircuitError(f"{self.kind} takes {arity} operand(s), got {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise CircuitError(f"{self.kind} operands must be distinct: {self.qubits}")
        if (self.record is None) == (self.kind in MEASUREMENTS):
            raise CircuitError(f"{self.kind} record mismatch: {self.record!r}")
        if self.kind == IF and not self.condition:
            raise CircuitError("conditional_begin needs at least one record in its predicate")

    def to_text(self) -> str:
        parts = [_TEXT_NAMES[self.kind]]
        parts += [str(q) for q in self.qubits]
        parts += list(self.condition)
        if self.record is not None:
            parts += ["->", self.record]
        if self.kind in GATES or self.duration:
            parts.append(f"@{self.duration:g}")
        return " ".join(parts)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    instructions: tuple[Instruction, ...]
    roles: tuple[str, ...]
    record_tags: dict[str, str] = field(default_factory=dict)

    @property
    def records(self) -> list[str]:
        """Record ids in declaration order."""
        return [ins.record for ins in self.instructions if ins.record is not None]

    def qubits_with_role(self, role: str) -> list[int]:
        return [q for q, r in enumerate(self.roles) if r == role]

    def count(self, kind: str) -> int:
        return sum(1 for ins in self.instructions if ins.kind == kind)

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self) -> Iterator[Instruction]:
        return iter(self.instructions)

    def to_text(self) -> str:
        lines = [f"QUBITS {self.n_qubits}", "ROLES " + " ".join(self.roles)]
        for ins in self.instructions:
            line = ins.to_text()
            if ins.record is not None and self.record_tags.get(ins.record, TAG_SYNDROME) != TAG_SYNDROME:
                line += f" [{self.record_tags[ins.record]}]"
            lines.append(line)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        n_qubits = None
        roles: tuple[str, ...] = ()
        instructions = []
        tags: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            words = line.split()
            head = words[0]
            if head == "QUBITS":
                n_qubits = int(words[1])
                continue
            if head == "ROLES":
                roles = tuple(words[1:])
                continue
            if head not in _FROM_TEXT:
                raise CircuitError(f"line {lineno}: unknown instruction {head!r}")
            kind = _FROM_TEXT[head]
            duration = 0.0
            tag = None
            record = None
            rest = words[1:]
            if rest and rest[-1].startswith("[") and rest[-1].endswith("]"):
                tag = rest.pop()[1:-1]
            if rest and rest[-1].startswith("@"):
                duration = float(rest.pop()[1:])
            if "->" in rest:
                i = rest.index("->")
                record = rest[i + 1]
                rest = rest[:i]
            if kind == IF:
                instructions.append(Instruction(kind, (), None, duration, tuple(rest)))
            else:
                instructions.append(Instruction(kind, tuple(int(w) for w in rest), record, duration))
            if record is not None:
                tags[record] = tag or TAG_SYNDROME
        if n_qubits is None:
            raise CircuitError("missing QUBITS header")
        if not roles:
            roles = ("data",) * n_qubits
        return cls(n_qubits, tuple(instructions), roles, tags)


def validate(circuit: Circuit, qubit_budget: int | None = None) -> Circuit:
    """Check nesting, record uniqueness, predicate ordering, roles and budget.

    Returns the circuit unchanged so it can be used inline.
    """
    if len(circuit.roles) != circuit.n_qubits:
        raise CircuitError(f"{len(circuit.roles)} roles for {circuit.n_qubits} qubits")
    bad_roles = set(circuit.roles) - set(ROLES)
    if bad_roles:
        raise CircuitError(f"unknown qubit roles {sorted(bad_roles)}")
    if qubit_budget is not None and circuit.n_qubits > qubit_budget:
        raise CircuitError(f"circuit uses {circuit.n_qubits} qubits, budget is {qubit_budget}")
    seen: set[str] = set()
    depth = 0
    for i, ins in enumerate(circuit.instructions):
        for q in ins.qubits:
            if not 0 <= q < circuit.n_qubits:
                raise CircuitError(f"instruction {i} ({ins.kind}) addresses qubit {q}")
        if ins.kind == IF:
            missing = [r for t in ins.condition for r in term_records(t) if r not in seen]
            if missing:
                raise CircuitError(f"instruction {i}: predicate uses undeclared records {missing}")
            depth += 1
        elif ins.kind == END_IF:
            depth -= 1
            if depth < 0:
                raise CircuitError(f"instruction {i}: conditional_end without begin")
        if ins.record is not None:
            if any(c in ins.record for c in "^|[]# ") or ins.record == "->":
                raise CircuitError(f"record id {ins.record!r} contains a reserved character")
            if ins.record in seen:
                raise CircuitError(f"record {ins.record!r} written twice")
            seen.add(ins.record)
            tag = circuit.record_tags.get(ins.record, TAG_SYNDROME)
            if tag not in RECORD_TAGS:
                raise CircuitError(f"record {ins.record!r} has unknown tag {tag!r}")
            if tag in VERIFICATION_TAGS | {TAG_RETRY} and circuit.roles[ins.qubits[0]] == "data":
                raise CircuitError(f"verification record {ins.record!r} measured on a data qubit")
    if depth:
        raise CircuitError("unterminated conditional block")
    stray = set(circuit.record_tags) - seen
    if stray:
        raise CircuitError(f"tags for records that are never written: {sorted(stray)}")
    return circuit


def _prefix_term(term: str, prefix: str) -> str:
    head, tail = parse_term(term)
    return make_term(prefix + head, [prefix + r for r in tail])


class CircuitBuilder:
    """Mutable helper that accumulates instructions and record tags."""

    def __init__(self, roles: Sequence[str]):
        self.roles = list(roles)
        self.instructions: list[Instruction] = []
        self.record_tags: dict[str, str] = {}

    @property
    def n_qubits(self) -> int:
        return len(self.roles)

    def add(self, kind: str, *qubits: int, record: str | None = None, duration: float | None = None):
        if duration is None:
            duration = default_duration(kind)
        self.instructions.append(Instruction(kind, tuple(int(q) for q in qubits), record, duration))

    def prepare(self, qubits: Iterable[int], reset: bool = False):
        for q in qubits:
            self.add(RESET if reset else PREPARE_0, q)

    def h(self, qubits: Iterable[int]):
        for q in qubits:
            self.add(H, q)

    def cnot(self, control: int, target: int):
        self.add(CNOT, control, target)

    def measure(self, qubit: int, record: str, tag: str = TAG_SYNDROME, basis: str = "Z"):
        """Measure ``qubit``.  ``basis="X"`` is compiled to a Hadamard then a Z measurement."""
        if basis == "X":
            self.add(H, qubit)
        elif basis != "Z":
            raise ValueError(f"basis must be 'X' or 'Z', got {basis!r}")
        self.add(MEASURE_Z, qubit, record=record)
        self.record_tags[record] = tag

    def mid_circuit(self):
        self.instructions.append(Instruction(MID_CIRCUIT))

    @contextlib.contextmanager
    def conditional(self, records: Sequence[str]):
        self.instructions.append(Instruction(IF, condition=tuple(records)))
        yield self
        self.instructions.append(Instruction(END_IF))

    def extend(self, circuit: Circuit, qubit_map: Sequence[int] | None = None, prefix: str = ""):
        """Append another circuit, relabelling its qubits and prefixing its records."""
        qmap = list(qubit_map) if qubit_map is not None else list(range(circuit.n_qubits))
        for ins in circuit.instructions:
            record = prefix + ins.record if ins.record is not None else None
            cond = tuple(_prefix_term(t, prefix) for t in ins.condition)
            self.instructions.append(
                Instruction(ins.kind, tuple(qmap[q] for q in ins.qubits), record, ins.duration, cond)
            )
        for r, tag in circuit.record_tags.items():
            self.record_tags[prefix + r] = tag

    def build(self, qubit_budget: int | None = None) -> Circuit:
        circuit = Circuit(len(self.roles), tuple(self.instructions), tuple(self.roles), dict(self.record_tags))
        return validate(circuit, qubit_budget)

"""Builders for every circuit used by the experiments.

Each builder returns a standalone :class:`~steaneqec.circuit.Circuit` on its own
local qubit numbering.  :func:`compose_experiment` stitches them onto one
register of at most 16 qubits by relabelling and record prefixing, and
returns an :class:`ExperimentLayout` telling the decoder where every record is.

Local qubit layouts
-------------------
encode_circuit        data 0..n-1, verification flag n
ghz_aux_prep          auxiliary 0..d-1, flag d
steane_half_cycle     data 0..n-1, auxiliary n..2n-1, flag 2n (if verified)
flag_cycle            data 0..6, ancillas 7..9, flags 10..12
final_readout         data 0..n-1
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Literal, Sequence

from . import circuit as C
from .codes import StabilizerCode, make_code

Half = Literal["detect_X", "detect_Z"]
QUBIT_BUDGET = 16

# Encoding of |0>_L for the color code (0-indexed).  Roots 0, 3, 1 start in |+>
# and fan out to the X-stabilizer supports {0,2,4,6}, {3,4,5,6}, {1,2,5,6}.
COLOR_ROOTS = (0, 3, 1)
COLOR_ENCODING_CNOTS = ((0, 2), (1, 2), (2, 6), (0, 4), (3, 4), (3, 5), (3, 6), (1, 5))
# The verification flag reads a weight-3 Z_L representative.  Chosen by
# exhaustive single-fault search over all seven weight-3 representatives
# (see steaneqec.faults and tests/test_faults.py).
COLOR_VERIFY_SUPPORT = (0, 5, 6)

# Flagged readout: per stabilizer, the data-qubit coupling order (0-indexed).
# The last two qubits of every order are a Table-A2 hook pair, so a single
# ancilla fault spreads to {2,6} or {3,5} (or something equivalent to a
# weight-1 error).
FLAG_ORDER = {
    ("X", 0): (0, 4, 2, 6),
    ("Z", 1): (4, 6, 3, 5),
    ("Z", 2): (5, 1, 2, 6),
    ("Z", 0): (0, 4, 2, 6),
    ("X", 1): (4, 6, 3, 5),
    ("X", 2): (5, 1, 2, 6),
}
FLAG_PARTS = ((("X", 0), ("Z", 1), ("Z", 2)), (("Z", 0), ("X", 1), ("X", 2)))
ALL_CHECKS = (("X", 0), ("X", 1), ("X", 2), ("Z", 0), ("Z", 1), ("Z", 2))



def check_name(check: tuple[str, int]) -> str:
    """``("X", 0)`` -> ``"SX1"``."""
    return f"S{check[0]}{check[1] + 1}"


class ProtocolError(ValueError):
    """A protocol, code and state combination that makes no sense."""


def _is_color(code: StabilizerCode) -> bool:
    return code.name == "color"


def _is_repetition(code: StabilizerCode) -> bool:
    return code.name in ("bit_flip", "phase_flip")


def logical_basis(code: StabilizerCode, state: str) -> str:
    """Measurement basis that reads the logical operator fixing ``state``.

    |0>_L is read through Z_L and |+>_L through X_L.  For the phase-flip code
    Z_L = X_1, so its |0>_L is read in the X basis.
    """
    op = code.logical_z if state == "zero_L" else code.logical_x
    letters = {op.letter(q) for q in op.support()}
    if len(letters) != 1:
        raise ProtocolError(f"logical operator {op} is not single-basis")
    return letters.pop()


# -- component circuits ------------------------------------------------------


def _color_zero(b: C.CircuitBuilder, data: Sequence[int], reset: bool):
    b.prepare(data, reset=reset)
    b.h([data[r] for r in COLOR_ROOTS])
    for c, t in COLOR_ENCODING_CNOTS:
        b.cnot(data[c], data[t])


def _color_verify(b: C.CircuitBuilder, data: Sequence[int], flag: int, record: str, tag: str, reset: bool):
    b.prepare([flag], reset=reset)
    for q in COLOR_VERIFY_SUPPORT:
        b.cnot(data[q], flag)
    b.measure(flag, record, tag)


def encode_circuit(code: StabilizerCode, state: str = "zero_L", verify: bool = True) -> C.Circuit:
    """Logical |0>_L or |+>_L preparation."""
    if state not in ("zero_L", "plus_L"):
        raise ProtocolError(f"unknown logical state {state!r}")
    n = code.n
    if _is_repetition(code):
        if verify:
            raise ProtocolError("repetition-code data encoding is a product state and has no verification")
        b = C.CircuitBuilder(["data"] * n)
        b.prepare(range(n))
        # bit-flip: |0>_L=|0..0>, |+>_L=GHZ; phase-flip is the Hadamard dual
        if state == "plus_L":
            b.h([0])
            for q in range(n - 1):
                b.cnot(q, q + 1)
        if code.name == "phase_flip":
            b.h(range(n))
        return b.build()
    if not _is_color(code):
        raise ProtocolError(f"no encoder for code {code.name!r}")
    b = C.CircuitBuilder(["data"] * n + (["flag"] if verify else []))
    data = list(range(n))
    _color_zero(b, data, reset=False)
    if verify:
        _color_verify(b, data, n, "flag", C.TAG_VERIFY_ENCODING, reset=False)
    if state == "plus_L":
        b.h(data)
    return b.build()


def _attempts(b: C.CircuitBuilder, attempts: int, tag: str, body):
    """Run ``body(record, tag)`` once, then re-run it while its flag fires.

    Earlier attempts are tagged as retries; only the last one can discard.
    """
    if attempts < 1:
        raise ProtocolError("attempts must be >= 1")
    names = ["flag"] + [f"flag{k}" for k in range(2, attempts + 1)]
    tags = [C.TAG_RETRY] * (attempts - 1) + [tag]
    body(names[0], tags[0])
    for prev, name, t in zip(names, names[1:], tags[1:]):
        with b.conditional([prev]):
            body(name, t)


def ghz_aux_prep(d: int, basis: str = "plus_L", with_flag: bool | None = None, attempts: int = 1) -> C.Circuit:
    """GHZ auxiliary state for the repetition codes.

    ``plus_L`` is (|0..0> + |1..1>)/sqrt2, the |+>_L of the bit-flip code.
    ``plus_L_dual`` is its Hadamard conjugate, used by the phase-flip code.
    For d=5 a flag reads the Z parity of auxiliary qubits 1 and 3, which
    differ for every ladder fault that leaves two or more flipped qubits.
    ``attempts`` > 1 re-prepares after a fired flag instead of discarding.
    """
    if d not in (3, 5):
        raise ProtocolError(f"GHZ auxiliary preparation supports d in (3, 5), got {d}")
    if basis not in ("plus_L", "plus_L_dual"):
        raise ProtocolError(f"unknown GHZ basis {basis!r}")
    if with_flag is None:
        with_flag = d == 5
    if d == 5 and not with_flag:
        raise ProtocolError("d=5 auxiliary state without a flag is not fault tolerant")
    b = C.CircuitBuilder(["auxiliary"] * d + (["flag"] if with_flag else []))
    aux = list(range(d))

    def ladder():
        b.prepare(aux, reset=True)
        b.h([0])
        for q in range(d - 1):
            b.cnot(q, q + 1)

    def verified(record, tag):
        ladder()
        b.prepare([d], reset=True)
        for q in ghz_flag_support(d):
            b.cnot(q, d)
        b.measure(d, record, tag)

    if with_flag:
        _attempts(b, attempts, C.TAG_VERIFY_GHZ, verified)
    else:
        ladder()
    if basis == "plus_L_dual":
        b.h(aux)
    return b.build()


def ghz_flag_support(d: int) -> tuple[int, int]:
    return (1, d - 2)


def _aux_prep(code: StabilizerCode, state: str, attempts: int = 1) -> C.Circuit:
    """Auxiliary logical state on local qubits 0..n-1 (+ flag n)."""
    n = code.n
    if _is_color(code):
        b = C.CircuitBuilder(["auxiliary"] * n + ["flag"])
        aux = list(range(n))

        def verified(record, tag):
            _color_zero(b, aux, reset=True)
            _color_verify(b, aux, n, record, tag, reset=True)

        _attempts(b, attempts, C.TAG_VERIFY_ENCODING, verified)
        if state == "plus_L":
            b.h(aux)
        return b.build()
    basis = "plus_L" if code.name == "bit_flip" else "plus_L_dual"
    return ghz_aux_prep(n, basis, with_flag=n >= 5, attempts=attempts)


def _half_spec(code: StabilizerCode, half: Half) -> tuple[str, bool, str]:
    """(auxiliary state, data controls?, measurement basis) for a half cycle."""
    if half not in ("detect_X", "detect_Z"):
        raise ProtocolError(f"unknown half {half!r}")
    if code.name == "bit_flip" and half != "detect_X":
        raise ProtocolError("the bit-flip code only supports the detect_X half")
    if code.name == "phase_flip" and half != "detect_Z":
        raise ProtocolError("the phase-flip code only supports the detect_Z half")
    if half == "detect_X":
        return "plus_L", True, "Z"
    return "zero_L", False, "X"


def half_cycle_qubits(code: StabilizerCode) -> int:
    aux = _aux_prep(code, "plus_L" if code.name != "phase_flip" else "zero_L")
    return code.n + aux.n_qubits


def steane_half_cycle(code: StabilizerCode, half: Half, attempts: int = 1) -> C.Circuit:
    """Steane-type extraction of one stabilizer family.

    detect_X: auxiliary |+>_L, transversal CNOT data->aux, aux read in Z
    (yields the Z syndrome).  detect_Z: auxiliary |0>_L, transversal CNOT
    aux->data, aux read in X (yields the X syndrome).  Records ``aux1..auxn``
    hold the auxiliary readout, ``flag`` the auxiliary verification.
    """
    state, data_controls, basis = _half_spec(code, half)
    n = code.n
    prep = _aux_prep(code, state, attempts)
    roles = ["data"] * n + list(prep.roles)
    b = C.CircuitBuilder(roles)
    b.extend(prep, [n + q for q in range(prep.n_qubits)])
    for i in range(n):
        if data_controls:
            b.cnot(i, n + i)
        else:
            b.cnot(n + i, i)
    b.mid_circuit()
    for i in range(n):
        b.measure(n + i, f"aux{i + 1}", C.TAG_SYNDROME, basis)
    return b.build()


def steane_full_cycle(code: StabilizerCode, attempts: int = 1) -> C.Circuit:
    """detect_X half then detect_Z half, reusing the same auxiliary qubits."""
    if not _is_color(code):
        raise ProtocolError("full cycles are defined for the color code; repetition codes use half cycles")
    b = None
    for tag, half in (("x.", "detect_X"), ("z.", "detect_Z")):
        part = steane_half_cycle(code, half, attempts)
        if b is None:
            b = C.CircuitBuilder(part.roles)
        b.extend(part, prefix=tag)
    return b.build()


# -- flagged readout ---------------------------------------------------------


def _measure_check(
    b: C.CircuitBuilder,
    check: tuple[str, int],
    data: Sequence[int],
    anc: int,
    flag: int | None,
):
    """Measure one weight-4 generator with an optional flag.

    X checks: ancilla |+> controls CNOTs onto data, flag |0> catches X on the
    ancilla.  Z checks: data controls CNOTs onto ancilla |0>, flag |+> catches
    Z on the ancilla.  The flag couples after the first and before the last
    data CNOT.
    """
    letter = check[0]
    order = [data[q] for q in FLAG_ORDER[check]]
    b.prepare([anc], reset=True)
    if letter == "X":
        b.h([anc])
    if flag is not None:
        b.prepare([flag], reset=True)
        if letter == "Z":
            b.h([flag])

    def couple_flag():
        if flag is None:
            return
        if letter == "X":
            b.cnot(anc, flag)
        else:
            b.cnot(flag, anc)

    for k, q in enumerate(order):
        if k == 1:
            couple_flag()
        if letter == "X":
            b.cnot(anc, q)
        else:
            b.cnot(q, anc)
        if k == 2:
            couple_flag()


def flag_round_records(round_prefix: str = "") -> dict:
    """Record ids of one flagged round (without the unflagged block)."""
    out = {"flagged": {}, "flags": {}, "unflagged": {}}
    for p, part in enumerate(FLAG_PARTS, 1):
        for check in part:
            name = check_name(check)
            out["flagged"][check] = f"{round_prefix}p{p}.{name}"
            out["flags"][check] = f"{round_prefix}p{p}.F{name[1:]}"
    for check in ALL_CHECKS:
        out["unflagged"][check] = f"{round_prefix}u.{check_name(check)}"
    return out


def _flagged_part(b: C.CircuitBuilder, part, data, ancillas, flags, recs):
    for check, anc, flag in zip(part, ancillas, flags):
        _measure_check(b, check, data, anc, flag)
    b.mid_circuit()
    for check, anc, flag in zip(part, ancillas, flags):
        b.measure(anc, recs["flagged"][check], basis=check[0])
        b.measure(flag, recs["flags"][check], basis="Z" if check[0] == "X" else "X")


def _unflagged(b: C.CircuitBuilder, data, ancillas, recs):
    for check, anc in zip(ALL_CHECKS, ancillas):
        _measure_check(b, check, data, anc, None)
    b.mid_circuit()
    for check, anc in zip(ALL_CHECKS, ancillas):
        b.measure(anc, recs["unflagged"][check], basis=check[0])


def flag_cycle(
    code: StabilizerCode,
    mode: str = "adaptive",
    latest: dict | None = None,
    remeasure: bool | None = None,
):
    """One round of flagged syndrome extraction on the color code.

    Two flagged parts read S_X1, S_Z2, S_Z3 and then S_Z1, S_X2, S_X3, each
    generator with its own ancilla and flag.  ``latest`` maps each generator
    to earlier unflagged record ids (most recent first); a flagged bit counts
    as non-trivial only when it differs from the most recent of those.

    ``adaptive`` returns one circuit whose unflagged remeasurement sits in a
    conditional block.  ``emulate_postselect`` returns the pair (without,
    with) unconditional remeasurement, or just one of them when ``remeasure``
    is given.
    """
    if not _is_color(code):
        raise ProtocolError("the flagged readout is defined for the color code only")
    if mode not in ("adaptive", "emulate_postselect"):
        raise ProtocolError(f"unknown flag mode {mode!r}")
    roles = ["data"] * 7 + ["auxiliary"] * 3 + ["flag"] * 3

    def build(variant) -> C.Circuit:
        b = C.CircuitBuilder(roles)
        _flag_round(b, list(range(7)), list(range(7, 13)), flag_round_records(), variant, latest or {})
        return b.build()

    if mode == "adaptive":
        return build("adaptive")
    if remeasure is not None:
        return build(bool(remeasure))
    return build(False), build(True)


def _flag_round(b: C.CircuitBuilder, data, ancillas, recs, variant, latest):
    """Append one flagged round.  ``variant`` is "adaptive", True or False."""
    for part in FLAG_PARTS:
        _flagged_part(b, part, data, ancillas[:3], ancillas[3:], recs)
    if variant == "adaptive":
        terms = [C.make_term(recs["flagged"][c], latest.get(c, ())) for c in ALL_CHECKS]
        terms += [recs["flags"][c] for c in ALL_CHECKS]
        with b.conditional(terms):
            _unflagged(b, data, ancillas, recs)
    elif variant:
        _unflagged(b, data, ancillas, recs)


def final_readout(code: StabilizerCode, basis: str) -> C.Circuit:
    """Transversal readout of all data qubits; records ``d1..dn``."""
    if basis not in ("X", "Z"):
        raise ProtocolError(f"basis must be 'X' or 'Z', got {basis!r}")
    b = C.CircuitBuilder(["data"] * code.n)
    for q in range(code.n):
        b.measure(q, f"d{q + 1}", C.TAG_DATA, basis)
    return b.build()


# -- experiment composition --------------------------------------------------


@dataclass(frozen=True)
class HalfRound:
    half: str
    family: str  # stabilizer family read out: "Z" for detect_X
    aux_records: tuple[str, ...]


@dataclass(frozen=True)
class FlagRound:
    flagged: dict  # check -> record
    flags: dict
    unflagged: dict
    conditional: bool  # adaptive mode
    remeasured: bool | None = None  # fixed branch in emulate_postselect mode


@dataclass
class ExperimentLayout:
    code: StabilizerCode
    protocol: str
    state: str
    basis: str
    rounds: list = field(default_factory=list)  # list[list[HalfRound]] or list[FlagRound]
    data_records: tuple[str, ...] = ()
    qubit_map: dict = field(default_factory=dict)


@dataclass
class Experiment:
    circuit: C.Circuit
    layout: ExperimentLayout


PROTOCOLS = ("steane_full", "steane_half", "flag_adaptive", "flag_postselect")


def check_protocol(code: StabilizerCode, protocol: str, state: str):
    if protocol not in PROTOCOLS:
        raise ProtocolError(f"unknown protocol {protocol!r}; choose from {PROTOCOLS}")
    if state not in ("zero_L", "plus_L"):
        raise ProtocolError(f"unknown initial state {state!r}")
    if protocol.startswith("flag") and not _is_color(code):
        raise ProtocolError(f"{protocol} requires the color code, got {code.name}")
    if protocol == "steane_full" and not _is_color(code):
        raise ProtocolError(f"steane_full requires the color code; use steane_half for {code.name}")
    if protocol == "steane_half" and _is_repetition(code) and state != "zero_L":
        raise ProtocolError(f"the {code.name} code experiments start from zero_L")


def half_for_state(code: StabilizerCode, state: str) -> Half:
    """The half that protects ``state``: Z checks for |0>_L, X checks for |+>_L."""
    if code.name == "bit_flip":
        return "detect_X"
    if code.name == "phase_flip":
        return "detect_Z"
    return "detect_X" if state == "zero_L" else "detect_Z"


def compose_experiment(
    code: StabilizerCode | str,
    protocol: str,
    state: str,
    rounds: int,
    distance: int = 3,
    branch: Sequence[bool] | None = None,
    attempts: int = 1,
) -> Experiment:
    """Encoding, ``rounds`` rounds of the protocol, then transversal readout.

    ``branch`` fixes the remeasurement pattern for ``flag_postselect``.
    ``attempts`` > 1 re-prepares a rejected auxiliary state (Steane protocols)
    up to that many times before discarding the shot.
    """
    if isinstance(code, str):
        code = make_code(code, distance)
    check_protocol(code, protocol, state)
    if rounds < 0:
        raise ProtocolError("rounds must be non-negative")
    n = code.n
    basis = logical_basis(code, state)
    layout = ExperimentLayout(code, protocol, state, basis)

    if protocol.startswith("steane"):
        halves = (
            ["detect_X", "detect_Z"] if protocol == "steane_full" else [half_for_state(code, state)]
        )
        width = half_cycle_qubits(code)
        enc_flag = width if _is_color(code) else None
        n_qubits = width + (1 if enc_flag is not None else 0)
    else:
        if protocol == "flag_postselect":
            if branch is None:
                branch = (False,) * rounds
            if len(branch) != rounds:
                raise ProtocolError(f"branch pattern has {len(branch)} entries for {rounds} rounds")
        enc_flag = 7
        n_qubits = 14
    if n_qubits > QUBIT_BUDGET:
        raise C.CircuitError(f"experiment needs {n_qubits} qubits, budget is {QUBIT_BUDGET}")

    roles = ["data"] * n + ["auxiliary"] * (n_qubits - n)
    if enc_flag is not None:
        roles[enc_flag] = "flag"

    if protocol.startswith("steane"):
        probe = steane_half_cycle(code, halves[0])
        for q in range(n, probe.n_qubits):
            roles[q] = probe.roles[q]
        block_map = list(range(probe.n_qubits))
    else:
        flag_map = [0, 1, 2, 3, 4, 5, 6, 8, 9, 10, 11, 12, 13]
        for q, r in zip(flag_map, ["data"] * 7 + ["auxiliary"] * 3 + ["flag"] * 3):
            roles[q] = r
    b = C.CircuitBuilder(roles)

    enc = encode_circuit(code, state, verify=_is_color(code))
    enc_map = list(range(n)) + ([enc_flag] if enc_flag is not None else [])
    b.extend(enc, enc_map, prefix="enc.")
    layout.qubit_map["encoding"] = enc_map

    latest: dict = {c: [] for c in ALL_CHECKS}
    for r in range(1, rounds + 1):
        if protocol.startswith("steane"):
            entries = []
            for half in halves:
                prefix = f"r{r}.{'x' if half == 'detect_X' else 'z'}."
                b.extend(steane_half_cycle(code, half, attempts), block_map, prefix=prefix)
                entries.append(
                    HalfRound(half, "Z" if half == "detect_X" else "X", tuple(f"{prefix}aux{i + 1}" for i in range(n)))
                )
            layout.rounds.append(entries)
        else:
            prefix = f"r{r}."
            recs = flag_round_records(prefix)
            variant = "adaptive" if protocol == "flag_adaptive" else bool(branch[r - 1])
            _flag_round(b, flag_map[:7], flag_map[7:], recs, variant, latest)
            executed = None if protocol == "flag_adaptive" else bool(branch[r - 1])
            layout.rounds.append(
                FlagRound(recs["flagged"], recs["flags"], recs["unflagged"], protocol == "flag_adaptive", executed)
            )
            if protocol == "flag_adaptive" or branch[r - 1]:
                for c in ALL_CHECKS:
                    latest[c] = [recs["unflagged"][c]] + latest[c]

    final = final_readout(code, basis)
    b.extend(final, list(range(n)), prefix="final.")
    layout.data_records = tuple(f"final.d{i + 1}" for i in range(n))
    return Experiment(b.build(QUBIT_BUDGET), layout)


def postselect_branches(rounds: int) -> list[tuple[bool, ...]]:
    """All 2^rounds remeasurement patterns, in lexicographic order."""
    return list(itertools.product((False, True), repeat=rounds))

"""Classical post-processing: syndromes, flag resolution, Pauli frame, logical readout.

Corrections are never applied to the qubits.  Each round's recovery is folded
into a Pauli frame, and syndromes are read relative to the frame (the raw
syndrome XOR the syndrome the frame itself would produce).

Scalar functions operate on one shot and are used for traces and tests;
:func:`decode_batch` does the same arithmetic on whole sample blocks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .builders import ALL_CHECKS, ExperimentLayout, FlagRound, HalfRound
from .codes import (
    DecodeTable,
    Family,
    StabilizerCode,
    Syndrome,
    build_lookup_table,
    error_family,
    flag_lookup_table,
    syndrome_of,
)
from .engine import DISCARD_REASONS, SampleBatch, ShotOutcome
from .pauli import DimensionError, PauliString

POSTSELECT_CODE = DISCARD_REASONS.index("postselect_branch") + 1


class DecodeError(RuntimeError):
    pass


@dataclass(frozen=True)
class PauliFrame:
    recovery: PauliString

    @classmethod
    def identity(cls, n: int) -> "PauliFrame":
        return cls(PauliString.identity(n))


def update_frame(frame: PauliFrame, recovery: PauliString) -> PauliFrame:
    if frame.recovery.n != recovery.n:
        raise DimensionError("frame and recovery act on different qubit counts")
    return PauliFrame(frame.recovery * recovery)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    half: str  # detect_X, detect_Z, flagged or unflagged
    raw_bits: tuple[int, ...]
    syndrome: Syndrome
    recovery: PauliString

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "half": self.half,
            "raw_bits": list(self.raw_bits),
            "family": self.syndrome.family,
            "syndrome": str(self.syndrome),
            "recovery": str(self.recovery),
        }


@dataclass(frozen=True)
class FlaggedOutcome:
    """Syndrome from the flagged circuits plus the flags guarding that family."""

    syndrome: Syndrome
    flags: tuple[int, ...] = ()

    def is_trivial(self) -> bool:
        return self.syndrome.is_trivial() and not any(self.flags)


@dataclass(frozen=True)
class Tables:
    standard: dict  # family -> DecodeTable
    flag: dict

    @classmethod
    def for_code(cls, code: StabilizerCode) -> "Tables":
        fams = [f for f in ("X", "Z") if code.family(f)]
        std = {f: build_lookup_table(code, f) for f in fams}
        flag = {f: flag_lookup_table(code, f) for f in fams} if code.name == "color" else {}
        return cls(std, flag)


def steane_syndrome(aux_bits: Sequence[int], code: StabilizerCode, half: str) -> Syndrome:
    """Parities of the auxiliary readout over the generator supports.

    detect_X reads the auxiliary block in Z and yields the Z syndrome;
    detect_Z reads it in X and yields the X syndrome.
    """
    if len(aux_bits) != code.n:
        raise DimensionError(f"{len(aux_bits)} auxiliary bits for a {code.n}-qubit code")
    family: Family = {"detect_X": "Z", "detect_Z": "X"}[half]
    bits = np.asarray(aux_bits, dtype=np.uint8)
    return Syndrome.from_bits(code.check_matrix(family) @ bits % 2, family)


def decode_round(syndrome: Syndrome, table: DecodeTable, n: int | None = None) -> PauliString:
    if syndrome.family != table.family:
        raise DecodeError(f"{syndrome.family}-family syndrome given to a {table.family}-family table")
    if syndrome in table:
        return table[syndrome]
    if syndrome.is_trivial() and n is not None:
        return PauliString.identity(n)
    raise DecodeError(f"syndrome {syndrome} missing from a complete lookup table")


def resolve_flag(
    flagged: FlaggedOutcome,
    unflagged: Syndrome | None,
    standard: DecodeTable,
    flag_table: DecodeTable,
    n: int = 7,
    require_flag: bool = True,
) -> PauliString:
    """Recovery for one family after a flagged round.

    Trivial flagged outcome: identity.  Otherwise the unflagged syndrome is
    decoded with the standard table, except when the two readouts disagree
    and the unflagged syndrome is a hook signature, in which case the hook
    correction is used.  With ``require_flag`` a disagreement only selects
    the hook correction if one of this family's flags fired; a fired flag by
    itself also counts as disagreement.
    """
    if flagged.is_trivial():
        return PauliString.identity(n)
    if unflagged is None:
        raise DecodeError("non-trivial flagged outcome needs an unflagged syndrome")
    return _remeasured_recovery(flagged, unflagged, standard, flag_table, n, require_flag)


def _remeasured_recovery(flagged, unflagged, standard, flag_table, n, require_flag):
    fired = any(flagged.flags)
    if require_flag:
        use_hook = fired and unflagged in flag_table
    else:
        use_hook = unflagged != flagged.syndrome and unflagged in flag_table
    if use_hook:
        return flag_table[unflagged]
    return decode_round(unflagged, standard, n)


def frame_syndrome(code: StabilizerCode, frame: PauliFrame, family: Family) -> Syndrome:
    return syndrome_of(code, frame.recovery, family)


def evaluate_logical(
    final_bits: Sequence[int],
    basis: str,
    frame: PauliFrame,
    code: StabilizerCode,
    target: str,
    table: DecodeTable | None = None,
) -> bool:
    """Ideal last round of error correction done classically, then the logical parity.

    Bits are first corrected for the frame (every position where the frame
    anticommutes with the measured basis flips), then decoded with the lookup
    table of the measured family, then the logical operator's parity decides.
    """
    logical = code.logical_z if target == "zero_L" else code.logical_x
    if target not in ("zero_L", "plus_L"):
        raise ValueError(f"unknown target {target!r}")
    letters = {logical.letter(q) for q in logical.support()}
    if letters != {basis}:
        raise ValueError(f"target {target} of the {code.name} code is read in the {letters} basis, not {basis}")
    n = code.n
    bits = np.array(final_bits, dtype=np.uint8)
    if bits.size != n:
        raise DimensionError(f"{bits.size} final bits for a {n}-qubit code")
    flips = frame.recovery.x if basis == "Z" else frame.recovery.z
    bits ^= flips.astype(np.uint8)
    family: Family = basis  # stabilizers of the same letter as the measurement
    table = table or build_lookup_table(code, family)
    syn = Syndrome.from_bits(code.check_matrix(family) @ bits % 2, family)
    rec = decode_round(syn, table, n)
    bits ^= (rec.x if basis == "Z" else rec.z).astype(np.uint8)
    support = logical.support()
    return int(bits[support].sum()) % 2 == 0


# -- per-shot decoding -------------------------------------------------------


@dataclass
class ShotDecode:
    success: bool
    discarded: bool
    reason: str
    trace: list[RoundRecord] = field(default_factory=list)
    frame: PauliFrame | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "success": self.success,
                "discarded": self.discarded,
                "reason": self.reason,
                "frame": str(self.frame.recovery) if self.frame else None,
                "rounds": [r.to_dict() for r in self.trace],
            }
        )


def _bits(outcome: ShotOutcome, records: Sequence[str]) -> tuple[int, ...]:
    return tuple(int(outcome.records[r]) for r in records)


def _flag_family_inputs(outcome, rnd: FlagRound, family: Family):
    checks = [c for c in ALL_CHECKS if c[0] == family]
    guard = [c for c in ALL_CHECKS if c[0] == error_family(family)]
    flagged = _bits(outcome, [rnd.flagged[c] for c in checks])
    unflagged = None
    if all(rnd.unflagged[c] in outcome.records for c in checks):
        unflagged = _bits(outcome, [rnd.unflagged[c] for c in checks])
    flags = _bits(outcome, [rnd.flags[c] for c in guard])
    return flagged, unflagged, flags


def decode_shot(
    outcome: ShotOutcome,
    layout: ExperimentLayout,
    tables: Tables | None = None,
    require_flag: bool = True,
) -> ShotDecode:
    """Decode one shot, keeping a per-round trace."""
    code = layout.code
    n = code.n
    tables = tables or Tables.for_code(code)
    frame = PauliFrame.identity(n)
    trace: list[RoundRecord] = []
    reason = outcome.reason
    for k, rnd in enumerate(layout.rounds, 1):
        if isinstance(rnd, list):
            for half in rnd:
                raw = _bits(outcome, half.aux_records)
                syn = steane_syndrome(raw, code, half.half) * frame_syndrome(code, frame, half.family)
                rec = decode_round(syn, tables.standard[half.family], n)
                frame = update_frame(frame, rec)
                trace.append(RoundRecord(k, half.half, raw, syn, rec))
            continue
        inputs = {}
        trivial = True
        for fam in ("X", "Z"):
            flagged, unflagged, flags = _flag_family_inputs(outcome, rnd, fam)
            expect = frame_syndrome(code, frame, fam)
            fsyn = Syndrome.from_bits(flagged, fam) * expect
            usyn = Syndrome.from_bits(unflagged, fam) * expect if unflagged is not None else None
            inputs[fam] = (FlaggedOutcome(fsyn, flags), usyn, flagged, unflagged)
            trivial &= inputs[fam][0].is_trivial()
        executed = inputs["X"][1] is not None
        if executed == trivial:
            if rnd.conditional:
                raise DecodeError(f"round {k}: executed branch disagrees with the flagged outcome")
            reason = reason or "postselect_branch"
        recs = {}
        for fam in ("X", "Z"):
            fo, usyn, raw_f, raw_u = inputs[fam]
            if trivial or usyn is None:
                rec = PauliString.identity(n)
            else:
                # once the round triggered, both families are decoded from the remeasurement
                rec = _remeasured_recovery(fo, usyn, tables.standard[fam], tables.flag[fam], n, require_flag)
            recs[fam] = rec
            trace.append(RoundRecord(k, "flagged", raw_f + fo.flags, fo.syndrome, PauliString.identity(n)))
            if usyn is not None:
                trace.append(RoundRecord(k, "unflagged", raw_u, usyn, rec))
        frame = update_frame(update_frame(frame, recs["X"]), recs["Z"])
    final = _bits(outcome, layout.data_records)
    ok = evaluate_logical(final, layout.basis, frame, code, layout.state, tables.standard[layout.basis])
    return ShotDecode(ok, bool(reason), reason, trace, frame)


# -- batch decoding ----------------------------------------------------------


@dataclass
class DecodedBatch:
    success: np.ndarray  # bool per shot
    discard_code: np.ndarray  # 0 kept, else 1 + index into DISCARD_REASONS

    @property
    def kept(self) -> np.ndarray:
        return self.discard_code == 0

    def counts(self, include_discarded: bool = False) -> tuple[int, int, int]:
        """(successes, denominator, discarded)."""
        mask = np.ones_like(self.kept) if include_discarded else self.kept
        return int(self.success[mask].sum()), int(mask.sum()), int((~self.kept).sum())


class BatchDecoder:
    """Vectorized counterpart of :func:`decode_shot` for one layout."""

    def __init__(self, layout: ExperimentLayout, require_flag: bool = True):
        self.layout = layout
        self.require_flag = require_flag
        code = layout.code
        self.code = code
        self.tables = Tables.for_code(code)
        self.H = {f: code.check_matrix(f).astype(np.int64) for f in ("X", "Z") if code.family(f)}
        self.weights = {f: (1 << np.arange(h.shape[0])).astype(np.int64) for f, h in self.H.items()}
        self.dense = {f: t.as_dense(code.n) for f, t in self.tables.standard.items()}
        self.hook = {}
        for f, t in self.tables.flag.items():
            dense = t.as_dense(code.n)
            present = np.zeros(dense.shape[0], bool)
            for values in t.entries:
                present[Syndrome(values, f).index] = True
            self.hook[f] = (dense, present)

    def _index(self, bits: np.ndarray, family: str) -> np.ndarray:
        """Syndrome index of rows of ``bits`` (shots, n)."""
        return ((bits @ self.H[family].T) % 2) @ self.weights[family]

    def decode(self, batch: SampleBatch) -> DecodedBatch:
        layout = self.layout
        n = self.code.n
        shots = batch.shots
        # frame[f]: the frame component detected by family f (X part for Z checks)
        frame = {"Z": np.zeros((shots, n), np.int64), "X": np.zeros((shots, n), np.int64)}
        discard = batch.discard_code.astype(np.int8).copy()
        for rnd in layout.rounds:
            if isinstance(rnd, list):
                for half in rnd:
                    f = half.family
                    aux = batch.rows(half.aux_records).T.astype(np.int64)
                    idx = self._index(aux ^ frame[f], f)
                    frame[f] ^= self.dense[f][idx]
                continue
            idx_f, idx_u, fired = {}, {}, {}
            for f in ("X", "Z"):
                checks = [c for c in ALL_CHECKS if c[0] == f]
                guard = [c for c in ALL_CHECKS if c[0] == error_family(f)]
                fsyn = batch.rows([rnd.flagged[c] for c in checks]).T.astype(np.int64)
                if rnd.conditional or rnd.remeasured:
                    usyn = batch.rows([rnd.unflagged[c] for c in checks]).T.astype(np.int64)
                else:
                    usyn = np.zeros_like(fsyn)  # branch without remeasurement; never applied
                expect = (frame[f] @ self.H[f].T) % 2
                idx_f[f] = ((fsyn ^ expect) @ self.weights[f])
                idx_u[f] = ((usyn ^ expect) @ self.weights[f])
                fired[f] = batch.rows([rnd.flags[c] for c in guard]).any(axis=0)
            trivial = (idx_f["X"] == 0) & (idx_f["Z"] == 0) & ~fired["X"] & ~fired["Z"]
            if rnd.conditional:
                executed = batch.present[batch.index[rnd.unflagged[ALL_CHECKS[0]]]]
                if np.any(executed == trivial):
                    raise DecodeError("executed branch disagrees with the flagged outcome")
            else:
                executed = np.full(shots, bool(rnd.remeasured))
                bad = (executed == trivial) & (discard == 0)
                discard[bad] = POSTSELECT_CODE
            act = ~trivial & executed
            for f in ("X", "Z"):
                dense, in_hook = self.hook[f]
                if self.require_flag:
                    use_hook = fired[f] & in_hook[idx_u[f]]
                else:
                    use_hook = (idx_u[f] != idx_f[f]) & in_hook[idx_u[f]]
                rec = np.where(use_hook[:, None], dense[idx_u[f]], self.dense[f][idx_u[f]])
                frame[f] ^= rec * act[:, None]
        basis = layout.basis
        bits = batch.rows(layout.data_records).T.astype(np.int64) ^ frame[basis]
        bits ^= self.dense[basis][self._index(bits, basis)]
        logical = self.code.logical_z if layout.state == "zero_L" else self.code.logical_x
        parity = bits[:, logical.support()].sum(axis=1) % 2
        return DecodedBatch(parity == 0, discard)


def decode_batch(batch: SampleBatch, layout: ExperimentLayout, require_flag: bool = True) -> DecodedBatch:
    return BatchDecoder(layout, require_flag).decode(batch)


def write_traces(stream: IO[str], batch: SampleBatch, layout: ExperimentLayout, limit: int | None = None) -> int:
    """Write one JSON line per shot decode; returns the number written."""
    tables = Tables.for_code(layout.code)
    count = 0
    for s in range(batch.shots if limit is None else min(limit, batch.shots)):
        stream.write(decode_shot(batch.outcome(s), layout, tables).to_json() + "\n")
        count += 1
    return count

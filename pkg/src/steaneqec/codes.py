"""Repetition codes, the seven-qubit color code, syndromes and lookup decoders."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np

from .pauli import DimensionError, PauliString, commutes

Family = Literal["X", "Z"]
# Family names the Pauli type of the *stabilizers* being read out; a Z-family
# syndrome detects X errors and is decoded to X-type recoveries.

_COLOR_PLAQUETTES = ((1, 3, 5, 7), (4, 5, 6, 7), (2, 3, 6, 7))


@dataclass(frozen=True)
class StabilizerCode:
    name: str
    n: int
    x_generators: tuple[PauliString, ...]
    z_generators: tuple[PauliString, ...]
    logical_x: PauliString
    logical_z: PauliString
    distance: int

    @property
    def generators(self) -> tuple[PauliString, ...]:
        """All generators, Z-type first then X-type (each in listing order)."""
        return self.z_generators + self.x_generators

    def family(self, family: Family) -> tuple[PauliString, ...]:
        if family == "Z":
            return self.z_generators
        if family == "X":
            return self.x_generators
        raise ValueError(f"family must be 'X' or 'Z', got {family!r}")

    def check_matrix(self, family: Family) -> np.ndarray:
        """0/1 matrix with one row per generator of ``family`` marking its support."""
        gens = self.family(family)
        if not gens:
            return np.zeros((0, self.n), np.uint8)
        return np.array([g.z if family == "Z" else g.x for g in gens], dtype=np.uint8)


@dataclass(frozen=True)
class Syndrome:
    """Generator eigenvalues (+1/-1) for one stabilizer family, in listing order."""

    values: tuple[int, ...]
    family: Family

    def __post_init__(self):
        if any(v not in (1, -1) for v in self.values):
            raise ValueError(f"syndrome entries must be +1/-1: {self.values}")

    @classmethod
    def from_bits(cls, bits, family: Family) -> "Syndrome":
        return cls(tuple(-1 if b else 1 for b in bits), family)

    @classmethod
    def parse(cls, text: str, family: Family) -> "Syndrome":
        text = text.replace("−", "-")
        return cls(tuple(-1 if c == "-" else 1 for c in text if c in "+-"), family)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(int(v < 0) for v in self.values)

    @property
    def index(self) -> int:
        """Integer key with the first generator as the least significant bit."""
        return sum(b << i for i, b in enumerate(self.bits))

    def is_trivial(self) -> bool:
        return all(v == 1 for v in self.values)

    def __mul__(self, other: "Syndrome") -> "Syndrome":
        if self.family != other.family or len(self.values) != len(other.values):
            raise DimensionError("syndromes of different families or lengths")
        return Syndrome(tuple(a * b for a, b in zip(self.values, other.values)), self.family)

    def __str__(self) -> str:
        return "".join("+" if v > 0 else "-" for v in self.values)


@dataclass(frozen=True)
class DecodeTable:
    family: Family
    entries: Mapping[tuple[int, ...], PauliString]
    scope: Literal["standard", "flag"] = "standard"
    n_checks: int = field(default=0)

    def __contains__(self, syndrome: Syndrome) -> bool:
        return syndrome.values in self.entries

    def __getitem__(self, syndrome: Syndrome) -> PauliString:
        return self.entries[syndrome.values]

    def get(self, syndrome: Syndrome, default=None):
        return self.entries.get(syndrome.values, default)

    def __len__(self) -> int:
        return len(self.entries)

    def as_dense(self, n: int) -> np.ndarray:
        """Recovery supports indexed by ``Syndrome.index``; missing keys map to zeros.

        Rows are the X support (Z-family tables) or Z support (X-family tables).
        """
        out = np.zeros((1 << self.n_checks, n), np.uint8)
        for values, rec in self.entries.items():
            idx = Syndrome(values, self.family).index
            out[idx] = rec.x if self.family == "Z" else rec.z
        return out

    def rows(self) -> list[tuple[str, str]]:
        # identity first, then by recovery support, which is the printed order
        ordered = sorted(self.entries.items(), key=lambda kv: (len(kv[1].support()), kv[1].support()))
        return [(str(Syndrome(k, self.family)), str(v)) for k, v in ordered]

    def to_json(self) -> str:
        return json.dumps(
            {"family": self.family, "scope": self.scope, "rows": [list(r) for r in self.rows()]},
            indent=2,
            ensure_ascii=False,
        )


def _validate_distance(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or d < 3 or d % 2 == 0:
        raise ValueError(f"repetition code distance must be an odd integer >= 3, got {d!r}")


def make_bit_flip_code(d: int) -> StabilizerCode:
    """Distance-d bit-flip code: Z_i Z_{i+1} checks, X_L = X^n, Z_L = Z_1."""
    _validate_distance(d)
    gens = tuple(PauliString.from_support(d, (i, i + 1), "Z") for i in range(d - 1))
    return StabilizerCode(
        name="bit_flip",
        n=d,
        x_generators=(),
        z_generators=gens,
        logical_x=PauliString.from_support(d, range(d), "X"),
        logical_z=PauliString.single(d, 0, "Z"),
        distance=d,
    )


def make_phase_flip_code(d: int) -> StabilizerCode:
    """Distance-d phase-flip code: X_i X_{i+1} checks, X_L = Z^n, Z_L = X_1."""
    _validate_distance(d)
    gens = tuple(PauliString.from_support(d, (i, i + 1), "X") for i in range(d - 1))
    return StabilizerCode(
        name="phase_flip",
        n=d,
        x_generators=gens,
        z_generators=(),
        logical_x=PauliString.from_support(d, range(d), "Z"),
        logical_z=PauliString.single(d, 0, "X"),
        distance=d,
    )


def make_color_code() -> StabilizerCode:
    """The [[7,1,3]] color code with plaquettes {1,3,5,7}, {4,5,6,7}, {2,3,6,7}."""
    plaquettes = [[q - 1 for q in p] for p in _COLOR_PLAQUETTES]
    return StabilizerCode(
        name="color",
        n=7,
        x_generators=tuple(PauliString.from_support(7, p, "X") for p in plaquettes),
        z_generators=tuple(PauliString.from_support(7, p, "Z") for p in plaquettes),
        logical_x=PauliString.from_support(7, range(7), "X"),
        logical_z=PauliString.from_support(7, range(7), "Z"),
        distance=3,
    )


def make_code(kind: str, distance: int | None = None) -> StabilizerCode:
    if kind == "color":
        if distance not in (None, 3):
            raise ValueError("the color code has distance 3")
        return make_color_code()
    if kind == "bit_flip":
        return make_bit_flip_code(distance)
    if kind == "phase_flip":
        return make_phase_flip_code(distance)
    raise ValueError(f"unknown code {kind!r}")


def error_family(family: Family) -> str:
    """Pauli letter of the errors a stabilizer family detects."""
    return "X" if family == "Z" else "Z"


def syndrome_of(code: StabilizerCode, error: PauliString, family: Family) -> Syndrome:
    if error.n != code.n:
        raise DimensionError(f"error acts on {error.n} qubits, code has {code.n}")
    return Syndrome(tuple(1 if commutes(error, g) else -1 for g in code.family(family)), family)


def build_lookup_table(code: StabilizerCode, family: Family) -> DecodeTable:
    """Minimum-weight lookup table for single-type errors up to floor((d-1)/2).

    Candidates are enumerated by increasing weight and, within a weight, by
    lexicographic qubit-index tuple, so the first hit for each syndrome wins.
    """
    if code.distance % 2 == 0:
        raise ValueError("lookup tables are built for odd distances only")
    letter = error_family(family)
    t = (code.distance - 1) // 2
    entries: dict[tuple[int, ...], PauliString] = {}
    for w in range(t + 1):
        for qubits in itertools.combinations(range(code.n), w):
            err = PauliString.from_support(code.n, qubits, letter)
            key = syndrome_of(code, err, family).values
            entries.setdefault(key, err)
    return DecodeTable(family, entries, "standard", len(code.family(family)))


def flag_lookup_table(code: StabilizerCode | None = None, family: Family = "Z") -> DecodeTable:
    """Hook-error corrections for the flagged color-code readout."""
    if code is not None and code.name != "color":
        raise ValueError("the flag lookup table is defined for the color code only")
    letter = error_family(family)
    rows = {(1, -1, 1): (3, 7), (1, 1, -1): (4, 6)}
    entries = {k: PauliString.from_support(7, [q - 1 for q in v], letter) for k, v in rows.items()}
    return DecodeTable(family, entries, "flag", 3)


def majority_vote_recovery(bits) -> np.ndarray:
    """Recovery flips for a repetition-code word: flip the minority value."""
    bits = np.asarray(bits, dtype=np.uint8)
    majority = int(bits.sum() * 2 > bits.size)
    return (bits != majority).astype(np.uint8)


def render_table(table: DecodeTable, family: Family | None = None) -> str:
    """Plain-text table with a header naming the generators, as printed by ``tables``."""
    family = family or table.family
    k = table.n_checks
    header = ", ".join(f"S_{family}^({i + 1})" for i in range(k))
    lines = [f"{header} | Recovery"]
    lines += [f"{s} | {r}" for s, r in table.rows()]
    return "\n".join(lines)

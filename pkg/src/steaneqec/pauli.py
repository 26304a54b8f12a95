"""Symplectic n-qubit Pauli operators tracked up to a real sign."""

from __future__ import annotations

import re
from typing import Iterable, Mapping

import numpy as np

_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_TOKEN = re.compile(r"([IXYZ])(\d+)")


class DimensionError(ValueError):
    """Raised when Pauli operators on different qubit counts are combined."""


class PauliString:
    """An n-qubit Pauli operator with X/Z support bit vectors and a sign of +-1.

    Instances are immutable; the support arrays are read-only views.
    """

    __slots__ = ("_x", "_z", "_sign")

    def __init__(self, x: Iterable[int], z: Iterable[int], sign: int = 1):
        x = np.array(x, dtype=bool).reshape(-1)
        z = np.array(z, dtype=bool).reshape(-1)
        if x.shape != z.shape:
            raise DimensionError(f"x and z supports differ in length: {x.size} != {z.size}")
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign!r}")
        x.flags.writeable = False
        z.flags.writeable = False
        self._x = x
        self._z = z
        self._sign = int(sign)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(np.zeros(n, bool), np.zeros(n, bool))

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        """Single-qubit Pauli ``letter`` on 0-indexed ``qubit``."""
        return cls.from_sparse(n, {qubit: letter})

    @classmethod
    def from_sparse(cls, n: int, ops: Mapping[int, str], sign: int = 1) -> "PauliString":
        x = np.zeros(n, bool)
        z = np.zeros(n, bool)
        for q, letter in ops.items():
            if not 0 <= q < n:
                raise IndexError(f"qubit {q} out of range for n={n}")
            letter = letter.upper()
            if letter not in "IXYZ":
                raise ValueError(f"not a Pauli letter: {letter!r}")
            x[q] = letter in "XY"
            z[q] = letter in "ZY"
        return cls(x, z, sign)

    @classmethod
    def from_support(cls, n: int, qubits: Iterable[int], letter: str) -> "PauliString":
        return cls.from_sparse(n, {q: letter for q in qubits})

    @classmethod
    def parse(cls, text: str, n: int) -> "PauliString":
        """Parse the 1-indexed rendering, e.g. ``"X1 Z3 Y5"`` or ``"-X2X4X6"``."""
        text = text.strip()
        sign = 1
        if text[:1] in "+-":
            sign = -1 if text[0] == "-" else 1
            text = text[1:]
        if text in ("", "I"):
            return cls(np.zeros(n, bool), np.zeros(n, bool), sign)
        compact = text.replace(" ", "")
        tokens = _TOKEN.findall(compact)
        if "".join(a + b for a, b in tokens) != compact:
            raise ValueError(f"cannot parse Pauli string {text!r}")
        out = cls.identity(n)
        for letter, idx in tokens:
            out = out * cls.single(n, int(idx) - 1, letter)
        return out.with_sign(sign)

    @property
    def n(self) -> int:
        return self._x.size

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def z(self) -> np.ndarray:
        return self._z

    @property
    def sign(self) -> int:
        return self._sign

    def with_sign(self, sign: int) -> "PauliString":
        return PauliString(self._x, self._z, sign)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return compose(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self.n == other.n
            and self._sign == other._sign
            and bool(np.array_equal(self._x, other._x))
            and bool(np.array_equal(self._z, other._z))
        )

    def equal_up_to_sign(self, other: "PauliString") -> bool:
        return bool(np.array_equal(self._x, other._x) and np.array_equal(self._z, other._z))

    def __hash__(self) -> int:
        return hash((self._sign, self._x.tobytes(), self._z.tobytes()))

    def __len__(self) -> int:
        return self.n

    def letter(self, qubit: int) -> str:
        return _LETTERS[(int(self._x[qubit]), int(self._z[qubit]))]

    def support(self) -> list[int]:
        return [int(q) for q in np.flatnonzero(self._x | self._z)]

    def is_identity(self) -> bool:
        return not (self._x.any() or self._z.any())

    def __str__(self) -> str:
        body = " ".join(f"{self.letter(q)}{q + 1}" for q in self.support()) or "I"
        return ("-" if self._sign < 0 else "") + body

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r}, n={self.n})"


def _check(a: PauliString, b: PauliString) -> None:
    if a.n != b.n:
        raise DimensionError(f"Pauli operators act on {a.n} and {b.n} qubits")


def phase_exponent(x1, z1, x2, z2):
    """Per-qubit power of i in the product of Paulis (x1,z1)*(x2,z2); x=z=1 is Y."""
    x1, z1, x2, z2 = (np.asarray(a, dtype=np.int8) for a in (x1, z1, x2, z2))
    return (
        (x1 & z1) * (z2 - x2)
        + (x1 & (1 - z1)) * z2 * (2 * x2 - 1)
        + ((1 - x1) & z1) * x2 * (1 - 2 * z2)
    )


def compose(a: PauliString, b: PauliString) -> PauliString:
    """Product ``a * b`` up to global phase.

    The sign is exact when a and b commute.  For anticommuting inputs the
    product carries a factor of +-i which is folded into the sign (i -> +1,
    -i -> -1).
    """
    _check(a, b)
    sign = a.sign * b.sign
    if int(phase_exponent(a.x, a.z, b.x, b.z).sum()) % 4 >= 2:
        sign = -sign
    return PauliString(a.x ^ b.x, a.z ^ b.z, sign)


def commutes(a: PauliString, b: PauliString) -> bool:
    _check(a, b)
    overlap = np.count_nonzero(a.x & b.z) + np.count_nonzero(a.z & b.x)
    return overlap % 2 == 0


def weight(a: PauliString) -> int:
    return int(np.count_nonzero(a.x | a.z))

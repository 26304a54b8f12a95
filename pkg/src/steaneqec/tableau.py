"""Aaronson-Gottesman stabilizer tableau with destabilizers and signs."""

from __future__ import annotations

import numpy as np

from .pauli import PauliString, phase_exponent as _g


class Tableau:
    """Stabilizer state on n qubits, initialised to |0...0>.

    Rows 0..n-1 are destabilizers, n..2n-1 stabilizers, row 2n is scratch.
    """

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n + 1, n), dtype=bool)
        self.z = np.zeros((2 * n + 1, n), dtype=bool)
        self.r = np.zeros(2 * n + 1, dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True
        self.z[n + idx, idx] = True

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        t.x = self.x.copy()
        t.z = self.z.copy()
        t.r = self.r.copy()
        return t

    # -- gates ---------------------------------------------------------------

    def h(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def cnot(self, a: int, b: int) -> None:
        xa, zb = self.x[:, a], self.z[:, b]
        self.r ^= xa & zb & ~(self.x[:, b] ^ self.z[:, a])
        self.x[:, b] ^= xa
        self.z[:, a] ^= zb

    def pauli(self, a: int, letter: str) -> None:
        if letter == "X":
            self.r ^= self.z[:, a]
        elif letter == "Z":
            self.r ^= self.x[:, a]
        elif letter == "Y":
            self.r ^= self.x[:, a] ^ self.z[:, a]
        elif letter != "I":
            raise ValueError(f"not a Pauli letter: {letter!r}")

    def apply_pauli(self, p: PauliString) -> None:
        for q in p.support():
            self.pauli(q, p.letter(q))

    # -- measurement ---------------------------------------------------------

    def _rowsum(self, rows: np.ndarray, i: int) -> None:
        """Multiply row i into each of ``rows`` (left-multiplication, with phases)."""
        if rows.size == 0:
            return
        phase = (
            2 * self.r[rows].astype(np.int64)
            + 2 * int(self.r[i])
            + _g(self.x[i][None, :], self.z[i][None, :], self.x[rows], self.z[rows]).sum(axis=1)
        ) % 4
        self.r[rows] = phase == 2
        self.x[rows] ^= self.x[i]
        self.z[rows] ^= self.z[i]

    def is_deterministic(self, a: int) -> bool:
        n = self.n
        return not self.x[n : 2 * n, a].any()

    def measure(self, a: int, rng: np.random.Generator | None = None, forced: int | None = None) -> int:
        """Z-basis measurement.  Random outcomes come from ``rng`` (or ``forced``, else 0)."""
        n = self.n
        hits = np.flatnonzero(self.x[n : 2 * n, a])
        if hits.size:
            p = n + int(hits[0])
            others = np.flatnonzero(self.x[: 2 * n, a])
            others = others[others != p]
            self._rowsum(others, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, a] = True
            if forced is not None:
                outcome = int(forced)
            elif rng is not None:
                outcome = int(rng.integers(2))
            else:
                outcome = 0
            self.r[p] = bool(outcome)
            return outcome
        scratch = 2 * n
        self.x[scratch] = False
        self.z[scratch] = False
        self.r[scratch] = False
        for i in np.flatnonzero(self.x[:n, a]):
            self._rowsum(np.array([scratch]), int(i) + n)
        return int(self.r[scratch])

    def measure_x(self, a: int, rng=None, forced=None) -> int:
        self.h(a)
        out = self.measure(a, rng, forced)
        self.h(a)
        return out

    def reset(self, a: int) -> None:
        if self.measure(a):
            self.pauli(a, "X")

    # -- inspection ----------------------------------------------------------

    def stabilizers(self) -> list[PauliString]:
        n = self.n
        return [
            PauliString(self.x[i], self.z[i], -1 if self.r[i] else 1) for i in range(n, 2 * n)
        ]

    def expectation(self, p: PauliString) -> int:
        """+1/-1 if ``p`` (up to sign) is in the stabilizer group, else 0."""
        t = self.copy()
        n = t.n
        anti = (
            np.count_nonzero(t.x[n : 2 * n] & p.z[None, :], axis=1)
            + np.count_nonzero(t.z[n : 2 * n] & p.x[None, :], axis=1)
        ) % 2
        if anti.any():
            return 0
        scratch = 2 * n
        t.x[scratch] = False
        t.z[scratch] = False
        t.r[scratch] = False
        for i in range(n):
            # destabilizer i anticommutes with p iff stabilizer i is a factor of p
            if (np.count_nonzero(t.x[i] & p.z) + np.count_nonzero(t.z[i] & p.x)) % 2:
                t._rowsum(np.array([scratch]), i + n)
        if not (np.array_equal(t.x[scratch], p.x) and np.array_equal(t.z[scratch], p.z)):
            return 0
        return (-1 if t.r[scratch] else 1) * p.sign

    def canonical_form(self) -> bytes:
        """Reduced row-echelon stabilizer rows with signs; equal bytes iff equal states."""
        n = self.n
        t = self.copy()
        rows = list(range(n, 2 * n))
        pivot_row = 0
        for col in range(2 * n):
            bits = t.x if col < n else t.z
            c = col % n
            candidates = [r for r in rows[pivot_row:] if bits[r, c]]
            if not candidates:
                continue
            pr = candidates[0]
            target = rows[pivot_row]
            if pr != target:
                for arr in (t.x, t.z):
                    arr[[pr, target]] = arr[[target, pr]]
                t.r[[pr, target]] = t.r[[target, pr]]
            others = np.array([r for r in rows if r != target and bits[r, c]], dtype=np.intp)
            t._rowsum(others, target)
            pivot_row += 1
            if pivot_row == n:
                break
        stab = slice(n, 2 * n)
        return np.packbits(np.concatenate([t.x[stab].ravel(), t.z[stab].ravel(), t.r[stab]])).tobytes()

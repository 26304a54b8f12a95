"""Fixed corpus of small circuits (n <= 5) for engine-vs-oracle comparison."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import stats

from steaneqec import circuit as C
from steaneqec.builders import ghz_aux_prep
from steaneqec.engine import run_many, run_shot, shot_rng
from steaneqec.noise import NoiseModel

from oracle import ABSENT, DenseOracle

STRESS = NoiseModel(
    p_1q=0.04,
    p_2q=0.08,
    p_init=0.05,
    p_meas=0.06,
    p_mid_x=0.03,
    p_mid_y=0.02,
    p_mid_z=0.05,
    T2=3000.0,
)
STRESS_SLOW_DETECT = STRESS.replace(mid_circuit_idle_time=150.0)
QUIET = NoiseModel.noiseless()


@dataclass(frozen=True)
class Case:
    name: str
    circuit: C.Circuit
    model: NoiseModel
    frame_ok: bool = True  # conditional blocks are neutral on the reference


def _random_circuit(seed: int, n: int, length: int, max_meas: int = 5) -> C.Circuit:
    rng = np.random.default_rng(seed)
    n_data = max(1, n // 2)
    b = C.CircuitBuilder(["data"] * n_data + ["auxiliary"] * (n - n_data))
    meas = 0
    for _ in range(length):
        u = rng.random()
        q = int(rng.integers(n))
        if u < 0.3:
            b.h([q])
        elif u < 0.6:
            t = int(rng.integers(n - 1))
            b.cnot(q, t + (t >= q))
        elif u < 0.7:
            b.add(rng.choice([C.PAULI_X, C.PAULI_Y, C.PAULI_Z]), q)
        elif u < 0.78:
            b.prepare([q], reset=True)
        elif u < 0.83:
            b.mid_circuit()
        elif meas < max_meas - 1:
            kind = C.MEASURE_X if rng.random() < 0.4 else C.MEASURE_Z
            b.add(kind, q, record=f"m{meas}")
            meas += 1
    for q in range(min(n, max_meas - meas)):
        b.add(C.MEASURE_Z, q, record=f"f{q}")
    return b.build()


def _parity_retry(rounds_model: NoiseModel) -> C.Circuit:
    """ZZ parity of a Bell pair; the check is repeated only if it fired."""
    b = C.CircuitBuilder(["data", "data", "auxiliary"])
    b.h([0])
    b.cnot(0, 1)
    for rec in ("s1",):
        b.cnot(0, 2)
        b.cnot(1, 2)
        b.mid_circuit()
        b.add(C.MEASURE_Z, 2, record=rec)
    with b.conditional(["s1"]):
        b.prepare([2], reset=True)
        b.cnot(0, 2)
        b.cnot(1, 2)
        b.mid_circuit()
        b.add(C.MEASURE_Z, 2, record="s2")
    b.add(C.MEASURE_Z, 0, record="d0")
    b.add(C.MEASURE_Z, 1, record="d1")
    return b.build()


def _repetition_cycle(xor_terms: bool) -> C.Circuit:
    """Three-qubit bit-flip code with two parity checks and a conditional repeat."""
    b = C.CircuitBuilder(["data"] * 3 + ["auxiliary"] * 2)
    for k, (a, c) in enumerate(((0, 1), (1, 2))):
        b.cnot(a, 3 + k)
        b.cnot(c, 3 + k)
    b.mid_circuit()
    b.add(C.MEASURE_Z, 3, record="a1")
    b.add(C.MEASURE_Z, 4, record="a2")
    terms = ["a2^a1"] if xor_terms else ["a1", "a2"]
    with b.conditional(terms):
        b.prepare([3, 4], reset=True)
        for k, (a, c) in enumerate(((0, 1), (1, 2))):
            b.cnot(a, 3 + k)
            b.cnot(c, 3 + k)
        b.add(C.MEASURE_Z, 3, record="b1")
        b.add(C.MEASURE_Z, 4, record="b2")
    for q in range(3):
        b.add(C.MEASURE_Z, q, record=f"d{q}")
    return b.build()


def _nested() -> C.Circuit:
    b = C.CircuitBuilder(["data", "data", "auxiliary", "auxiliary"])
    b.h([0])
    b.cnot(0, 2)
    b.cnot(1, 2)
    b.add(C.MEASURE_Z, 2, record="p")
    with b.conditional(["p"]):
        b.prepare([3], reset=True)
        b.cnot(0, 3)
        b.cnot(1, 3)
        b.add(C.MEASURE_Z, 3, record="q")
        with b.conditional(["q^p"]):
            b.h([0, 1])
            b.h([0, 1])
            b.prepare([3], reset=True)
            b.cnot(0, 3)
            b.cnot(1, 3)
            b.add(C.MEASURE_Z, 3, record="r")
    b.add(C.MEASURE_X, 0, record="x0")
    b.add(C.MEASURE_X, 1, record="x1")
    return b.build()


def _ghz(basis: str) -> C.Circuit:
    b = C.CircuitBuilder(["auxiliary"] * 3)
    b.extend(ghz_aux_prep(3, basis, with_flag=False))
    for q in range(3):
        b.add(C.MEASURE_Z, q, record=f"g{q}")
    return b.build()


def _teleport_fix() -> C.Circuit:
    """Random outcome followed by a Pauli fix-up; only the tableau engine runs it."""
    b = C.CircuitBuilder(["auxiliary", "data", "data"])
    b.h([0])
    b.cnot(0, 1)
    b.add(C.MEASURE_X, 0, record="m")
    with b.conditional(["m"]):
        b.add(C.PAULI_Z, 1)
    b.h([1])
    b.add(C.MEASURE_Z, 1, record="out")
    b.h([2])
    b.add(C.MEASURE_Z, 2, record="coin")
    with b.conditional(["coin"]):
        b.add(C.PAULI_X, 2)
    b.add(C.MEASURE_Z, 2, record="zeroed")
    return b.build()


def build_corpus() -> list[Case]:
    cases = []
    shapes = [(2, 10), (3, 14), (4, 18), (5, 22), (5, 26), (3, 20), (4, 12), (5, 16)]
    for k, (n, length) in enumerate(shapes):
        circuit = _random_circuit(1000 + k, n, length)
        cases.append(Case(f"random{k}-n{n}-ideal", circuit, QUIET))
        cases.append(Case(f"random{k}-n{n}-noisy", circuit, STRESS if k % 2 else STRESS_SLOW_DETECT))
    cases += [
        Case("parity-retry-ideal", _parity_retry(QUIET), QUIET),
        Case("parity-retry-noisy", _parity_retry(STRESS), STRESS),
        Case("repetition-any-noisy", _repetition_cycle(False), STRESS),
        Case("repetition-xor-noisy", _repetition_cycle(True), STRESS),
        Case("nested-ideal", _nested(), QUIET),
        Case("nested-noisy", _nested(), STRESS),
        Case("ghz-plus-noisy", _ghz("plus_L"), STRESS),
        Case("ghz-dual-ideal", _ghz("plus_L_dual"), QUIET),
        Case("feed-forward-ideal", _teleport_fix(), QUIET, frame_ok=False),
        Case("feed-forward-noisy", _teleport_fix(), STRESS, frame_ok=False),
    ]
    return cases


CORPUS = build_corpus()


def frame_counts(case: Case, shots: int, seed: int) -> Counter:
    batch = run_many(case.circuit, case.model, shots, seed)
    keys = np.where(batch.present, batch.bits.astype(np.int64), ABSENT).T
    return Counter(map(tuple, keys.tolist()))


def tableau_counts(case: Case, shots: int, seed: int) -> Counter:
    records = case.circuit.records
    counts = Counter()
    for s in range(shots):
        out = run_shot(case.circuit, case.model, shot_rng(seed, s))
        counts[tuple(out.records.get(r, ABSENT) for r in records)] += 1
    return counts


def goodness_of_fit(observed: Counter, dist: dict, min_expected: float = 5.0) -> float:
    """Chi-square p-value of ``observed`` against exact probabilities.

    Outcomes with small expected counts are pooled into one bin; an outcome
    the oracle gives probability zero yields p = 0.
    """
    shots = sum(observed.values())
    impossible = [k for k in observed if dist.get(k, 0.0) < 1e-12]
    if impossible:
        return 0.0
    keys = sorted(dist)
    big = [k for k in keys if dist[k] * shots >= min_expected]
    small = [k for k in keys if dist[k] * shots < min_expected]
    obs = [observed.get(k, 0) for k in big]
    exp = [dist[k] * shots for k in big]
    if small:
        obs.append(sum(observed.get(k, 0) for k in small))
        exp.append(sum(dist[k] for k in small) * shots)
        if exp[-1] < min_expected and len(exp) > 1:
            o, e = obs.pop(), exp.pop()
            obs[-1] += o
            exp[-1] += e
    if len(obs) < 2:
        return 1.0
    exp = np.array(exp) * (shots / sum(exp))
    return float(stats.chisquare(obs, exp).pvalue)


def deterministic_records(dist: dict, records: list[str]) -> dict[str, int]:
    """Records whose value is the same in every outcome of nonzero probability."""
    support = [k for k, p in dist.items() if p > 1e-12]
    fixed = {}
    for j, r in enumerate(records):
        values = {k[j] for k in support}
        if len(values) == 1:
            fixed[r] = values.pop()
    return fixed

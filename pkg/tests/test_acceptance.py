"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible in ``pytest -v`` output)
before asserting, so a run doubles as a report.
"""

import time

import numpy as np
import pytest

from steaneqec.builders import compose_experiment
from steaneqec.codes import build_lookup_table, flag_lookup_table, make_code
from steaneqec.faults import check_fault_tolerance
from steaneqec.harness import PRESETS, preset, results_to_json, run_all, run_experiment
from steaneqec.stats import at_least, wilson_bounds

from corpus import CORPUS, deterministic_records, frame_counts, goodness_of_fit, tableau_counts
from oracle import DenseOracle

SHOTS = 100_000
STD = {"+++": "I", "-++": "X1", "++-": "X2", "-+-": "X3", "+-+": "X4", "--+": "X5", "+--": "X6", "---": "X7"}
HOOK = {"+-+": "X3 X7", "++-": "X4 X6"}


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {title}" + (f" ({detail})" if detail else ""))
        return ok

    return emit


def _by_key(results):
    return {(r.config.code, r.config.distance, r.config.protocol, r.config.initial_state): r for r in results}


def test_criterion_1_golden_tables(report):
    t0 = time.perf_counter()
    code = make_code("color")
    std = dict(build_lookup_table(code, "Z").rows())
    hook = dict(flag_lookup_table(code, "Z").rows())
    elapsed = time.perf_counter() - t0
    ok = std == STD and hook == HOOK and elapsed < 1.0
    assert report(1, "lookup and flag tables", ok, f"{elapsed * 1e3:.1f} ms")


def test_criterion_2_single_fault_suite(report):
    t0 = time.perf_counter()
    cases = [
        ("color", 3, "steane_full", "zero_L"),
        ("color", 3, "steane_full", "plus_L"),
        ("bit_flip", 3, "steane_half", "zero_L"),
        ("phase_flip", 3, "steane_half", "zero_L"),
        ("color", 3, "flag_adaptive", "zero_L"),
        ("color", 3, "flag_adaptive", "plus_L"),
    ]
    reports = [check_fault_tolerance(compose_experiment(c, p, s, 1, d)) for c, d, p, s in cases]
    elapsed = time.perf_counter() - t0
    failures = sum(len(r.failures) for r in reports)
    faults = sum(r.n_faults for r in reports)
    ok = failures == 0 and elapsed < 60
    assert report(2, "exhaustive single faults", ok, f"{faults} faults, {failures} failures, {elapsed:.1f} s")


def test_criterion_3_two_qubit_limit_gap(report):
    t0 = time.perf_counter()
    res = _by_key(run_all(preset("figA6", shots=SHOTS, seed=7)))
    elapsed = time.perf_counter() - t0
    lines, ok = [], elapsed <= 600
    for state in ("zero_L", "plus_L"):
        st = res[("color", 3, "steane_full", state)]
        fl = res[("color", 3, "flag_adaptive", state)]
        gap = {r: st.estimate(r).p_hat - fl.estimate(r).p_hat for r in range(4)}
        # half-width of the gap from both intervals
        slack = {
            r: (st.estimate(r).wilson_high - st.estimate(r).wilson_low) / 2
            + (fl.estimate(r).wilson_high - fl.estimate(r).wilson_low) / 2
            for r in range(4)
        }
        checks = {
            "round-2 gap > 0.1": gap[2] > 0.1,
            "positive gap": all(gap[r] > 0 for r in (1, 2, 3)),
            "non-decreasing": all(gap[r + 1] + slack[r + 1] + slack[r] >= gap[r] for r in (1, 2)),
            "round 0 agrees": abs(gap[0]) <= slack[0],
        }
        ok &= all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        gaps = ", ".join(f"{gap[r]:+.4f}" for r in range(4))
        lines.append(f"{state}: gaps {gaps}" + (f" failed {failed}" if failed else ""))
    assert report(3, "Steane vs flag gap with two-qubit errors only", ok, "; ".join(lines) + f"; {elapsed:.1f} s")


def test_criterion_4_repetition_code_ordering(report):
    res = _by_key(run_all(preset("fig3", shots=SHOTS, seed=7)))
    bad = []
    for code in ("bit_flip", "phase_flip"):
        d3 = res[(code, 3, "steane_half", "zero_L")]
        d5 = res[(code, 5, "steane_half", "zero_L")]
        bad += [f"{code} d5<d3 at {r}" for r in range(1, 6) if not at_least(d5.estimate(r), d3.estimate(r))]
    for d in (3, 5):
        bf = res[("bit_flip", d, "steane_half", "zero_L")]
        pf = res[("phase_flip", d, "steane_half", "zero_L")]
        bad += [f"phase>bit d{d} at {r}" for r in range(6) if not at_least(bf.estimate(r), pf.estimate(r))]
    assert report(4, "repetition-code ordering", not bad, ", ".join(bad) or "all orderings hold")


def test_criterion_5_color_code_ordering(report):
    res = _by_key(run_all(preset("fig4", shots=SHOTS, seed=7)))
    st0, fl0 = res[("color", 3, "steane_full", "zero_L")], res[("color", 3, "flag_adaptive", "zero_L")]
    stp, flp = res[("color", 3, "steane_full", "plus_L")], res[("color", 3, "flag_adaptive", "plus_L")]
    bad = [f"flag>Steane |0> at {r}" for r in range(1, 4) if not at_least(st0.estimate(r), fl0.estimate(r))]
    for r in range(1, 4):
        adv0 = st0.estimate(r).p_hat - fl0.estimate(r).p_hat
        advp = stp.estimate(r).p_hat - flp.estimate(r).p_hat
        slack = sum((e.wilson_high - e.wilson_low) / 2 for e in (st0.estimate(r), fl0.estimate(r), stp.estimate(r), flp.estimate(r)))
        if adv0 + slack < advp:
            bad.append(f"|+> advantage larger at {r}")
    assert report(5, "color-code ordering", not bad, ", ".join(bad) or "all orderings hold")


def test_criterion_6_oracle_corpus(report):
    bad = []
    for case in CORPUS:
        dist = DenseOracle(case.circuit, case.model).distribution()
        counts = frame_counts(case, 10_000, 11) if case.frame_ok else tableau_counts(case, 10_000, 11)
        if goodness_of_fit(counts, dist) <= 0.01:
            bad.append(f"{case.name} chi-square")
        fixed = deterministic_records(dist, case.circuit.records)
        for j, r in enumerate(case.circuit.records):
            if r in fixed and {k[j] for k in counts} != {fixed[r]}:
                bad.append(f"{case.name} record {r}")
    ok = len(CORPUS) >= 20 and not bad
    assert report(6, "engine vs dense oracle", ok, f"{len(CORPUS)} circuits" + (f"; {bad}" if bad else ""))


def test_criterion_7_wilson_interval(report):
    low, _ = wilson_bounds(1.0, 100, 1.0)
    rng = np.random.default_rng(2024)
    p, n = 0.3, 200
    hits = 0
    for k in rng.binomial(n, p, size=10_000):
        lo, hi = wilson_bounds(k / n, n, 1.0)
        hits += lo <= p <= hi
    coverage = hits / 10_000
    ok = abs(low - 100 / 101) < 1e-9 and abs(coverage - 0.6827) <= 0.03
    assert report(7, "Wilson interval", ok, f"low={low:.9f}, coverage={coverage:.4f}")


def test_criterion_8_worker_determinism(report):
    configs = preset("figA6", shots=SHOTS, seed=7)
    texts = {w: results_to_json([run_experiment(c.replace(workers=w)) for c in configs]) for w in (1, 4, 8)}
    ok = len(set(texts.values())) == 1
    assert report(8, "byte-identical JSON for workers 1, 4, 8", ok)


def test_criterion_9_noiseless_presets(report):
    bad = []
    for name in PRESETS:
        for res in run_all(preset(name, noise_profile="noiseless")):
            for p in res.points:
                if p.estimate.p_hat != 1.0 or p.estimate.n_discarded:
                    bad.append(f"{name} {res.config.key} r{p.rounds}")
    assert report(9, "noiseless presets are perfect", not bad, ", ".join(bad) or f"{len(PRESETS)} presets")

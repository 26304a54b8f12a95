import io
import json
import math

import numpy as np
import pytest

from steaneqec.builders import compose_experiment
from steaneqec.codes import Syndrome, build_lookup_table, flag_lookup_table, make_code
from steaneqec.engine import run_many, run_shot, shot_rng
from steaneqec.noise import NoiseModel
from steaneqec.pauli import PauliString
from steaneqec.protocol import (
    BatchDecoder,
    DecodeError,
    FlaggedOutcome,
    PauliFrame,
    Tables,
    decode_round,
    decode_shot,
    evaluate_logical,
    resolve_flag,
    steane_syndrome,
    update_frame,
    write_traces,
)

COLOR = make_code("color")
STD = build_lookup_table(COLOR, "Z")
HOOK = flag_lookup_table(COLOR, "Z")
I7 = PauliString.identity(7)


def syn(text, fam="Z"):
    return Syndrome.parse(text, fam)


def test_steane_syndrome_from_auxiliary_bits():
    # an X error on data qubit 4 copied onto the auxiliary block
    bits = [0, 0, 0, 1, 0, 0, 0]
    assert str(steane_syndrome(bits, COLOR, "detect_X")) == "+-+"
    assert steane_syndrome(bits, COLOR, "detect_Z").family == "X"
    # a codeword of the auxiliary block gives a trivial syndrome
    assert steane_syndrome([1, 0, 1, 0, 1, 0, 1], COLOR, "detect_X").is_trivial()


def test_decode_round():
    assert decode_round(syn("-+-"), STD) == PauliString.parse("X3", 7)
    with pytest.raises(DecodeError):
        decode_round(syn("-+-", "X"), STD)


def test_resolve_flag_trivial_round():
    assert resolve_flag(FlaggedOutcome(syn("+++"), (0, 0, 0)), None, STD, HOOK) == I7


def test_resolve_flag_hook_needs_a_flag():
    unflagged = syn("+-+")
    fired = FlaggedOutcome(syn("+++"), (1, 0, 0))
    assert resolve_flag(fired, unflagged, STD, HOOK) == PauliString.parse("X3 X7", 7)
    quiet = FlaggedOutcome(syn("-++"), (0, 0, 0))
    assert resolve_flag(quiet, unflagged, STD, HOOK) == PauliString.parse("X4", 7)


def test_resolve_flag_outside_hook_table_uses_single_qubit_recovery():
    fired = FlaggedOutcome(syn("+++"), (0, 1, 0))
    assert resolve_flag(fired, syn("---"), STD, HOOK) == PauliString.parse("X7", 7)


def test_resolve_flag_literal_rule():
    # disagreement alone selects the hook correction
    flagged = FlaggedOutcome(syn("-++"), (0, 0, 0))
    got = resolve_flag(flagged, syn("++-"), STD, HOOK, require_flag=False)
    assert got == PauliString.parse("X4 X6", 7)
    agree = FlaggedOutcome(syn("++-"), (0, 0, 0))
    assert resolve_flag(agree, syn("++-"), STD, HOOK, require_flag=False) == PauliString.parse("X2", 7)


def test_resolve_flag_requires_unflagged_when_nontrivial():
    with pytest.raises(DecodeError):
        resolve_flag(FlaggedOutcome(syn("-++")), None, STD, HOOK)


def test_frame_update_composes():
    f = update_frame(PauliFrame.identity(7), PauliString.parse("X1", 7))
    f = update_frame(f, PauliString.parse("X1 Z2", 7))
    assert f.recovery.equal_up_to_sign(PauliString.parse("Z2", 7))


def test_evaluate_logical():
    frame = PauliFrame.identity(7)
    assert evaluate_logical([0] * 7, "Z", frame, COLOR, "zero_L")
    # one flipped bit is corrected by the ideal last round
    assert evaluate_logical([0, 0, 1, 0, 0, 0, 0], "Z", frame, COLOR, "zero_L")
    # a logical codeword is a failure
    assert not evaluate_logical([1] * 7, "Z", frame, COLOR, "zero_L")
    # the frame is applied before decoding
    two = PauliFrame(PauliString.parse("X1 X2", 7))
    assert evaluate_logical([1, 1, 0, 0, 0, 0, 0], "Z", two, COLOR, "zero_L")
    with pytest.raises(ValueError):
        evaluate_logical([0] * 7, "X", frame, COLOR, "zero_L")


def test_evaluate_logical_repetition_codes():
    bf, pf = make_code("bit_flip", 5), make_code("phase_flip", 5)
    frame = PauliFrame.identity(5)
    assert evaluate_logical([0, 1, 0, 1, 0], "Z", frame, bf, "zero_L")
    assert not evaluate_logical([1, 1, 0, 1, 0], "Z", frame, bf, "zero_L")
    assert evaluate_logical([0, 0, 0, 1, 1], "X", frame, pf, "zero_L")


SETUPS = [
    ("color", 3, "steane_full", "zero_L", 2, None),
    ("color", 3, "steane_full", "plus_L", 2, None),
    ("color", 3, "steane_half", "plus_L", 3, None),
    ("color", 3, "flag_adaptive", "zero_L", 3, None),
    ("color", 3, "flag_adaptive", "plus_L", 2, None),
    ("color", 3, "flag_postselect", "zero_L", 2, (True, False)),
    ("bit_flip", 5, "steane_half", "zero_L", 3, None),
    ("phase_flip", 3, "steane_half", "zero_L", 3, None),
]


@pytest.mark.parametrize("setup", SETUPS, ids=lambda s: "-".join(map(str, s[:5])))
@pytest.mark.parametrize("require_flag", [True, False])
def test_batch_decoder_matches_per_shot_decoder(setup, require_flag):
    code, d, protocol, state, rounds, branch = setup
    exp = compose_experiment(code, protocol, state, rounds, d, branch=branch)
    model = NoiseModel().replace(p_2q=0.06, p_mid_z=0.06)
    batch = run_many(exp.circuit, model, 1500, seed=3)
    fast = BatchDecoder(exp.layout, require_flag).decode(batch)
    tables = Tables.for_code(exp.layout.code)
    for s in range(batch.shots):
        slow = decode_shot(batch.outcome(s), exp.layout, tables, require_flag)
        assert slow.success == bool(fast.success[s]), s
        assert slow.discarded == (not fast.kept[s]), s


@pytest.mark.parametrize("protocol", ["steane_full", "flag_adaptive"])
def test_tableau_and_frame_pipelines_agree_statistically(protocol):
    exp = compose_experiment("color", protocol, "zero_L", 1)
    model = NoiseModel().replace(p_2q=0.05)
    tables = Tables.for_code(COLOR)
    decoded = [decode_shot(run_shot(exp.circuit, model, shot_rng(21, s)), exp.layout, tables) for s in range(3000)]
    kept = [d for d in decoded if not d.discarded]
    p_tab = sum(d.success for d in kept) / len(kept)
    d_tab = 1 - len(kept) / len(decoded)
    fast = BatchDecoder(exp.layout).decode(run_many(exp.circuit, model, 60_000, seed=21))
    succ, denom, disc = fast.counts()
    p_frame, d_frame = succ / denom, disc / 60_000
    assert abs(p_tab - p_frame) < 4 * math.sqrt(p_frame * (1 - p_frame) / len(kept)) + 1e-3
    assert abs(d_tab - d_frame) < 4 * math.sqrt(d_frame * (1 - d_frame) / 3000) + 1e-3


def test_adaptive_branch_mismatch_is_an_error():
    exp = compose_experiment("color", "flag_adaptive", "zero_L", 1)
    out = run_shot(exp.circuit, NoiseModel.noiseless(), shot_rng(0, 0))
    out.records["r1.p1.SX1"] ^= 1  # flagged syndrome now non-trivial but no remeasurement ran
    with pytest.raises(DecodeError):
        decode_shot(out, exp.layout)


def test_noiseless_shots_always_succeed():
    for setup in SETUPS:
        code, d, protocol, state, rounds, branch = setup
        if branch is not None:
            branch = (False,) * rounds
        exp = compose_experiment(code, protocol, state, rounds, d, branch=branch)
        fast = BatchDecoder(exp.layout).decode(run_many(exp.circuit, NoiseModel.noiseless(), 200, seed=1))
        assert fast.success.all() and fast.kept.all()


def test_traces_are_json_lines():
    exp = compose_experiment("color", "flag_adaptive", "zero_L", 2)
    batch = run_many(exp.circuit, NoiseModel(), 50, seed=2)
    buf = io.StringIO()
    assert write_traces(buf, batch, exp.layout, limit=10) == 10
    lines = buf.getvalue().splitlines()
    assert len(lines) == 10
    doc = json.loads(lines[0])
    assert {"success", "discarded", "reason", "frame", "rounds"} <= set(doc)
    assert all(r["half"] in ("flagged", "unflagged") for r in doc["rounds"])


def test_discarded_counts_policy():
    exp = compose_experiment("color", "steane_full", "zero_L", 1)
    fast = BatchDecoder(exp.layout).decode(run_many(exp.circuit, NoiseModel(), 4000, seed=8))
    s_ex, n_ex, disc = fast.counts()
    s_in, n_in, _ = fast.counts(include_discarded=True)
    assert n_ex + disc == n_in == 4000
    assert disc > 0 and s_in >= s_ex
    assert np.array_equal(fast.kept, fast.discard_code == 0)

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from psta.machines import SAMPLES
from psta.ptm import (
    ACCEPT, REJECT, PtmError, PtmSpec, Transition, accepts_by_majority, ptm_run, ptm_step,
    recognizes_with_error,
)

F = Fraction
SAMPLE_DIR = Path(__file__).resolve().parent.parent / "samples"
FILES = {"coin-writer": "coin_writer.json", "copier": "copier.json",
         "random-walk": "random_walk.json", "biased-acceptor": "biased_acceptor.json"}


def test_coin_writer():
    out = ptm_run(SAMPLES["coin-writer"]().spec, "0", 1, 1)
    assert out.tapes == {"0": F(1, 2), "1": F(1, 2)}
    assert out.verdicts == {ACCEPT: 1}


def test_copier():
    out = ptm_run(SAMPLES["copier"]().spec, "10", 2, 3)
    assert out.tapes == {"110": 1}
    assert out.verdicts == {ACCEPT: 1}


def test_biased_acceptor():
    spec = SAMPLES["biased-acceptor"]().spec
    assert ptm_run(spec, "1", 2, 2).verdicts == {ACCEPT: F(3, 4), REJECT: F(1, 4)}
    assert ptm_run(spec, "0", 2, 2).verdicts == {ACCEPT: F(1, 4), REJECT: F(3, 4)}


def test_final_states_absorb():
    spec = SAMPLES["coin-writer"]().spec
    assert ptm_step(spec, ("1", 0, (1,)), 0) == ("1", 0, (1,))
    assert ptm_run(spec, "1", 5, 2).tapes == ptm_run(spec, "1", 1, 2).tapes


def test_left_move_at_cell_zero_stays():
    spec = SAMPLES["copier"]().spec
    assert ptm_step(spec, ("01", 0, (0, 0)), 0) == ("11", 0, (0, 0))


@pytest.mark.parametrize("name", sorted(FILES))
def test_json_round_trip(name):
    spec = SAMPLES[name]().spec
    assert PtmSpec.loads(spec.dumps()) == spec
    assert PtmSpec.loads((SAMPLE_DIR / FILES[name]).read_text()) == spec


def _coin_writer_json() -> dict:
    return SAMPLES["coin-writer"]().spec.to_json()


def test_schema_errors_name_a_path():
    d = _coin_writer_json()
    del d["delta1"][2]["next"]
    with pytest.raises(PtmError, match=r"\$\.delta1\[2\]: missing field 'next'") as e:
        PtmSpec.from_json(d)
    assert e.value.code == "schema"
    d = _coin_writer_json()
    d["delta0"].append(dict(d["delta0"][0]))
    with pytest.raises(PtmError, match="duplicate"):
        PtmSpec.from_json(d)
    with pytest.raises(PtmError, match=r"\$: missing field 'initial'"):
        PtmSpec.from_json({k: v for k, v in _coin_writer_json().items() if k != "initial"})


def test_non_total_table():
    d = _coin_writer_json()
    d["delta0"] = d["delta0"][:-1]
    with pytest.raises(PtmError) as e:
        PtmSpec.from_json(d)
    assert e.value.code == "non-total-table"


@pytest.mark.parametrize("patch", [
    {"state_width": 0}, {"initial": "2"}, {"accepting": ["1"], "rejecting": ["1"]},
])
def test_bad_spec(patch):
    with pytest.raises(PtmError) as e:
        PtmSpec.from_json({**_coin_writer_json(), **patch})
    assert e.value.code == "bad-spec"


def test_run_errors():
    spec = SAMPLES["copier"]().spec
    with pytest.raises(PtmError) as e:
        ptm_run(spec, "0", 2, 1)
    assert e.value.code == "tape-overflow"
    with pytest.raises(PtmError) as e:
        ptm_run(spec, "0", 1, 2)
    assert e.value.code == "unhalted-path"
    with pytest.raises(PtmError) as e:
        ptm_run(spec, "012", 2, 3)
    assert e.value.code == "bad-input"
    with pytest.raises(PtmError) as e:
        ptm_run(spec, "000", 2, 2)
    assert e.value.code == "tape-overflow"


def test_error_bound_predicates():
    results = {"1": {ACCEPT: F(3, 4), REJECT: F(1, 4)}, "0": {ACCEPT: F(1, 4), REJECT: F(3, 4)}}
    member = {"1": True, "0": False}
    assert recognizes_with_error(results, member, "1/4")
    assert not recognizes_with_error(results, member, "1/5")
    assert accepts_by_majority(results, member)
    assert not accepts_by_majority(results, {"1": False, "0": False})
    with pytest.raises(ValueError):
        recognizes_with_error(results, member, 2)


def test_ties_satisfy_majority():
    tie = {"x": {ACCEPT: F(1, 2), REJECT: F(1, 2)}}
    assert accepts_by_majority(tie, {"x": True})
    assert accepts_by_majority(tie, {"x": False})
    assert not recognizes_with_error(tie, {"x": True}, "1/4")


@given(st.text("01", max_size=4), st.integers(0, 4))
def test_outputs_are_distributions(x, extra):
    s = SAMPLES["random-walk"]()
    n = len(x)
    out = ptm_run(s.spec, x, s.p(n) + extra, s.q(n))
    assert out.mass() == 1 == sum(out.verdicts.values())
    assert all(len(t) == s.q(n) for t in out.tapes)
    assert all(p.denominator & (p.denominator - 1) == 0 for p in out.tapes.values())


def test_deterministic_flag():
    assert SAMPLES["copier"]().spec.is_deterministic()
    assert not SAMPLES["coin-writer"]().spec.is_deterministic()
    assert Transition("0", 1, "R") == Transition("0", 1, "R")

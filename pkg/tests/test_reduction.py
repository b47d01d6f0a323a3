from __future__ import annotations

import pytest

from psta.reduction import ReductionError, RedexSite, find_redexes, is_snf, step
from psta.syntax import parse_term
from psta.terms import is_s_linear, size

P = parse_term
T, F, I = P(r"\x.\y.x"), P(r"\x.\y.y"), P(r"\x.x")
COIN = P(r"proj(<\x.\y.x, \x.\y.y>)")


def test_no_redexes_under_bang():
    assert find_redexes(P(r"!((\x.x) y)")) == []
    assert is_snf(P(r"!((\x.x) y)"))


def test_coin_site():
    assert find_redexes(COIN) == [RedexSite((), "proj")]


def test_preorder():
    sites = find_redexes(P(r"(\x.x) ((\y.y) z)"))
    assert [s.kind for s in sites] == ["beta", "beta"]
    assert sites[0].path == () and len(sites[1].path) == 1


def test_copy_value_slot_not_visited():
    t = P(r"copy^{(\q.q) (\r.r)} (\y.y) as a, b in <a, b>")
    assert all(s.path != (0,) for s in find_redexes(t))


def test_step_proj_and_bang_beta():
    assert step(COIN, RedexSite((), "proj")).successors == (T, F)
    fig = P(r"(\!x. <proj(<\x.\y.x, \x.\y.y>), d(x)>) !(\x.x)")
    (out,) = set(step(fig, RedexSite((), "bang-beta")).successors)
    assert out == P(r"<proj(<\x.\y.x, \x.\y.y>), \x.x>")


def test_step_copy():
    t = P(r"copy^{\z.z} (\y.y) as a, b in <a, b>")
    (out,) = set(step(t, RedexSite((), "copy")).successors)
    assert out == P(r"<\y.y, \y.y>")


def test_invalid_site():
    with pytest.raises(ReductionError):
        step(I, RedexSite((), "beta"))


def test_copy_not_ready_is_not_a_redex():
    t = P(r"copy^{\z.z} ((\y.y) (\w.w)) as a, b in <a, b>")
    kinds = {(s.path, s.kind) for s in find_redexes(t)}
    assert ((), "copy") not in kinds and any(k == "beta" for _, k in kinds)


def test_snf_examples():
    assert is_snf(P(r"<!proj(<\x.\y.x, \x.\y.y>), !proj(<\x.\y.x, \x.\y.y>)>"))
    assert not is_snf(COIN)
    assert is_snf(I)
    assert is_snf(P(r"proj(\x.x)"))  # stuck, not a redex


def test_copy_shrinks_when_bound_is_largest():
    t = P(r"copy^{\z.\w.z} (\y.y) as a, b in <a, b>")
    (out,) = set(step(t, RedexSite((), "copy")).successors)
    assert size(out) < size(t)


def test_successors_stay_s_linear():
    t = P(r"(\x. x (\y.y)) (\z.z)")
    for s in find_redexes(t):
        for out in step(t, s, check=True).successors:
            assert is_s_linear(out)

"""Semantic operators against hand-derived oracles, the evaluator, and
the relational replay checker."""

import pytest

from seclus.ast import BASE, On
from seclus.interp import (
    ABSENT,
    ClockMismatch,
    CausalityError,
    base_of,
    check_history,
    respects_clock,
    run_node,
    schedule,
    sem_clock,
    sem_const,
    sem_fby_L,
    sem_fby_NL,
    sem_ite,
    sem_lift1,
    sem_lift2,
    sem_merge,
    sem_when,
)
from seclus.normalise import fby_init, normalize_program
from seclus.parser import parse_program

from conftest import load

A = ABSENT


# -- operator oracles (hand-derived unfoldings, frozen) ---------------------


def test_sem_const():
    assert sem_const([True, False, True], 5) == [5, A, 5]
    assert sem_const([False, False], 7) == [A, A]
    assert sem_const([True], True) == [True]


def test_sem_lift():
    assert sem_lift1("not", [True, A]) == [False, A]
    assert sem_lift2("+", [1], [2]) == [3]
    with pytest.raises(ClockMismatch):
        sem_lift2("+", [1], [A])


def test_sem_when():
    assert sem_when(True, [True, False, A], [1, 2, A]) == [1, A, A]
    assert sem_when(True, [A, A], [A, A]) == [A, A]
    with pytest.raises(ClockMismatch):
        sem_when(True, [A], [1])


def test_sem_merge():
    assert sem_merge([True, False], [1, A], [A, 2]) == [1, 2]
    assert sem_merge([A, A], [A, A], [A, A]) == [A, A]
    with pytest.raises(ClockMismatch):
        sem_merge([True], [1], [2])


def test_sem_ite():
    assert sem_ite([True, False], [1, 1], [2, 2]) == [1, 2]
    assert sem_ite([A], [A], [A]) == [A]
    with pytest.raises(ClockMismatch):
        sem_ite([True], [A], [2])


def test_sem_fby_L():
    assert sem_fby_L([1, 2, 3], [10, 20, 30]) == [1, 10, 20]
    assert sem_fby_L([A, 1], [A, 9]) == [A, 1]
    assert sem_fby_L([A, A], [A, A]) == [A, A]


def test_sem_fby_NL():
    assert sem_fby_NL(0, [1, 2, 3]) == [0, 1, 2]
    assert sem_fby_NL(0, [1, A, 2]) == [0, A, 1]
    assert sem_fby_NL(0, [A, A]) == [A, A]


def test_sem_clock():
    bs = [True, True]
    assert sem_clock({}, bs, BASE) == bs
    H = {"x": [True, False]}
    assert sem_clock(H, bs, On(BASE, "x", True)) == [True, False]
    with pytest.raises(ClockMismatch):
        sem_clock({"x": [A]}, [True], On(BASE, "x", True))


def test_base_of():
    assert base_of([[1, A, 2]]) == [True, False, True]
    assert base_of([[], []]) == []
    with pytest.raises(ClockMismatch):
        base_of([[1, A], [1, 2]])


def test_respects_clock():
    assert respects_clock({"x": [1, A]}, [True, False])
    assert not respects_clock({"x": [A, 1]}, [True, False])
    assert respects_clock({}, [True, False])


def test_fby_agreement():
    # constant-headed Lustre delay equals the NLustre register operator
    bs = [True, False, True, True]
    vs = [7, A, 8, 9]
    assert sem_fby_L(sem_const(bs, 3), vs) == sem_fby_NL(3, vs)


# -- scheduling --------------------------------------------------------------


def test_schedule_cnt_dn(cnt_dn):
    node = cnt_dn.node("cnt_dn")
    assert [type(e).__name__ for e in schedule(node)] == ["Equation"]


def test_schedule_normalised_order(cnt_dn):
    node = normalize_program(cnt_dn).node("cnt_dn")
    order = [e.target for e in schedule(node)]
    # the delay temp is instantaneously independent; cpt reads it
    assert order.index("v1") < order.index("cpt")


def test_instantaneous_cycle():
    p = parse_program("node c(i: int) returns (x: int) let x = x + 1; tel")
    with pytest.raises(CausalityError):
        schedule(p.node("c"))


def test_cycle_broken_by_delay():
    p = parse_program("node c(i: int) returns (x: int) let x = 0 fby (x + 1); tel")
    schedule(p.node("c"))  # no error


# -- run_node oracles --------------------------------------------------------


def test_cnt_dn_execution(cnt_dn):
    H = run_node(cnt_dn, "cnt_dn", [[True, False, False], [3, 3, 3]])
    assert H["cpt"] == [3, 2, 1]


def test_cnt_dn_reset_every_instant(cnt_dn):
    H = run_node(cnt_dn, "cnt_dn", [[True, True], [5, 7]])
    assert H["cpt"] == [5, 7]


def test_identity_node():
    p = parse_program("node f(x: int) returns (o: int) let o = x; tel")
    assert run_node(p, "f", [[1, 2]])["o"] == [1, 2]


def test_arity_error(cnt_dn):
    with pytest.raises(Exception):
        run_node(cnt_dn, "cnt_dn", [[True]])


@pytest.mark.parametrize("fixture", ["cnt_dn.lus", "re_trig.lus"])
def test_prefix_monotonicity(fixture):
    import random

    from seclus.verify import random_inputs

    prog = load(fixture)
    node = prog.nodes[-1]
    rng = random.Random(11)
    inputs = random_inputs(node, 40, rng)
    H40 = run_node(prog, node.name, inputs)
    H25 = run_node(prog, node.name, [s[:25] for s in inputs])
    for x in H25:
        assert H40[x][:25] == H25[x]


# -- relational replay checker ----------------------------------------------


@pytest.mark.parametrize("fixture", ["cnt_dn.lus", "re_trig.lus"])
def test_replay_validates_all_forms(fixture):
    import random

    from seclus.verify import random_inputs

    prog = load(fixture)
    forms = [
        (prog, "lustre"),
        (normalize_program(prog), "nlustre"),
        (fby_init(normalize_program(prog)), "nlustre"),
    ]
    for form, dialect in forms:
        for node in form.nodes:
            rng = random.Random(5)
            inputs = random_inputs(node, 30, rng)
            H = run_node(form, node.name, inputs, dialect=dialect)
            bs = [True] * 30
            assert check_history(form, node.name, H, bs) == []


def test_replay_rejects_corrupted_history(cnt_dn):
    H = run_node(cnt_dn, "cnt_dn", [[True, False, False], [3, 3, 3]])
    bad = dict(H)
    bad["cpt"] = [3, 2, 99]
    assert check_history(cnt_dn, "cnt_dn", bad, [True] * 3) != []


def test_clock_discipline():
    # variables on a derived clock are absent exactly where it is false
    src = """
    node s(c: bool; l: int) returns (o: int)
      var x: int :: base on c;
    let
      x = (l + 1) when c;
      o = merge c (x) (0 when not c);
    tel
    """
    p = parse_program(src)
    H = run_node(p, "s", [[True, False, True], [1, 2, 3]])
    assert H["x"] == [2, A, 4]
    assert H["o"] == [2, 0, 4]

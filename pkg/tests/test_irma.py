import math

import pytest
from hypothesis import given, strategies as st

from gaborbarcode.irma import (AXIS_LENGTHS, BranchTable, EvalRecord, IrmaCodeError,
                               axis_errors, build_branch_table, delta, eta_suitability,
                               load_branch_table, pair_error, parse_irma, rank_by_suitability,
                               save_branch_table, total_error)

UNIFORM10 = BranchTable.uniform(10)


def test_parse_example():
    c = parse_irma("1121-4a0-914-700")
    assert c.axes == ("1121", "4a0", "914", "700")
    assert c.char(2, 2) == "a" and c.char(4, 1) == "7"
    assert str(c) == "1121-4a0-914-700"
    assert parse_irma("1121--4a0--914--700") == c


@pytest.mark.parametrize("bad", ["1121-4a0-914", "11214a0914700", "1121-4a0-914-7000",
                                 "112-14a0-914-700", "1121-4a0-914-7_0", ""])
def test_parse_errors(bad):
    with pytest.raises(IrmaCodeError):
        parse_irma(bad)


def test_delta_examples():
    q = parse_irma("1121-4a0-914-700")
    r = parse_irma("1131-4a0-914-700")
    for j, n in enumerate(AXIS_LENGTHS, 1):
        for i in range(1, n + 1):
            assert delta(q, q, j, i) == 0
    assert [delta(q, r, 1, i) for i in (1, 2, 3, 4)] == [0, 0, 1, 1]
    s = parse_irma("1121-4a0-914-800")
    assert [delta(q, s, 4, i) for i in (1, 2, 3)] == [1, 1, 1]


def test_delta_index_errors():
    q = parse_irma("1121-4a0-914-700")
    for j, i in [(0, 1), (5, 1), (1, 5), (2, 4), (3, 0)]:
        with pytest.raises(IndexError):
            delta(q, q, j, i)


def test_pair_error_examples():
    q = parse_irma("1121-4a0-914-700")
    assert pair_error(q, q, UNIFORM10) == 0
    # hand evaluation: 0.1 * (1 + 1/2 + 1/3 + 1/4) = 0.2083333...
    assert abs(pair_error(q, parse_irma("2121-4a0-914-700"), UNIFORM10) - 0.25 / 1.2) < 1e-9
    # single delta term at i = 3: 0.1 / 3
    assert abs(pair_error(q, parse_irma("1121-4a1-914-700"), UNIFORM10) - 1 / 30) < 1e-9


def test_total_error():
    q = parse_irma("1121-4a0-914-700")
    a, b = parse_irma("2121-4a0-914-700"), parse_irma("1121-4a1-914-700")
    assert total_error([(q, q), (q, q)], UNIFORM10) == 0
    assert total_error([(q, a)], UNIFORM10) == pair_error(q, a, UNIFORM10)
    assert abs(total_error([(q, a), (q, b)], UNIFORM10) - (0.25 / 1.2 + 1 / 30)) < 1e-9
    with pytest.raises(ValueError):
        total_error([], UNIFORM10)


def test_axis_errors_and_branch_weights():
    table = BranchTable(((2, 3, 4, 5), (6, 7, 8), (1, 1, 1), (9, 9, 9)))
    q = parse_irma("1121-4a0-914-700")
    r = parse_irma("1122-4a0-924-701")
    e = axis_errors(q, r, table)
    assert e[0] == pytest.approx(1 / (5 * 4))
    assert e[1] == 0
    assert e[2] == pytest.approx(1 / 2 + 1 / 3)
    assert e[3] == pytest.approx(1 / 27)
    assert pair_error(q, r, table) == pytest.approx(sum(e))


def test_build_branch_table():
    one = build_branch_table([parse_irma("1121-4a0-914-700")])
    assert all(x == 1 for row in one.b for x in row)
    t = build_branch_table(parse_irma(c) for c in ["1121-4a0-914-700", "2121-4a0-914-700",
                                                    "3121-4a0-914-700"])
    assert t.at(1, 1) == 3 and t.at(1, 2) == 1
    with pytest.raises(ValueError):
        build_branch_table([])


def test_branch_table_file(tmp_path):
    t = BranchTable(((2, 3, 4, 5), (6, 7, 8), (1, 1, 1), (9, 9, 9)))
    save_branch_table(t, tmp_path / "b.txt")
    assert load_branch_table(tmp_path / "b.txt").b == t.b
    (tmp_path / "bad.txt").write_text("1 2 3\n1 2 3\n1 2 3\n1 2 3\n")
    with pytest.raises(ValueError):
        load_branch_table(tmp_path / "bad.txt")
    with pytest.raises(ValueError):
        BranchTable(((0, 1, 1, 1), (1, 1, 1), (1, 1, 1), (1, 1, 1)))


codes = st.tuples(*[st.text("01ab", min_size=n, max_size=n) for n in AXIS_LENGTHS]).map(
    lambda axes: parse_irma("-".join(axes)))


@given(codes, codes)
def test_delta_monotone_in_position(q, r):
    for j, n in enumerate(AXIS_LENGTHS, 1):
        seq = [delta(q, r, j, i) for i in range(1, n + 1)]
        assert seq == sorted(seq)


@given(codes, codes)
def test_pair_error_nonnegative_zero_iff_equal(q, r):
    e = pair_error(q, r, UNIFORM10)
    assert e >= 0
    assert (e == 0) == (q == r)


@pytest.mark.parametrize("axis", [1, 2, 3, 4])
def test_earlier_mismatch_costs_more(axis):
    base = parse_irma("0000-000-000-000")
    costs = []
    for i in range(1, AXIS_LENGTHS[axis - 1] + 1):
        axes = list(base.axes)
        axes[axis - 1] = axes[axis - 1][:i - 1] + "1" + axes[axis - 1][i:]
        other = parse_irma("-".join(axes))
        cost = pair_error(base, other, UNIFORM10)
        assert cost == pytest.approx(math.fsum(0.1 / h for h in range(i, AXIS_LENGTHS[axis - 1] + 1)))
        costs.append(cost)
    assert costs == sorted(costs, reverse=True) and len(set(costs)) == len(costs)


def test_eta_examples():
    assert eta_suitability(EvalRecord("RBC4", 476.62, 512), 501.96, 8192) == pytest.approx(
        16.85065671, abs=1e-6)
    assert eta_suitability(EvalRecord("GBC8,16,23,23", 351.798, 8192), 501.96, 8192) == pytest.approx(
        1.42684154, abs=1e-6)
    assert eta_suitability(EvalRecord("max", 501.96, 8192), 501.96, 8192) == 1.0
    with pytest.raises(ZeroDivisionError):
        eta_suitability(EvalRecord("zero", 0.0, 10), 1.0, 10)


def test_eval_record_invariants():
    with pytest.raises(ValueError):
        EvalRecord("x", -1.0, 10)
    with pytest.raises(ValueError):
        EvalRecord("x", 1.0, 0)


def test_rank_by_suitability_uses_maxima():
    ranked = rank_by_suitability([EvalRecord("a", 10.0, 100), EvalRecord("b", 5.0, 400)])
    assert [r.method_name for r in ranked] == ["a", "b"]
    assert ranked[0].eta_suitability == pytest.approx(4.0)
    assert ranked[1].eta_suitability == pytest.approx(2.0)

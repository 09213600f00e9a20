from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cpfolio.scoring import (
    InstanceResult,
    ScoringError,
    borda_score,
    format_table,
    pairwise_score,
    read_results_csv,
    write_results_csv,
    write_scores_csv,
)

from helpers import FIXTURES, read_expected_scores

T = 1200


def r(kind, time, obj=None, direction="min", solver="s", inst="i"):
    return InstanceResult(inst, solver, kind, time, obj, direction)


def test_proved_beats_unproved():
    assert pairwise_score(r("OPTIMAL", 100, 10), r("SAT", 50, 10), "complete", T) == (1, 0)


def test_time_split_on_equal_answers():
    assert pairwise_score(r("SAT", 300, 10), r("SAT", 900, 10), "complete", T) == (Fraction(3, 4), Fraction(1, 4))


def test_wrong_scores_nothing():
    assert pairwise_score(r("WRONG", 1), r("SAT", 900, 10), "complete", T) == (0, 1)
    assert pairwise_score(r("SAT", 900, 10), r("WRONG", 1), "complete", T) == (1, 0)
    assert pairwise_score(r("WRONG", 1), r("UNKNOWN", T), "complete", T) == (0, Fraction(1, 2))
    assert pairwise_score(r("WRONG", 1), r("WRONG", 2), "complete", T) == (0, 0)


def test_better_objective_wins_by_direction():
    assert pairwise_score(r("SAT", 9, 3), r("SAT", 1, 5), "complete", T) == (1, 0)
    assert pairwise_score(r("SAT", 9, 3, "max"), r("SAT", 1, 5, "max"), "complete", T) == (0, 1)


def test_incomplete_mode_drops_the_completion_bonus():
    assert pairwise_score(r("OPTIMAL", 100, 10), r("SAT", 50, 10), "incomplete", T) == (Fraction(1, 3), Fraction(2, 3))
    csp_unsat = r("UNSAT", 10, None, None)
    csp_unknown = r("UNKNOWN", T, None, None)
    assert pairwise_score(csp_unsat, csp_unknown, "complete", T) == (1, 0)
    assert pairwise_score(csp_unsat, csp_unknown, "incomplete", T) == (Fraction(1, 2), Fraction(1, 2))


def test_satisfaction_answers_split_by_time():
    assert pairwise_score(r("SAT", 10, None, None), r("UNSAT", 30, None, None), "complete", T) == (
        Fraction(3, 4), Fraction(1, 4))


def test_both_unknown_and_zero_times():
    assert pairwise_score(r("UNKNOWN", T), r("UNKNOWN", T), "complete", T) == (Fraction(1, 2), Fraction(1, 2))
    assert pairwise_score(r("SAT", 0, 1), r("SAT", 0, 1), "complete", T) == (Fraction(1, 2), Fraction(1, 2))


def test_pairwise_errors():
    with pytest.raises(ScoringError):
        pairwise_score(r("SAT", 1, 1), r("SAT", 1, 1, inst="other"), "complete", T)
    with pytest.raises(ScoringError):
        pairwise_score(r("SAT", 1, 1), r("SAT", 1, 1), "fancy", T)
    with pytest.raises(ScoringError):
        r("SAT", 1, None, "min")
    with pytest.raises(ScoringError):
        r("UNKNOWN", 1, 4, "min")
    with pytest.raises(ScoringError):
        r("MAYBE", 1)


def test_two_identical_solvers_split_evenly():
    table = borda_score([r("SAT", 5, 1, solver="a"), r("SAT", 5, 1, solver="b")], T)
    assert table.complete == {"a": Fraction(1, 2), "b": Fraction(1, 2)}


def test_duplicate_rows_rejected():
    with pytest.raises(ScoringError, match="duplicate"):
        borda_score([r("SAT", 5, 1, solver="a"), r("SAT", 6, 1, solver="a")], T)


def test_missing_results_count_as_unknown():
    table = borda_score([r("SAT", 5, 1, solver="a")], T, solvers=["a", "b"])
    assert table.complete == {"a": 1, "b": 0}


def test_committed_fixture_totals():
    results = read_results_csv(FIXTURES / "borda" / "results.csv")
    expected = read_expected_scores(FIXTURES / "borda" / "expected.csv")
    table = borda_score(results, 100)
    for solver, (complete, incomplete) in expected.items():
        assert table.complete[solver] == complete
        assert table.incomplete[solver] == incomplete
    assert [s for s, _ in table.ranking()] == ["B", "A", "C"]
    assert [s for s, _ in table.ranking("incomplete")] == ["B", "A", "C"]


def test_all_wrong_solver_totals_zero():
    rows = []
    for i in range(5):
        rows += [
            InstanceResult(f"p{i}", "bad", "WRONG", 1, None, None),
            InstanceResult(f"p{i}", "ok", "SAT", 10, None, None),
            InstanceResult(f"p{i}", "slow", "UNKNOWN", T, None, None),
        ]
    table = borda_score(rows, T)
    assert table.complete["bad"] == 0 and table.incomplete["bad"] == 0


def test_csv_round_trip(tmp_path):
    results = read_results_csv(FIXTURES / "borda" / "results.csv")
    write_results_csv(results, tmp_path / "r.csv")
    assert read_results_csv(tmp_path / "r.csv") == results
    write_scores_csv(borda_score(results, 100), tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[1] == "1,B,6.083333,5.283333"


def test_csv_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("instance,solver,kind,time,objective,direction\np,a,perfect,1,,none\n")
    with pytest.raises(ScoringError, match=":2: unknown kind"):
        read_results_csv(path)
    path.write_text("instance,solver,kind\n")
    with pytest.raises(ScoringError, match="expected header"):
        read_results_csv(path)
    path.write_text("instance,solver,kind,time,objective,direction\np,a,sat,1,,min\n")
    with pytest.raises(ScoringError, match=":2:"):
        read_results_csv(path)


def test_format_table():
    table = borda_score(read_results_csv(FIXTURES / "borda" / "results.csv"), 100)
    lines = format_table(table, "incomplete").splitlines()
    assert lines[0].split() == ["rank", "solver", "incomplete"]
    assert lines[1].split() == ["1", "B", "5.28"]


KINDS = ["OPTIMAL", "SAT", "UNSAT", "UNKNOWN", "WRONG"]


@st.composite
def results(draw, inst="i", solver="s"):
    direction = draw(st.sampled_from(["min", "max", None]))
    kind = draw(st.sampled_from(KINDS))
    if direction is not None and kind == "UNSAT":
        kind = "UNKNOWN"
    obj = draw(st.integers(-5, 5)) if direction is not None and kind in ("OPTIMAL", "SAT") else None
    time = T if kind == "UNKNOWN" else draw(st.integers(0, T))
    return InstanceResult(inst, solver, kind, time, obj, direction)


def same_direction(a, b):
    return a.direction == b.direction


@settings(max_examples=500)
@given(results(), results(solver="t"), st.sampled_from(["complete", "incomplete"]))
def test_pair_sums(a, b, mode):
    if not same_direction(a, b):
        return
    pa, pb = pairwise_score(a, b, mode, T)
    assert 0 <= pa <= 1 and 0 <= pb <= 1
    if a.kind == b.kind == "WRONG":
        assert (pa, pb) == (0, 0)
    elif "WRONG" not in (a.kind, b.kind):
        assert pa + pb == 1
    assert pairwise_score(b, a, mode, T) == (pb, pa)


@settings(max_examples=300)
@given(results(), results(solver="t"))
def test_incomplete_ignores_optimality_proof(a, b):
    if not same_direction(a, b) or a.kind != "OPTIMAL":
        return
    downgraded = InstanceResult(a.instance, a.solver, "SAT", a.time, a.objective, a.direction)
    assert pairwise_score(a, b, "incomplete", T) == pairwise_score(downgraded, b, "incomplete", T)


LADDER = [("WRONG", None), ("UNKNOWN", None), ("SAT", 9), ("SAT", 4), ("OPTIMAL", 4)]


@settings(max_examples=200)
@given(st.lists(st.sampled_from(range(len(LADDER))), min_size=3, max_size=3), st.integers(0, 3))
def test_upgrading_an_answer_never_lowers_the_total(levels, who):
    who = min(who, 2)

    def table(lv):
        rows = []
        for s, level in zip("abc", lv):
            kind, obj = LADDER[level]
            time = T if kind == "UNKNOWN" else 100
            rows.append(InstanceResult("i", s, kind, time, obj, "min"))
        return borda_score(rows, T)

    if levels[who] + 1 >= len(LADDER):
        return
    better = list(levels)
    better[who] += 1
    s = "abc"[who]
    assert table(better).complete[s] >= table(levels).complete[s]

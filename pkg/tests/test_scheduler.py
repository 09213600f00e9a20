import random

import pytest
from hypothesis import given, settings, strategies as st

from cpfolio.features import FeatureVector
from cpfolio.kb import KnowledgeBase, RunRecord, neighbors, solver_stats
from cpfolio.scheduler import (
    CoreAssignment,
    Schedule,
    parallelize,
    presolve_prefix,
    sunny_schedule,
    uniform_schedule,
)

from helpers import random_kb, schedule_oracle


def _kb(table, timeout=1200.0):
    """table: {instance: {solver: (status, time)}}"""
    inst = {i: FeatureVector((float(n),), "s") for n, i in enumerate(sorted(table))}
    runs = {
        (i, s): RunRecord(i, s, st_, t)
        for i, row in table.items()
        for s, (st_, t) in row.items()
    }
    solvers = sorted({s for row in table.values() for s in row})
    return KnowledgeBase("s", timeout, inst, runs, tuple(solvers))


def _schedule(kb, T=1200, portfolio=None):
    portfolio = portfolio or list(kb.solvers)
    hood = sorted(kb.instances)
    return sunny_schedule(solver_stats(kb, hood, portfolio), portfolio, T, len(hood))


def test_single_solver_covering_everything():
    kb = _kb({f"n{i}": {"A": ("SAT", 5.0), "B": ("UNKNOWN", 1200.0)} for i in range(4)})
    assert _schedule(kb).slots == (("A", 1_200_000),)


def test_hand_built_fixture():
    kb = _kb({
        "n1": {"A": ("SAT", 5.0), "B": ("UNKNOWN", 1200.0), "C": ("SAT", 30.0)},
        "n2": {"A": ("UNSAT", 15.0), "B": ("UNKNOWN", 1200.0), "C": ("UNKNOWN", 1200.0)},
        "n3": {"A": ("UNKNOWN", 1200.0), "B": ("SAT", 40.0), "C": ("UNKNOWN", 1200.0)},
        "n4": {"A": ("UNKNOWN", 1200.0), "B": ("UNKNOWN", 1200.0), "C": ("UNKNOWN", 1200.0)},
    })
    sigma = _schedule(kb)
    # A covers 2, B covers 1, one instance unsolved; A is the backup: 3:1
    assert sigma.slots == (("A", 900_000), ("B", 300_000))
    assert sigma.slots == tuple(schedule_oracle(kb, sorted(kb.instances), ["A", "B", "C"], 1_200_000, 4))


def test_nothing_solved_gives_backup_everything():
    kb = _kb({
        "n1": {"A": ("UNKNOWN", 1200.0), "B": ("UNKNOWN", 1200.0)},
        "n2": {"A": ("ERROR", 1200.0), "B": ("UNKNOWN", 1200.0)},
    })
    assert _schedule(kb).slots == (("A", 1_200_000),)


def test_backup_uses_whole_kb_counts():
    # in the neighborhood {n1} nobody solves; over the whole KB B is strongest
    kb = _kb({
        "n1": {"A": ("UNKNOWN", 10.0), "B": ("UNKNOWN", 10.0)},
        "n2": {"A": ("UNKNOWN", 10.0), "B": ("SAT", 3.0)},
    }, timeout=10.0)
    stats = solver_stats(kb, ["n1"])
    assert sunny_schedule(stats, ["A", "B"], 10, 1).slots == (("B", 10_000),)


def test_schedule_errors():
    kb = _kb({"n1": {"A": ("SAT", 1.0)}})
    stats = solver_stats(kb, ["n1"])
    with pytest.raises(ValueError):
        sunny_schedule(stats, [], 10, 1)
    with pytest.raises(ValueError):
        sunny_schedule(stats, ["A"], 0, 1)
    with pytest.raises(ValueError):
        sunny_schedule(stats, ["A", "Z"], 10, 1)


def test_matches_enumeration_oracle():
    rng = random.Random(2024)
    for _ in range(300):
        n = rng.randint(1, 5)
        kb = random_kb(rng, rng.randint(1, 20), n, dim=2, grid=rng.choice([None, 2]), optimization=0.3)
        k = rng.randint(1, min(12, len(kb)))
        hood = neighbors(kb, FeatureVector((rng.uniform(-5, 5), 0.5), "test/v1"), k)
        portfolio = list(kb.solvers)
        rng.shuffle(portfolio)
        T = rng.choice([1, 7.5, 100, 1200, 3.333])
        sigma = sunny_schedule(solver_stats(kb, hood, portfolio), portfolio, T, k)
        expected = schedule_oracle(kb, hood, sorted(portfolio), round(T * 1000), k)
        assert list(sigma.slots) == [(s, ms) for s, ms in expected if ms > 0]
        assert sum(ms for _, ms in sigma.slots) == round(T * 1000)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule((("A", 5), ("A", 5)), 10)
    with pytest.raises(ValueError):
        Schedule((("A", 0), ("B", 10)), 10)
    with pytest.raises(ValueError):
        Schedule((("A", 4),), 10)


def test_uniform_schedule():
    sigma = uniform_schedule(["c", "a", "b"], 1)
    assert sigma.slots == (("a", 334), ("b", 333), ("c", 333))


def test_parallelize_single_solver():
    cores = parallelize(Schedule((("s1", 1_200_000),), 1_200_000), 8, 1200)
    assert cores.cores[0] == (("s1", 0, 1_200_000),)
    assert all(core == () for core in cores.cores[1:])
    assert len(cores.cores) == 8


def test_parallelize_widens_tail():
    sigma = Schedule((("s1", 500_000), ("s2", 400_000), ("s3", 200_000), ("s4", 100_000)), 1_200_000)
    cores = parallelize(sigma, 3, 1200)
    assert cores.cores == (
        (("s1", 0, 1_200_000),),
        (("s2", 0, 1_200_000),),
        (("s3", 0, 800_000), ("s4", 800_000, 1_200_000)),
    )


def test_parallelize_exactly_c():
    sigma = Schedule((("a", 600), ("b", 400), ("c", 200)), 1200)
    cores = parallelize(sigma, 3)
    assert cores.cores == ((("a", 0, 1200),), (("b", 0, 1200),), (("c", 0, 1200),))


def test_parallelize_one_core_keeps_order():
    sigma = Schedule((("b", 700), ("a", 300)), 1000)
    assert parallelize(sigma, 1).cores == ((("b", 0, 700), ("a", 700, 1000)),)


slot_lists = st.lists(st.integers(1, 10_000), min_size=1, max_size=9)


@settings(max_examples=300)
@given(slot_lists, st.integers(1, 10), st.integers(1, 5_000_000))
def test_parallelize_covers_window(lengths, c, total):
    sigma = Schedule(tuple((f"s{i}", ms) for i, ms in enumerate(lengths)), sum(lengths))
    cores = parallelize(sigma, c, total / 1000)
    T = round(total / 1000 * 1000)
    used = [s for core in cores.cores for s, _, _ in core]
    assert len(used) == len(set(used))
    tail = lengths[c - 1 :] if len(lengths) > c else []
    # a tail slot can only vanish when its widened share rounds to 0 ms
    dropped = {f"s{c - 1 + i}" for i, ms in enumerate(tail) if T * ms // sum(tail) == 0}
    assert set(used) | dropped == {f"s{i}" for i in range(len(lengths))}
    for core in cores.cores:
        if not core:
            continue
        assert core[0][1] == 0 and core[-1][2] == T
        for (_, _, end), (_, start, _) in zip(core, core[1:]):
            assert end == start
        assert all(a < b for _, a, b in core)
    if len(lengths) > c:
        assert [core[0][0] for core in cores.cores[: c - 1]] == [f"s{i}" for i in range(c - 1)]
        expect = [f"s{i}" for i in range(c - 1, len(lengths)) if f"s{i}" in used]
        assert [s for s, _, _ in cores.cores[c - 1]] == expect


def test_presolve_examples():
    main = Schedule((("A", 1_140_000),), 1_140_000)
    assert presolve_prefix(["X"], 60, main, 1200).slots == (("X", 60_000), ("A", 1_140_000))
    main = Schedule((("A", 1_200_000),), 1_200_000)
    assert presolve_prefix(["X"], 60, main).slots == (("X", 60_000), ("A", 1_140_000))
    two = presolve_prefix(["X", "Y"], 60, main)
    assert two.slots[:2] == (("X", 30_000), ("Y", 30_000))


def test_presolve_merges_repeated_solver():
    main = Schedule((("A", 600_000), ("B", 600_000)), 1_200_000)
    out = presolve_prefix(["A"], 60, main)
    # 60 up front, then 600:600 compressed into 1140 -> 570 each; A's two parts merge
    assert out.slots == (("A", 630_000), ("B", 570_000))
    assert out.total_ms == 1_200_000


def test_presolve_errors():
    main = Schedule((("A", 1000),), 1000)
    for static, t in ((["A"], 1), ([], 0.5), (["A", "A"], 0.5), (["A"], 0), (["A", "B"], 0.001)):
        with pytest.raises(ValueError):
            presolve_prefix(static, t, main)


@settings(max_examples=200)
@given(slot_lists, st.lists(st.sampled_from("sABCDEFG"), min_size=1, max_size=4, unique=True), st.data())
def test_presolve_keeps_total(lengths, static, data):
    total = sum(lengths)
    main = Schedule(tuple((f"s{i}" if i else "s", ms) for i, ms in enumerate(lengths)), total)
    if total <= len(static):
        return
    pre = data.draw(st.integers(len(static), total - 1))
    out = presolve_prefix(static, pre / 1000, main)
    assert sum(ms for _, ms in out.slots) == total
    assert [s for s, _ in out.slots][: len(static)] == static


def test_core_assignment_str():
    cores = CoreAssignment(((("a", 0, 1000),), ()), 1000)
    assert str(cores) == "core 1: a[0,1]\ncore 2: -"

import pytest

from bocast.checker import TraceIndex, any_failure, check_all
from bocast.kscd import EngineInvariantError, unfold_views
from bocast.scenario import WorkItem
from bocast.sim import run_scenario

from _drivers import propose_workload, sampled_stack_config, stack_config

B = lambda payload: WorkItem(op="broadcast", payload=payload)


class TestUnfoldViews:
    def test_chain_becomes_disjoint_increments(self):
        sets = {frozenset("a"), frozenset("ab"), frozenset("abc")}
        assert unfold_views(sets) == [frozenset("a"), frozenset("b"), frozenset("c")]

    def test_single_view(self):
        assert unfold_views({frozenset({"x", "y"})}) == [frozenset({"x", "y"})]

    def test_size_ties_rejected(self):
        with pytest.raises(EngineInvariantError):
            unfold_views({frozenset("a"), frozenset("b")})


def test_solo_broadcast_delivers_own_message():
    cfg = stack_config(1, 1, 0, {1: (B("hello"),)}, schedule="round-robin")
    trace = run_scenario(cfg)
    assert trace.quiescent
    idx = TraceIndex(trace)
    assert idx.set_seqs[1] == [(0, ("1:0",))]
    assert not any_failure(check_all(trace))


def test_concurrent_broadcasts_all_delivered():
    for seed in range(10):
        cfg = stack_config(2, 2, seed, {1: (B("x"),), 2: (B("y"),)})
        trace = run_scenario(cfg)
        assert trace.quiescent
        idx = TraceIndex(trace)
        for pid in (1, 2):
            delivered = {m for _, mids in idx.set_seqs[pid] for m in mids}
            assert delivered == {"1:0", "2:0"}
        assert not any_failure(check_all(trace))


def test_crash_after_publish_still_delivers_everywhere():
    # p2 writes its message into MEM on turn 0 and crashes on turn 1,
    # before seeing any delivery; p1 must still deliver it.
    cfg = stack_config(
        2, 2, 0,
        {2: (B("orphan"),)},
        crash_plan=((2, 1),),
        schedule="scripted",
        script=((2, "main"),),
    )
    trace = run_scenario(cfg)
    assert trace.quiescent
    idx = TraceIndex(trace)
    assert idx.faulty == {2}
    assert {m for _, mids in idx.set_seqs[1] for m in mids} == {"2:0"}
    assert not any_failure(check_all(trace))


def test_survivor_of_n_minus_1_crashes_reaches_quiescence():
    wl = propose_workload(3, {1: [0, 1], 2: [0], 3: [0]})
    cfg = stack_config(3, 2, 5, wl, crash_plan=((2, 9), (3, 13)))
    trace = run_scenario(cfg)
    assert trace.quiescent
    idx = TraceIndex(trace)
    own = [inv["msg"] for inv in idx.invokes[1]]
    delivered_1 = {m for _, mids in idx.set_seqs[1] for m in mids}
    assert set(own) <= delivered_1
    assert not any_failure(check_all(trace))


def test_nested_round_outputs_give_prefix_refinement():
    # Scripted schedule where the round-0 K2S returns nested sets of
    # sizes 1 and 2: p1 sees only the full view and delivers both
    # messages at once; p2 sees the chain, delivers the small set, and
    # its queue holds exactly the difference, delivered next round.
    script = [
        (2, "main"), (2, "task"), (2, "task"),
        (1, "main"), (1, "task"), (1, "task"),
        (2, "task"), (2, "task"),
        (1, "task"), (1, "task"), (1, "task"), (1, "task"),
        (2, "task"), (2, "task"),
    ]
    cfg = stack_config(
        2, 2, 0, {1: (B("x"),), 2: (B("y"),)}, schedule="scripted", script=script
    )
    trace = run_scenario(cfg)
    assert trace.quiescent
    idx = TraceIndex(trace)
    sets_1 = [set(mids) for _, mids in idx.set_seqs[1]]
    sets_2 = [set(mids) for _, mids in idx.set_seqs[2]]
    assert sets_1 == [{"1:0", "2:0"}]
    assert sets_2 == [{"2:0"}, {"1:0"}]
    assert sets_2[0] < sets_1[0]
    assert sets_1[0] - sets_2[0] == sets_2[1]
    assert not any_failure(check_all(trace))


def test_rounds_strictly_increase_and_match_delivery_counts():
    for seed in (3, 17, 44):
        cfg = sampled_stack_config(4, 2, seed)
        trace = run_scenario(cfg)
        assert trace.quiescent
        idx = TraceIndex(trace)
        for pid in range(1, 5):
            count = 0
            rounds = []
            for round_no, mids in idx.set_seqs[pid]:
                assert round_no == count
                assert 1 <= len(mids) <= 2
                count += len(mids)
                rounds.append(round_no)
            assert rounds == sorted(set(rounds))

from bocast.checker import TraceIndex, any_failure, check_all
from bocast.kbo import unpack_order
from bocast.ksa import DecisionTable
from bocast.scenario import WorkItem
from bocast.sim import run_scenario

from _drivers import propose_workload, stack_config

B = lambda payload: WorkItem(op="broadcast", payload=payload)
D = lambda *mids: WorkItem(op="deliver", msgs=tuple(mids))


def test_unpack_order_is_sender_then_index():
    assert unpack_order(["2:1", "10:0", "2:0"]) == ["2:0", "2:1", "10:0"]


class TestDecisionTable:
    def test_first_pair_per_instance_wins(self):
        t = DecisionTable()
        t.on_deliver({"instance": 7, "value": "a"})
        t.on_deliver({"instance": 7, "value": "b"})
        assert t.pending[7] == "a"

    def test_taken_instances_never_resurrect(self):
        t = DecisionTable()
        t.on_deliver({"instance": 3, "value": "a"})
        assert t.take(3) == "a"
        t.on_deliver({"instance": 3, "value": "b"})
        assert not t.ready(3)

    def test_unproposed_instances_are_stored_harmlessly(self):
        t = DecisionTable()
        t.on_deliver({"instance": 9, "value": "z"})
        assert t.ready(9)

    def test_plain_payloads_ignored(self):
        t = DecisionTable()
        t.on_deliver("just-a-broadcast")
        assert not t.pending and not t.seen


def test_solo_proposer_decides_own_value():
    cfg = stack_config(1, 1, 0, propose_workload(1, {1: [0]}), schedule="round-robin")
    trace = run_scenario(cfg)
    idx = TraceIndex(trace)
    assert idx.decides == [(1, 0, "v1.0")]


def test_k1_is_consensus():
    for seed in range(8):
        cfg = stack_config(3, 1, seed, propose_workload(3, {1: [0], 2: [0], 3: [0]}))
        trace = run_scenario(cfg)
        assert trace.quiescent
        idx = TraceIndex(trace)
        decided = {v for _, nb, v in idx.decides if nb == 0}
        assert len(decided) == 1
        assert not any_failure(check_all(trace))


def test_k2_decisions_bounded_and_proposed():
    for seed in range(8):
        cfg = stack_config(3, 2, seed, propose_workload(3, {1: [0], 2: [0], 3: [0]}))
        trace = run_scenario(cfg)
        assert trace.quiescent
        idx = TraceIndex(trace)
        decided = {v for _, nb, v in idx.decides if nb == 0}
        assert 1 <= len(decided) <= 2
        assert decided <= {"v1.0", "v2.0", "v3.0"}


def test_different_set_partitions_do_not_violate_the_bound():
    # p1 gets the two messages in two singleton sets, p2 in one set;
    # canonical unpacking keeps the per-message orders compatible.
    wl = {
        1: (B("x"), D("1:0"), D("2:0")),
        2: (B("y"), D("1:0", "2:0")),
    }
    cfg = stack_config(2, 2, 0, wl, schedule="round-robin")
    trace = run_scenario(cfg)
    idx = TraceIndex(trace)
    assert idx.msg_seqs[1] == idx.msg_seqs[2] == ["1:0", "2:0"]
    assert not any_failure(check_all(trace, suites=("kbo", "kscd")))


def test_mixed_broadcasts_and_proposals_share_the_stack():
    wl = {
        1: (B("note"), WorkItem(op="propose", instance=0, value="p1")),
        2: (WorkItem(op="propose", instance=0, value="p2"),),
    }
    for seed in range(5):
        cfg = stack_config(2, 2, seed, wl)
        trace = run_scenario(cfg)
        assert trace.quiescent
        idx = TraceIndex(trace)
        assert {nb for _, nb, _ in idx.decides} == {0}
        assert not any_failure(check_all(trace))

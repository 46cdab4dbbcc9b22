"""Per-process engine for bounded set broadcast.

Each process cooperates through a multi-shot snapshot array MEM (cell i
holds the cumulative set of messages broadcast by p_i) and a repeated
K2S store.  The engine has two halves:

* the broadcast operation: publish the message in MEM, snapshot MEM, and
  block until everything visible in that snapshot has been locally
  delivered;
* the background task: repeatedly pick a candidate message (head of the
  pending sequence if any, else the oldest undelivered message visible in
  MEM), run one K2S round numbered by the current delivery count, unfold
  the returned chain of views into a sequence of disjoint message sets,
  reconcile it with the pending sequence, and deliver the first set.

Determinism choices: whenever "some message" of a set is needed, the
minimum in canonical (sender, index) order is taken; any choice would be
correct, a fixed one makes runs reproducible.

Every shared-object operation is one scheduler step, so a K2S round
spreads over five steps (agreement, two writes, two snapshots) and other
processes interleave between them.
"""

from __future__ import annotations

from .k2s import RepeatedK2S, canon_sets, canon_view
from .messages import min_id, sort_ids
from .objects import SnapshotArray
from .trace import Recorder


class EngineInvariantError(RuntimeError):
    """An internal invariant of the broadcast engine was violated."""


def unfold_views(sets) -> list[frozenset]:
    """Turn a chain of views into a sequence of disjoint non-empty sets.

    Repeatedly takes the non-empty set of minimal size and subtracts it
    from the rest.  Nested inputs guarantee the minimum is unique.
    """
    work = list(sets)
    out: list[frozenset] = []
    while True:
        nonempty = [s for s in work if s]
        if not nonempty:
            return out
        min_size = min(len(s) for s in nonempty)
        mins = {s for s in nonempty if len(s) == min_size}
        if len(mins) != 1:
            raise EngineInvariantError(f"non-nested view family: ties among {canon_sets(mins)}")
        chosen = next(iter(mins))
        out.append(chosen)
        work = [s - chosen for s in work]


class BroadcastEngine:
    def __init__(self, pid: int, mem: SnapshotArray, kss: RepeatedK2S, recorder: Recorder):
        self.pid = pid
        self.mem = mem
        self.kss = kss
        self.recorder = recorder

        self.own: set[str] = set()          # messages this process broadcast
        self.delivered: set[str] = set()
        self.seq: list[frozenset] = []
        self.todeliver1: frozenset = frozenset()

        self.tstate = "idle"  # idle|kset|snap1w|snap1s|snap2w|snap2s
        self.prop: str | None = None
        self.round = -1
        self.val: str | None = None
        self.view: frozenset | None = None
        self._inst = None

    # --- broadcast operation steps --------------------------------------

    def broadcast_write(self, mid: str) -> None:
        self.own.add(mid)
        content = frozenset(self.own)
        self.mem.write(self.pid, content)
        self._obj_event("MEM", "write", [sort_ids(content)], None)

    def broadcast_snapshot(self) -> None:
        arr = self.mem.snapshot(self.pid)
        self._obj_event("MEM", "snapshot", None, [sort_ids(c) for c in arr])
        visible = set().union(*arr) if arr else set()
        self.todeliver1 = frozenset(visible - self.delivered)

    def broadcast_wait_ok(self) -> bool:
        return self.todeliver1 <= self.delivered

    # --- background task -------------------------------------------------

    def mem_backlog(self) -> set:
        """Messages visible in MEM right now but not yet delivered here."""
        visible = set().union(*self.mem.peek())
        return visible - self.delivered

    def task_enabled(self) -> bool:
        if self.tstate != "idle":
            return True
        if self.seq:
            return True
        return bool(self.mem_backlog())

    def task_step(self) -> frozenset | None:
        """Run one task step; returns the delivered set when one is emitted."""
        if self.tstate == "idle":
            if not self.seq:
                arr = self.mem.snapshot(self.pid)
                self._obj_event("MEM", "snapshot", None, [sort_ids(c) for c in arr])
                backlog = set().union(*arr) - self.delivered
                if not backlog:
                    return None
                self.prop = min_id(backlog)
                self.tstate = "kset"
                return None
            self.prop = min_id(self.seq[0])
            return self._step_kset()
        if self.tstate == "kset":
            return self._step_kset()
        if self.tstate == "snap1w":
            self._inst.phase_snap1_write(self.pid, self.val)
            self._obj_event(self._inst.snap1.object_id, "write", [self.val], None)
            self.tstate = "snap1s"
            return None
        if self.tstate == "snap1s":
            arr = self._inst.snap1.peek()
            self.view = self._inst.phase_snap1_read(self.pid)
            self._obj_event(self._inst.snap1.object_id, "snapshot", None, list(arr))
            self.tstate = "snap2w"
            return None
        if self.tstate == "snap2w":
            self._inst.phase_snap2_write(self.pid, self.view)
            self._obj_event(self._inst.snap2.object_id, "write", [canon_view(self.view)], None)
            self.tstate = "snap2s"
            return None
        if self.tstate == "snap2s":
            return self._step_snap2_read()
        raise EngineInvariantError(f"unknown task state {self.tstate!r}")

    def _step_kset(self) -> None:
        self.round = len(self.delivered)
        self._inst = self.kss.enter(self.pid, self.round)
        self.val = self._inst.phase_propose(self.pid, self.prop)
        self._obj_event(f"KSET[{self.round}]", "propose", [self.prop], self.val)
        self.tstate = "snap1w"
        return None

    def _step_snap2_read(self) -> frozenset:
        arr = self._inst.snap2.peek()
        sets = self._inst.phase_snap2_read(self.pid)
        self._obj_event(
            self._inst.snap2.object_id,
            "snapshot",
            None,
            [canon_view(v) if v is not None else None for v in arr],
        )

        new_seq = unfold_views(sets)
        fresh = set().union(*new_seq)
        self.seq = [kept for s in self.seq if (kept := s - fresh)]
        self.seq = new_seq + self.seq

        first = self.seq.pop(0)
        if first & self.delivered:
            raise EngineInvariantError(
                f"p{self.pid} re-delivery of {sort_ids(first & self.delivered)} at round {self.round}"
            )
        self.delivered |= first
        self.tstate = "idle"
        self.prop = None
        self._inst = None
        return first

    # --- helpers ----------------------------------------------------------

    def _obj_event(self, object_id: str, op: str, args, result) -> None:
        self.recorder.emit(
            self.pid,
            "object-access",
            {"object": object_id, "op": op, "args": args, "result": result},
        )

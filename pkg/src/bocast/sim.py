"""Deterministic cooperative scheduler executing n process automata.

A run is a sequence of turns.  Each turn the scheduler collects the
enabled (process, thread) tokens, picks one according to the schedule
policy, and executes exactly one step of that thread.  In stack mode a
process has two threads: ``main`` runs the workload operations (broadcast
or propose, including their blocking waits, modeled as enabled
predicates) and ``task`` runs the background delivery loop.  In scripted
mode a process has a single ``script`` thread replaying its work items.

Determinism: given equal configurations, runs produce byte-identical
traces.  All scheduling randomness comes from a SplitMix64 stream derived
from the scenario seed, and a starvation counter forces any continuously
enabled process to be scheduled at least once per window of
FAIRNESS_WINDOW_FACTOR * n turns, which also makes the seeded-random
policy fair in the hard sense.

The run halts as quiescent when no thread is enabled: every workload is
finished, no broadcast is mid-flight, every background loop is idle and
nothing undelivered remains visible in MEM.  Otherwise it halts at the
turn budget and the partial trace is reported as budget-exhausted.
"""

from __future__ import annotations

from .kbo import unpack_order
from .kscd import BroadcastEngine
from .ksa import DecisionTable
from .k2s import RepeatedK2S
from .messages import Message, sort_ids
from .objects import SetAgreementOracle, SnapshotArray
from .rng import SplitMix64, derive
from .scenario import ScenarioConfig
from .trace import Recorder, Trace

FAIRNESS_WINDOW_FACTOR = 4


class SimulationError(RuntimeError):
    pass


class _StackProcess:
    """Workload-driven main thread plus broadcast engine of one process."""

    def __init__(self, pid, items, engine, recorder, registry):
        self.pid = pid
        self.items = items
        self.widx = 0
        self.next_index = 0
        self.state = "idle"  # idle | bsnap | bwait | dwait
        self.cur_item = None
        self.cur_msg = None
        self.engine = engine
        self.table = DecisionTable()
        self.recorder = recorder
        self.registry = registry
        self.deliver_pos = 0

    def main_enabled(self) -> bool:
        if self.state == "idle":
            return self.widx < len(self.items)
        if self.state == "bwait":
            return self.engine.broadcast_wait_ok()
        if self.state == "dwait":
            return self.table.ready(self.cur_item.instance)
        return True  # bsnap

    def main_blocked(self) -> bool:
        return self.state in ("bwait", "dwait") and not self.main_enabled()

    def main_step(self) -> None:
        if self.state == "idle":
            item = self.items[self.widx]
            self.widx += 1
            self.cur_item = item
            if item.op == "broadcast":
                payload = item.payload
            else:
                payload = {"instance": item.instance, "value": item.value}
            msg = Message(self.pid, self.next_index, payload)
            self.next_index += 1
            self.cur_msg = msg
            self.registry[msg.mid] = msg
            if item.op == "broadcast":
                inv = {"op": "kbo_broadcast", "msg": msg.mid, "payload": item.payload}
            else:
                inv = {
                    "op": "ksa_propose",
                    "msg": msg.mid,
                    "instance": item.instance,
                    "value": item.value,
                }
            self.recorder.emit(self.pid, "invoke", inv)
            self.engine.broadcast_write(msg.mid)
            self.state = "bsnap"
        elif self.state == "bsnap":
            self.engine.broadcast_snapshot()
            self.state = "bwait"
        elif self.state == "bwait":
            if self.cur_item.op == "broadcast":
                self.recorder.emit(
                    self.pid, "return", {"op": "kbo_broadcast", "msg": self.cur_msg.mid}
                )
                self.state = "idle"
            else:
                self.state = "dwait"
        elif self.state == "dwait":
            nb = self.cur_item.instance
            x = self.table.take(nb)
            self.recorder.emit(self.pid, "decide", {"instance": nb, "value": x})
            self.recorder.emit(
                self.pid, "return", {"op": "ksa_propose", "instance": nb, "value": x}
            )
            self.state = "idle"
        else:
            raise SimulationError(f"unknown main state {self.state!r}")


class _ScriptProcess:
    """Replays prescribed broadcast/deliver items, one item per step."""

    def __init__(self, pid, items, recorder, registry):
        self.pid = pid
        self.items = items
        self.idx = 0
        self.next_index = 0
        self.delivered_count = 0
        self.deliver_pos = 0
        self.recorder = recorder
        self.registry = registry

    def enabled(self) -> bool:
        return self.idx < len(self.items)

    def step(self) -> None:
        item = self.items[self.idx]
        self.idx += 1
        if item.op == "broadcast":
            msg = Message(self.pid, self.next_index, item.payload)
            self.next_index += 1
            self.registry[msg.mid] = msg
            self.recorder.emit(
                self.pid,
                "invoke",
                {"op": "kbo_broadcast", "msg": msg.mid, "payload": item.payload},
            )
            self.recorder.emit(self.pid, "return", {"op": "kbo_broadcast", "msg": msg.mid})
        else:
            mids = sort_ids(item.msgs)
            self.recorder.emit(
                self.pid, "deliver-set", {"round": self.delivered_count, "set": mids}
            )
            for mid in mids:
                self.recorder.emit(
                    self.pid, "deliver-msg", {"msg": mid, "position": self.deliver_pos}
                )
                self.deliver_pos += 1
            self.delivered_count += len(mids)


class Simulation:
    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.config = config
        self.n = config.n
        self.mode = config.mode()
        self.recorder = Recorder()
        self.registry: dict[str, Message] = {}
        self.turn = 0
        self.crashed: set[int] = set()

        if self.mode == "stack":
            self.mem = SnapshotArray(self.n, "MEM", initial=frozenset())
            self.oracle = SetAgreementOracle(
                k=config.k, policy=config.oracle_policy, seed=derive(config.seed, "oracle")
            )
            self.kss = RepeatedK2S(self.n, config.k, self.oracle)
            self.procs = {
                pid: _StackProcess(
                    pid,
                    config.workload.get(pid, ()),
                    BroadcastEngine(pid, self.mem, self.kss, self.recorder),
                    self.recorder,
                    self.registry,
                )
                for pid in range(1, self.n + 1)
            }
        else:
            self.procs = {
                pid: _ScriptProcess(pid, config.workload.get(pid, ()), self.recorder, self.registry)
                for pid in range(1, self.n + 1)
            }

        self.sched_rng = SplitMix64(derive(config.seed, "schedule"))
        self.rr_next = 1
        self.last_thread = {pid: "task" for pid in range(1, self.n + 1)}
        self.stall = {pid: 0 for pid in range(1, self.n + 1)}
        self.script_pos = 0
        self.fair_window = FAIRNESS_WINDOW_FACTOR * self.n

    # --- public ----------------------------------------------------------

    def inject_crash(self, pid: int) -> None:
        if pid in self.crashed:
            raise SimulationError(f"process {pid} crashed twice")
        self.crashed.add(pid)
        self.recorder.emit(pid, "crash", {})

    def run(self) -> Trace:
        budget = self.config.step_budget
        while True:
            for pid, at_turn in self.config.crash_plan:
                if at_turn == self.turn and pid not in self.crashed:
                    self.inject_crash(pid)
            tokens = self._tokens()
            if not tokens:
                self._check_no_deadlock()
                outcome = "quiescent"
                break
            if self.turn >= budget:
                outcome = "budget-exhausted"
                break
            token = self._pick(tokens)
            self._dispatch(token)
            self.turn += 1
        return Trace(self.config, self.recorder.events, outcome, self.turn)

    # --- scheduling -------------------------------------------------------

    def _tokens(self) -> list[tuple[int, str]]:
        tokens = []
        for pid in range(1, self.n + 1):
            if pid in self.crashed:
                continue
            proc = self.procs[pid]
            if self.mode == "stack":
                if proc.main_enabled():
                    tokens.append((pid, "main"))
                if proc.engine.task_enabled():
                    tokens.append((pid, "task"))
            else:
                if proc.enabled():
                    tokens.append((pid, "script"))
        return tokens

    def _pick(self, tokens) -> tuple[int, str]:
        owners = sorted({pid for pid, _ in tokens})
        starving = [pid for pid in owners if self.stall[pid] >= self.fair_window]
        if starving:
            token = self._prefer(starving[0], tokens)
        else:
            kind = self.config.schedule.kind
            if kind == "seeded-random":
                token = tokens[self.sched_rng.randrange(len(tokens))]
            elif kind == "round-robin":
                token = self._round_robin(tokens)
            else:
                token = self._scripted(tokens)
        for pid in self.stall:
            if pid == token[0] or pid not in owners:
                self.stall[pid] = 0
            else:
                self.stall[pid] += 1
        return token

    def _prefer(self, pid: int, tokens) -> tuple[int, str]:
        mine = [t for t in tokens if t[0] == pid]
        for want in ("task", "main", "script"):
            for t in mine:
                if t[1] == want:
                    return t
        raise SimulationError("starvation override found no token")

    def _round_robin(self, tokens) -> tuple[int, str]:
        for off in range(self.n):
            pid = ((self.rr_next - 1 + off) % self.n) + 1
            mine = [t for t in tokens if t[0] == pid]
            if not mine:
                continue
            self.rr_next = (pid % self.n) + 1
            if len(mine) == 1:
                token = mine[0]
            else:
                prefer = "main" if self.last_thread[pid] == "task" else "task"
                token = (pid, prefer)
            self.last_thread[pid] = token[1]
            return token
        raise SimulationError("round-robin found no token")

    def _scripted(self, tokens) -> tuple[int, str]:
        script = self.config.schedule.script
        if self.script_pos < len(script):
            token = script[self.script_pos]
            self.script_pos += 1
            if token not in tokens:
                pid, thread = token
                raise SimulationError(
                    f"schedule script entry {self.script_pos - 1} names "
                    f"disabled thread {thread!r} of p{pid} at turn {self.turn}"
                )
            return token
        return self._round_robin(tokens)

    # --- stepping -----------------------------------------------------------

    def _dispatch(self, token) -> None:
        pid, thread = token
        proc = self.procs[pid]
        if thread == "main":
            proc.main_step()
        elif thread == "task":
            self._task_step(proc)
        else:
            proc.step()

    def _task_step(self, proc: _StackProcess) -> None:
        delivered = proc.engine.task_step()
        if delivered is None:
            return
        self.recorder.emit(
            proc.pid,
            "deliver-set",
            {"round": proc.engine.round, "set": sort_ids(delivered)},
        )
        for mid in unpack_order(delivered):
            self.recorder.emit(
                proc.pid, "deliver-msg", {"msg": mid, "position": proc.deliver_pos}
            )
            proc.deliver_pos += 1
            msg = self.registry.get(mid)
            if msg is not None:
                proc.table.on_deliver(msg.payload)

    def _check_no_deadlock(self) -> None:
        if self.mode != "stack":
            return
        for pid, proc in self.procs.items():
            if pid in self.crashed:
                continue
            if proc.main_blocked():
                raise SimulationError(
                    f"deadlock: p{pid} blocked in {proc.state} with no enabled thread"
                )


def run_scenario(config: ScenarioConfig) -> Trace:
    return Simulation(config).run()

"""Scenario configuration: the versioned input format of a simulation run.

A scenario file is a single JSON object whose fields are exactly the
configuration fields below.  Two execution modes exist, selected by the
workload content:

* stack mode - work items are ``broadcast`` and ``propose`` operations and
  every process runs the full protocol stack (agreement oracle, snapshot
  objects, set broadcast, per-message unpacking, repeated agreement).
* scripted mode - work items are ``broadcast`` and ``deliver`` directives
  replayed verbatim.  This mode produces delivery patterns the stack
  cannot or should not produce (reference profiles, forged violations for
  checker tests) while still going through the normal scheduler, trace
  and determinism machinery.

The two kinds cannot be mixed in one scenario.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .messages import msg_key

SCENARIO_VERSION = 1

SCHEDULE_POLICIES = ("seeded-random", "round-robin", "scripted")

ORACLE_POLICIES = (
    "first-1",
    "first-k-adversarial",
    "echo",
    "first-k-plus-one-permissive",
)


class ConfigError(ValueError):
    """Raised when a scenario violates one of its invariants."""


@dataclass(frozen=True)
class WorkItem:
    op: str  # "broadcast" | "propose" | "deliver"
    payload: str | None = None       # broadcast
    instance: int | None = None      # propose
    value: str | None = None         # propose
    msgs: tuple[str, ...] = ()       # deliver

    def to_json_dict(self) -> dict:
        if self.op == "broadcast":
            return {"op": "broadcast", "payload": self.payload}
        if self.op == "propose":
            return {"op": "propose", "instance": self.instance, "value": self.value}
        return {"op": "deliver", "msgs": list(self.msgs)}

    @staticmethod
    def from_json_dict(obj: dict) -> "WorkItem":
        op = obj.get("op")
        if op == "broadcast":
            return WorkItem(op="broadcast", payload=obj["payload"])
        if op == "propose":
            return WorkItem(op="propose", instance=obj["instance"], value=obj["value"])
        if op == "deliver":
            return WorkItem(op="deliver", msgs=tuple(obj["msgs"]))
        raise ConfigError(f"unknown workload op {op!r}")


@dataclass(frozen=True)
class SchedulePolicy:
    kind: str
    script: tuple[tuple[int, str], ...] = ()

    def to_json_dict(self):
        if self.kind != "scripted":
            return self.kind
        return {"policy": "scripted", "script": [[pid, thread] for pid, thread in self.script]}

    @staticmethod
    def from_json_dict(obj) -> "SchedulePolicy":
        if isinstance(obj, str):
            return SchedulePolicy(kind=obj)
        if isinstance(obj, dict) and obj.get("policy") == "scripted":
            script = tuple((int(pid), str(thread)) for pid, thread in obj.get("script", []))
            return SchedulePolicy(kind="scripted", script=script)
        raise ConfigError(f"unrecognized schedule_policy {obj!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    k: int
    seed: int
    schedule: SchedulePolicy
    crash_plan: tuple[tuple[int, int], ...]
    workload: dict[int, tuple[WorkItem, ...]]
    step_budget: int
    oracle_policy: str = "first-k-adversarial"
    version: int = SCENARIO_VERSION

    def mode(self) -> str:
        for items in self.workload.values():
            for item in items:
                if item.op == "deliver":
                    return "scripted"
        return "stack"

    def validate(self) -> None:
        if self.version != SCENARIO_VERSION:
            raise ConfigError(f"unsupported scenario version {self.version}")
        if self.n < 1:
            raise ConfigError(f"process count must satisfy n >= 1 (got n={self.n})")
        if not (1 <= self.k <= self.n):
            raise ConfigError(f"agreement degree must satisfy 1 <= k <= n (got k={self.k}, n={self.n})")
        if self.step_budget <= 0:
            raise ConfigError(f"step_budget must be positive (got {self.step_budget})")
        if not (0 <= self.seed <= (1 << 64) - 1):
            raise ConfigError("seed must fit in 64 bits")
        if self.oracle_policy not in ORACLE_POLICIES:
            raise ConfigError(f"unknown oracle_policy {self.oracle_policy!r}")
        if self.schedule.kind not in SCHEDULE_POLICIES:
            raise ConfigError(f"unknown schedule_policy {self.schedule.kind!r}")

        seen_crash = set()
        for pid, turn in self.crash_plan:
            if not (1 <= pid <= self.n):
                raise ConfigError(f"crash_plan names unknown process {pid}")
            if pid in seen_crash:
                raise ConfigError(f"crash_plan names process {pid} more than once")
            if turn < 0:
                raise ConfigError(f"crash turn must be >= 0 (got {turn} for p{pid})")
            seen_crash.add(pid)

        mode = self.mode()
        for pid, items in self.workload.items():
            if not (1 <= pid <= self.n):
                raise ConfigError(f"workload names unknown process {pid}")
            instances = []
            for item in items:
                if item.op not in ("broadcast", "propose", "deliver"):
                    raise ConfigError(f"unknown workload op {item.op!r}")
                if mode == "scripted" and item.op == "propose":
                    raise ConfigError("scripted scenarios cannot mix propose items with deliver items")
                if item.op == "propose":
                    instances.append(item.instance)
                if item.op == "deliver":
                    if not item.msgs:
                        raise ConfigError(f"deliver item of p{pid} has an empty message set")
                    for mid in item.msgs:
                        try:
                            msg_key(mid)
                        except Exception:
                            raise ConfigError(f"malformed message id {mid!r} in deliver item of p{pid}")
            if instances != sorted(set(instances)):
                raise ConfigError(f"propose instance numbers of p{pid} must strictly increase")

        if self.schedule.kind == "scripted":
            threads = ("script",) if mode == "scripted" else ("main", "task")
            for pid, thread in self.schedule.script:
                if not (1 <= pid <= self.n):
                    raise ConfigError(f"schedule script names unknown process {pid}")
                if thread not in threads:
                    raise ConfigError(f"schedule script names unknown thread {thread!r} for this mode")

    # --- serialization -------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "n": self.n,
            "k": self.k,
            "seed": self.seed,
            "schedule_policy": self.schedule.to_json_dict(),
            "crash_plan": [[pid, turn] for pid, turn in self.crash_plan],
            "workload": {
                str(pid): [item.to_json_dict() for item in items]
                for pid, items in sorted(self.workload.items())
            },
            "step_budget": self.step_budget,
            "oracle_policy": self.oracle_policy,
        }

    @staticmethod
    def from_json_dict(obj: dict) -> "ScenarioConfig":
        try:
            workload = {
                int(pid): tuple(WorkItem.from_json_dict(item) for item in items)
                for pid, items in obj.get("workload", {}).items()
            }
            config = ScenarioConfig(
                n=int(obj["n"]),
                k=int(obj["k"]),
                seed=int(obj["seed"]),
                schedule=SchedulePolicy.from_json_dict(obj.get("schedule_policy", "seeded-random")),
                crash_plan=tuple((int(p), int(t)) for p, t in obj.get("crash_plan", [])),
                workload=workload,
                step_budget=int(obj.get("step_budget", 100_000)),
                oracle_policy=obj.get("oracle_policy", "first-k-adversarial"),
                version=int(obj.get("version", SCENARIO_VERSION)),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed scenario: {exc}") from exc
        config.validate()
        return config

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, ensure_ascii=False) + "\n"


def load_scenario(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: invalid JSON ({exc.msg})") from exc
    return ScenarioConfig.from_json_dict(obj)


def save_scenario(config: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(config.dumps())

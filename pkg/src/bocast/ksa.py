"""Repeated k-set agreement on top of per-message broadcast.

A proposer broadcasts the pair (instance, value) and returns the value of
the first pair with that instance number it delivers.  The decisions
table keeps at most one pair per instance number ever: later pairs with a
seen instance number are ignored.  A decided pair is removed from the
pending table when the proposer returns, but the instance number stays
recorded so re-deliveries can never resurrect it.
"""

from __future__ import annotations


class DecisionTable:
    def __init__(self):
        self.pending: dict[int, str] = {}
        self.seen: set[int] = set()

    def on_deliver(self, payload) -> None:
        """Feed one delivered message payload; ignores non-proposal payloads."""
        if not isinstance(payload, dict) or "instance" not in payload:
            return
        nb = payload["instance"]
        if nb in self.seen:
            return
        self.seen.add(nb)
        self.pending[nb] = payload["value"]

    def ready(self, nb: int) -> bool:
        return nb in self.pending

    def take(self, nb: int) -> str:
        return self.pending.pop(nb)

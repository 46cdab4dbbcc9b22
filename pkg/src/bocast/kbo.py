"""Per-message broadcast on top of set delivery.

Broadcasting is a direct delegation to the set broadcast; each delivered
message set is unpacked into individual message deliveries.  Within one
set the emission order is the canonical (sender, index) order: members of
one set carry no order information of their own, and a fixed rule keeps
every process's per-message delivery sequence deterministic.

Traces record both granularities: deliver-set events preserve the set
boundaries (needed by the set-level checks) and deliver-msg events carry
the per-message sequence (the source of the delivery partial order).
"""

from __future__ import annotations

from .messages import sort_ids


def unpack_order(mids) -> list[str]:
    """Order in which the members of one delivered set are emitted."""
    return sort_ids(mids)

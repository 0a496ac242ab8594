"""Rebuild engine state from an event log.

Only top-level records are re-executed; nested records are effects that the
parent operation reproduces by itself.
"""

from __future__ import annotations

from .events import EventLog
from .journal import Journal, JournalConfig
from .ledger import Ledger
from .tcr import Registry, RegistryConfig

# op name -> method name, where they differ
_METHODS = {
    "vote": "cast_vote",
    "manuscript_vote": "cast_manuscript_vote",
    "expulsion_vote": "vote_on_expulsion",
}


def replay(log: EventLog | list[dict]) -> Ledger:
    ledger = Ledger()
    for record in log:
        if record.get("nested"):
            continue
        op, args = record["op"], dict(record["args"])
        if op == "create_registry":
            Registry(ledger, RegistryConfig.from_dict(args["config"]), registry_id=args["component"])
            continue
        if op == "create_journal":
            Journal(JournalConfig.from_dict(args["config"]), ledger, journal_id=args["component"])
            continue
        owner = ledger.components[args.pop("component")] if "component" in args else ledger
        getattr(owner, _METHODS.get(op, op))(**args)
    return ledger

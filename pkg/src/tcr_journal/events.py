"""Append-only JSON Lines event log shared by the ledger, registries and journals.

Every accepted mutating operation appends one record::

    {"seq": 7, "op": "hold_escrow", "args": {...}, "result": "esc-3",
     "resulting_total_supply": 300}

Operations invoked by another operation (a journal decision forfeiting an
escrow, say) are logged too, flagged ``"nested": true``. They describe effects,
so replay skips them and re-derives them by re-running the parent.
"""

from __future__ import annotations

import dataclasses
import functools
import inspect
import json
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterator


def encode(value: Any) -> Any:
    """Convert engine values to plain JSON types."""
    if isinstance(value, Enum):
        return value.value
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, Fraction):
        return {"num": value.numerator, "den": value.denominator}
    if isinstance(value, Decimal):
        return str(value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: encode(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return sorted(encode(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    raise TypeError(f"cannot encode {type(value).__name__} for the event log")


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class EventLog:
    def __init__(self, records: list[dict] | None = None):
        self.records: list[dict] = list(records or [])

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[dict]:
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def append(self, op: str, args: dict, result: Any, total_supply: int, nested: bool = False) -> dict:
        record = {
            "seq": len(self.records),
            "op": op,
            "args": encode(args),
            "resulting_total_supply": total_supply,
        }
        if result is not None:
            record["result"] = encode(result)
        if nested:
            record["nested"] = True
        self.records.append(record)
        return record

    def top_level(self) -> Iterator[dict]:
        return (r for r in self.records if not r.get("nested"))

    def to_jsonl(self) -> str:
        return "".join(dumps(r) + "\n" for r in self.records)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def from_jsonl(cls, text: str) -> "EventLog":
        return cls([json.loads(line) for line in text.splitlines() if line.strip()])

    @classmethod
    def read(cls, path: str | Path) -> "EventLog":
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


def logged(op: str):
    """Run a mutating method under the ledger's writer lock and log it on success.

    The owning object must expose ``ledger`` (or be the ledger). Components
    other than the ledger also expose ``component_id``, recorded as
    ``args["component"]`` so replay can route the call.
    """

    def decorate(fn):
        sig = inspect.signature(fn)

        @functools.wraps(fn)
        def wrapper(self, *args, **kwargs):
            ledger = getattr(self, "ledger", self)
            with ledger._lock:
                mark = len(ledger.log)
                ledger._depth += 1
                try:
                    result = fn(self, *args, **kwargs)
                except BaseException:
                    if len(ledger.log) != mark:
                        # validation must precede mutation; a partial write is an engine bug
                        raise RuntimeError(f"{op} failed after logging nested effects")
                    raise
                finally:
                    ledger._depth -= 1
                bound = sig.bind(self, *args, **kwargs)
                bound.apply_defaults()
                params = dict(bound.arguments)
                params.pop("self")
                target = getattr(self, "component_id", None)
                if target is not None:
                    params = {"component": target, **params}
                ledger.log.append(op, params, result, ledger.total_supply(), nested=ledger._depth > 0)
                return result

        return wrapper

    return decorate

"""Per-round and whole-run outcome measures, and their CSV form."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field

from ..events import EventLog


@dataclass
class Tally:
    """Counters for one round, or for a whole run when used as the aggregate."""

    submissions: int = 0
    accepted: int = 0
    rejected: int = 0
    expired: int = 0
    quality_accepted: float = 0.0
    quality_rejected: float = 0.0
    below_bar_decided: int = 0
    false_accepts: int = 0
    above_bar_decided: int = 0
    false_rejects: int = 0
    treasury_income: int = 0
    refunds: int = 0
    reviews: int = 0
    clique_polls: int = 0
    clique_hits: int = 0
    price: float = float("nan")
    applications_in_window: int = 0
    earnings: Counter = field(default_factory=Counter)  # strategy label -> tokens
    reviews_by_agent: Counter = field(default_factory=Counter)

    def absorb(self, other: "Tally") -> None:
        for name in ("submissions", "accepted", "rejected", "expired", "quality_accepted", "quality_rejected",
                     "below_bar_decided", "false_accepts", "above_bar_decided", "false_rejects",
                     "treasury_income", "refunds", "reviews", "clique_polls", "clique_hits"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.earnings.update(other.earnings)
        self.reviews_by_agent.update(other.reviews_by_agent)
        self.price = other.price
        self.applications_in_window = other.applications_in_window


def _ratio(num: float, den: float) -> float:
    return num / den if den else float("nan")


def _rate(num: int, den: int) -> float:
    return num / den if den else 0.0


class Metrics:
    def __init__(self, agent_counts: dict[str, int], agent_accounts: list[str] | None = None):
        self.labels = sorted(agent_counts)
        self.agent_counts = dict(agent_counts)
        self.agent_accounts = list(agent_accounts or [])
        self.rounds: list[tuple[int, Tally]] = []
        self.total = Tally()
        self.price_series: list[float] = []

    def record(self, round_no: int, tally: Tally) -> dict:
        self.rounds.append((round_no, tally))
        self.total.absorb(tally)
        self.price_series.append(tally.price)
        return self.row(round_no, tally)

    # -- derived measures --

    def row(self, round_no, t: Tally) -> dict:
        decided = t.accepted + t.rejected
        mqa = _ratio(t.quality_accepted, t.accepted)
        mqr = _ratio(t.quality_rejected, t.rejected)
        per_agent = [t.reviews_by_agent.get(a, 0) for a in self.agent_accounts]
        out = {
            "round": round_no,
            "submissions": t.submissions,
            "accepted": t.accepted,
            "rejected": t.rejected,
            "expired": t.expired,
            "acceptance_rate": _rate(t.accepted, decided),
            "mean_quality_accepted": mqa,
            "mean_quality_rejected": mqr,
            "quality_gap": mqa - mqr,
            "false_accept_rate": _rate(t.false_accepts, t.below_bar_decided),
            "false_reject_rate": _rate(t.false_rejects, t.above_bar_decided),
            "treasury_income": t.treasury_income,
            "refunds": t.refunds,
            "price": t.price,
            "applications_in_window": t.applications_in_window,
            "reviews": t.reviews,
            "reviews_per_curator_mean": _ratio(sum(per_agent), len(per_agent)),
            "reviews_per_curator_max": max(per_agent, default=0),
            "clique_polls": t.clique_polls,
            "clique_hit_rate": _ratio(t.clique_hits, t.clique_polls),
        }
        for label in self.labels:
            out[f"earnings_{label}"] = _ratio(t.earnings.get(label, 0), self.agent_counts[label])
        return out

    @property
    def aggregate(self) -> dict:
        return self.row("all", self.total)

    def earnings_by_strategy(self) -> dict[str, float]:
        """Mean tokens earned per agent, by strategy label."""
        return {label: _ratio(self.total.earnings.get(label, 0), self.agent_counts[label]) for label in self.labels}

    def columns(self) -> list[str]:
        return list(self.row("all", Tally()).keys())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.columns(), lineterminator="\n")
        writer.writeheader()
        for round_no, tally in self.rounds:
            writer.writerow(_format(self.row(round_no, tally)))
        if self.rounds:
            writer.writerow(_format(self.aggregate))
        return buf.getvalue()


def _format(row: dict) -> dict:
    out = {}
    for key, value in row.items():
        if isinstance(value, float):
            out[key] = "" if math.isnan(value) else repr(value)
        else:
            out[key] = value
    return out


def earnings_from_log(log: EventLog) -> Counter:
    """Tokens paid to each account by forfeited-deposit distributions, read from the log alone."""
    paid: Counter = Counter()
    for record in log:
        if record["op"] == "forfeit_and_distribute":
            dist = record["result"]
            for winner in dist["winners"]:
                paid[winner] += dist["per_winner"]
    return paid

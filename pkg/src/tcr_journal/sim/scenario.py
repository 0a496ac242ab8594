"""Scenario files: parsing and field-level validation.

A scenario is a JSON document::

    {
      "rng": "pcg64-seedsequence-v1",
      "seed": 7,
      "rounds": 100,
      "journal_config": {"apc": 300, "review_window": 3, ...},
      "agents": [
        {"strategy": {"kind": "HONEST", "accept_threshold": 0.5, "noise_sd": 0.1}, "count": 35},
        {"strategy": {"kind": "COIN_FLIPPER"}, "count": 15}
      ],
      "quality_distribution": {"kind": "uniform"},
      "quality_threshold": 0.5,
      "submission_model": {"base_rate": 10, "sensitivity": 0.0, "window": 10},
      "price_model": {"base_price": 1.0, "demand_coefficient": 0.01, "demand_window": 5}
    }
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

from ..errors import InvalidConfig, InvalidScenario
from ..journal import CuratorPolicy, JournalConfig

RNG_NAME = "pcg64-seedsequence-v1"


class StrategyKind(str, Enum):
    HONEST = "HONEST"
    COIN_FLIPPER = "COIN_FLIPPER"
    CLIQUE = "CLIQUE"
    APATHETIC = "APATHETIC"


class CliquePolicy(str, Enum):
    ACCEPT_MEMBERS_REJECT_OTHERS = "ACCEPT_MEMBERS_REJECT_OTHERS"
    ALWAYS_REJECT = "ALWAYS_REJECT"


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    accept_threshold: float = 0.5
    noise_sd: float = 0.1
    clique_id: int = 0
    policy: CliquePolicy = CliquePolicy.ALWAYS_REJECT
    participation_prob: float = 1.0


@dataclass(frozen=True)
class AgentGroup:
    strategy: Strategy
    count: int


@dataclass(frozen=True)
class QualityDistribution:
    kind: str = "uniform"
    alpha: float = 1.0
    beta: float = 1.0


@dataclass(frozen=True)
class SubmissionModel:
    base_rate: float = 10.0
    sensitivity: float = 0.0
    window: int = 10
    # probability that a new manuscript is authored by a member of each clique
    clique_share: dict[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class PriceModel:
    base_price: float = 1.0
    demand_coefficient: float = 0.0
    demand_window: int = 1


@dataclass(frozen=True)
class Scenario:
    seed: int
    rounds: int
    journal_config: JournalConfig
    agents: tuple[AgentGroup, ...]
    quality_distribution: QualityDistribution = QualityDistribution()
    quality_threshold: float = 0.5
    submission_model: SubmissionModel = SubmissionModel()
    price_model: PriceModel = PriceModel()
    rng: str = RNG_NAME

    @classmethod
    def from_dict(cls, data: Any) -> "Scenario":
        problems = validate(data)
        if problems:
            raise InvalidScenario(problems)
        return _build(data)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidScenario([f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
        return cls.from_dict(data)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)

    def agent_count(self) -> int:
        return sum(g.count for g in self.agents)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def scenario_hash(data: Any) -> str:
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


# -- validation --

def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_keys(obj: dict, allowed: set[str], where: str, out: list[str]) -> None:
    for key in sorted(set(obj) - allowed):
        out.append(f"{where}{key}: unknown field")


def _unit(v) -> bool:
    return _is_num(v) and 0 <= v <= 1


def validate(data: Any) -> list[str]:
    """Every problem with a scenario document, one message per field."""
    out: list[str] = []
    if not isinstance(data, dict):
        return ["scenario: expected a JSON object"]
    _check_keys(data, {"rng", "seed", "rounds", "journal_config", "agents", "quality_distribution",
                       "quality_threshold", "submission_model", "price_model"}, "", out)

    if data.get("rng", RNG_NAME) != RNG_NAME:
        out.append(f"rng: unsupported generator {data.get('rng')!r}, expected {RNG_NAME!r}")
    seed = data.get("seed")
    if not _is_int(seed) or not 0 <= seed < 2 ** 64:
        out.append(f"seed: expected an integer in [0, 2^64), got {seed!r}")
    rounds = data.get("rounds")
    if not _is_int(rounds) or rounds < 0:
        out.append(f"rounds: expected a non-negative integer, got {rounds!r}")

    journal = data.get("journal_config")
    policies: set = set()
    if not isinstance(journal, dict):
        out.append("journal_config: expected an object")
    else:
        try:
            cfg = JournalConfig.from_dict(journal)
            policies = set(cfg.curator_policy)
        except InvalidConfig as exc:
            out.extend(f"journal_config.{msg}" for msg in str(exc).split("; "))
        except TypeError as exc:
            out.append(f"journal_config: {exc}")
        if policies and CuratorPolicy.GRANTED not in policies:
            out.append("journal_config.curator_policy: simulated curators are granted, so GRANTED must be enabled")

    agents = data.get("agents")
    if not isinstance(agents, list) or not agents:
        out.append("agents: expected a non-empty list")
    else:
        total = 0
        for i, group in enumerate(agents):
            where = f"agents[{i}]."
            if not isinstance(group, dict):
                out.append(f"agents[{i}]: expected an object")
                continue
            _check_keys(group, {"strategy", "count"}, where, out)
            count = group.get("count")
            if not _is_int(count) or count < 0:
                out.append(f"{where}count: expected a non-negative integer, got {count!r}")
            else:
                total += count
            out.extend(_strategy_problems(group.get("strategy"), where + "strategy."))
        if total < 1:
            out.append("agents: at least one curator-capable agent is required")

    qd = data.get("quality_distribution", {"kind": "uniform"})
    if not isinstance(qd, dict):
        out.append("quality_distribution: expected an object")
    else:
        _check_keys(qd, {"kind", "alpha", "beta"}, "quality_distribution.", out)
        if qd.get("kind") not in ("uniform", "beta"):
            out.append(f"quality_distribution.kind: expected 'uniform' or 'beta', got {qd.get('kind')!r}")
        if qd.get("kind") == "beta":
            for p in ("alpha", "beta"):
                if not (_is_num(qd.get(p)) and qd.get(p) > 0):
                    out.append(f"quality_distribution.{p}: expected a positive number, got {qd.get(p)!r}")

    if not _unit(data.get("quality_threshold", 0.5)):
        out.append(f"quality_threshold: expected a number in [0, 1], got {data.get('quality_threshold')!r}")

    sm = data.get("submission_model", {})
    if not isinstance(sm, dict):
        out.append("submission_model: expected an object")
    else:
        _check_keys(sm, {"base_rate", "sensitivity", "window", "clique_share"}, "submission_model.", out)
        if not (_is_num(sm.get("base_rate", 10.0)) and sm.get("base_rate", 10.0) >= 0):
            out.append(f"submission_model.base_rate: expected a non-negative number, got {sm.get('base_rate')!r}")
        if not _is_num(sm.get("sensitivity", 0.0)):
            out.append(f"submission_model.sensitivity: expected a number, got {sm.get('sensitivity')!r}")
        if not (_is_int(sm.get("window", 10)) and sm.get("window", 10) >= 1):
            out.append(f"submission_model.window: expected a positive integer, got {sm.get('window')!r}")
        shares = sm.get("clique_share", {})
        if not isinstance(shares, dict):
            out.append("submission_model.clique_share: expected an object mapping clique id to probability")
        else:
            for key, p in shares.items():
                try:
                    int(key)
                except ValueError:
                    out.append(f"submission_model.clique_share.{key}: clique ids must be integers")
                if not _unit(p):
                    out.append(f"submission_model.clique_share.{key}: expected a probability, got {p!r}")
            if all(_unit(p) for p in shares.values()) and sum(shares.values()) > 1:
                out.append("submission_model.clique_share: probabilities sum to more than 1")

    pm = data.get("price_model", {})
    if not isinstance(pm, dict):
        out.append("price_model: expected an object")
    else:
        _check_keys(pm, {"base_price", "demand_coefficient", "demand_window"}, "price_model.", out)
        if not (_is_num(pm.get("base_price", 1.0)) and pm.get("base_price", 1.0) > 0):
            out.append(f"price_model.base_price: expected a positive number, got {pm.get('base_price')!r}")
        if not _is_num(pm.get("demand_coefficient", 0.0)):
            out.append(f"price_model.demand_coefficient: expected a number, got {pm.get('demand_coefficient')!r}")
        if not (_is_int(pm.get("demand_window", 1)) and pm.get("demand_window", 1) >= 1):
            out.append(f"price_model.demand_window: expected a positive integer, got {pm.get('demand_window')!r}")
    return out


def _strategy_problems(spec: Any, where: str) -> list[str]:
    if not isinstance(spec, dict):
        return [f"{where[:-1]}: expected an object"]
    out: list[str] = []
    kind = spec.get("kind")
    allowed = {
        "HONEST": {"kind", "accept_threshold", "noise_sd"},
        "COIN_FLIPPER": {"kind"},
        "CLIQUE": {"kind", "clique_id", "policy"},
        "APATHETIC": {"kind", "participation_prob", "accept_threshold", "noise_sd"},
    }
    if kind not in allowed:
        return [f"{where}kind: expected one of {sorted(allowed)}, got {kind!r}"]
    _check_keys(spec, allowed[kind], where, out)
    if "accept_threshold" in allowed[kind] and not _unit(spec.get("accept_threshold", 0.5)):
        out.append(f"{where}accept_threshold: expected a number in [0, 1], got {spec.get('accept_threshold')!r}")
    if "noise_sd" in allowed[kind] and not (_is_num(spec.get("noise_sd", 0.1)) and spec.get("noise_sd", 0.1) >= 0):
        out.append(f"{where}noise_sd: expected a non-negative number, got {spec.get('noise_sd')!r}")
    if kind == "CLIQUE":
        if not _is_int(spec.get("clique_id", 0)):
            out.append(f"{where}clique_id: expected an integer, got {spec.get('clique_id')!r}")
        if spec.get("policy", "ALWAYS_REJECT") not in {p.value for p in CliquePolicy}:
            out.append(f"{where}policy: expected one of {[p.value for p in CliquePolicy]}, got {spec.get('policy')!r}")
    if kind == "APATHETIC" and not _unit(spec.get("participation_prob", 1.0)):
        out.append(f"{where}participation_prob: expected a number in [0, 1], got {spec.get('participation_prob')!r}")
    return out


def _build(data: dict) -> Scenario:
    groups = []
    for group in data["agents"]:
        spec = dict(group["strategy"])
        kind = StrategyKind(spec.pop("kind"))
        if "policy" in spec:
            spec["policy"] = CliquePolicy(spec["policy"])
        groups.append(AgentGroup(Strategy(kind, **spec), group["count"]))
    sm = dict(data.get("submission_model", {}))
    sm["clique_share"] = {int(k): float(v) for k, v in sm.get("clique_share", {}).items()}
    return Scenario(
        seed=data["seed"],
        rounds=data["rounds"],
        journal_config=JournalConfig.from_dict(data["journal_config"]),
        agents=tuple(groups),
        quality_distribution=QualityDistribution(**data.get("quality_distribution", {"kind": "uniform"})),
        quality_threshold=float(data.get("quality_threshold", 0.5)),
        submission_model=SubmissionModel(**sm),
        price_model=PriceModel(**data.get("price_model", {})),
        rng=data.get("rng", RNG_NAME),
    )

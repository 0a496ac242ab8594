"""Curator strategies.

Agents never call the engine themselves. ``agent_act`` turns a strategy and a
read-only view of the world into a list of :class:`Action` intents, already
filtered so that none would be rejected by the journal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tcr import Direction
from .scenario import CliquePolicy, Strategy, StrategyKind


@dataclass
class Agent:
    index: int
    account: str
    strategy: Strategy

    @property
    def label(self) -> str:
        return self.strategy.kind.value


@dataclass(frozen=True)
class Candidate:
    """A pending manuscript as one agent sees it."""

    id: str
    deadline: int
    quality: float  # latent; only perceive_quality and metrics read it
    author_clique: int | None


@dataclass(frozen=True)
class AgentView:
    now: int
    candidates: tuple[Candidate, ...]  # reviewable by this agent, earliest deadline first
    remaining_limit: int


@dataclass(frozen=True)
class Action:
    manuscript: str
    direction: Direction
    score: int | None = None
    body: str | None = None


def perceive_quality(strategy: Strategy, quality: float, rng: np.random.Generator) -> float:
    """Noisy reading of latent quality, clamped to [0, 1]."""
    if strategy.noise_sd == 0:
        return quality
    return min(1.0, max(0.0, quality + rng.normal(0.0, strategy.noise_sd)))


def score_for(perceived: float) -> int:
    return min(10, max(1, int(round(perceived * 10))))


def _pick(candidates: tuple[Candidate, ...], k: int, rng: np.random.Generator) -> list[Candidate]:
    if k <= 0 or not candidates:
        return []
    k = min(k, len(candidates))
    idx = rng.choice(len(candidates), size=k, replace=False)
    return [candidates[i] for i in idx]


def _honest(strategy: Strategy, view: AgentView, rng: np.random.Generator) -> list[Action]:
    out = []
    for c in _pick(view.candidates, view.remaining_limit, rng):
        perceived = perceive_quality(strategy, c.quality, rng)
        direction = Direction.FOR if perceived >= strategy.accept_threshold else Direction.AGAINST
        out.append(Action(c.id, direction, score=score_for(perceived)))
    return out


def _coin_flipper(view: AgentView, rng: np.random.Generator) -> list[Action]:
    out = []
    for c in _pick(view.candidates, view.remaining_limit, rng):
        direction = Direction.FOR if rng.random() < 0.5 else Direction.AGAINST
        out.append(Action(c.id, direction, score=5))
    return out


def clique_target(strategy: Strategy, author_clique: int | None) -> Direction:
    if strategy.policy is CliquePolicy.ACCEPT_MEMBERS_REJECT_OTHERS and author_clique == strategy.clique_id:
        return Direction.FOR
    return Direction.AGAINST


def _clique(strategy: Strategy, view: AgentView) -> list[Action]:
    # members all take the earliest deadlines first, so the block lands on the same manuscripts
    out = []
    for c in view.candidates[:max(view.remaining_limit, 0)]:
        direction = clique_target(strategy, c.author_clique)
        score = 10 if direction is Direction.FOR else 1
        out.append(Action(c.id, direction, score=score, body=f"Clique {strategy.clique_id} position."))
    return out


def agent_act(agent: Agent, view: AgentView, rng: np.random.Generator) -> list[Action]:
    s = agent.strategy
    if s.kind is StrategyKind.HONEST:
        return _honest(s, view, rng)
    if s.kind is StrategyKind.COIN_FLIPPER:
        return _coin_flipper(view, rng)
    if s.kind is StrategyKind.CLIQUE:
        return _clique(s, view)
    if rng.random() < s.participation_prob:
        return _honest(s, view, rng)
    return []

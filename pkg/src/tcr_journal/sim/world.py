"""Round-by-round simulation of a journal run by strategic curators.

Each round, in order: advance the clock, draw new submissions, let every agent
act (order shuffled per round), decide manuscripts whose deadline has passed,
update the token price, and record metrics.

Randomness comes from one PCG64 stream per (round, purpose, index), seeded by
``SeedSequence(seed, spawn_key=(round, purpose, index))``. Streams never share
state, so adding a draw in one place cannot shift draws elsewhere.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..errors import SimulationFinished
from ..events import EventLog
from ..journal import CuratorOrigin, Journal, ManuscriptState, ReviewMode
from ..tcr import Direction
from .agents import Action, Agent, AgentView, Candidate, agent_act, clique_target
from .metrics import Metrics, Tally
from .scenario import Scenario, StrategyKind

# rng stream purposes
SUBMISSIONS, ORDER, AGENT = 0, 1, 2


def logistic(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def submission_mean(base_rate: float, sensitivity: float, fair_acceptance: float) -> float:
    """Expected submissions per round.

    Scaled by 2 so that ``sensitivity == 0`` (or a neutral 0.5 fair-acceptance
    rate) gives exactly ``base_rate``; the ceiling is ``2 * base_rate``.
    """
    return base_rate * 2.0 * logistic(sensitivity * (fair_acceptance - 0.5))


def token_price(base_price: float, demand_coefficient: float, applications: int) -> float:
    return base_price * (1.0 + demand_coefficient * applications)


@dataclass
class RoundReport:
    round: int
    submitted: list[str]
    decisions: dict[str, str]
    price: float
    metrics: dict = field(repr=False)


class World:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.journal = Journal(scenario.journal_config)
        self.ledger = self.journal.ledger
        self.round = 0
        self.agents: list[Agent] = []
        for group in scenario.agents:
            for _ in range(group.count):
                account = self.ledger.open_account()
                self.journal.grant_curatorship(account, CuratorOrigin.GRANTED_EXPERT, now=0)
                self.agents.append(Agent(len(self.agents), account, group.strategy))
        self.by_account = {a.account: a for a in self.agents}

        self.quality: dict[str, float] = {}
        self.author_clique: dict[str, int | None] = {}
        self.pending: list[str] = []
        self.applications: list[int] = []
        # (round decided, latent quality at or above the bar, accepted)
        self.recent: deque[tuple[int, bool, bool]] = deque()
        counts: dict[str, int] = {}
        for a in self.agents:
            counts[a.label] = counts.get(a.label, 0) + 1
        self.metrics = Metrics(counts, [a.account for a in self.agents])

    def rng(self, purpose: int, index: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(self.scenario.seed, spawn_key=(self.round, purpose, index))
        return np.random.Generator(np.random.PCG64(seq))

    @property
    def finished(self) -> bool:
        return self.round >= self.scenario.rounds

    def recent_fair_acceptance(self) -> float:
        """Share of recently decided above-bar manuscripts that were accepted (0.5 with no data)."""
        horizon = self.round - self.scenario.submission_model.window
        good = [accepted for r, above, accepted in self.recent if r > horizon and above]
        return sum(good) / len(good) if good else 0.5

    def view_for(self, agent: Agent) -> AgentView:
        now = self.round
        cfg = self.journal.config
        rec = self.journal.curators[agent.account]
        candidates = []
        for ms_id in self.pending:
            ms = self.journal.manuscripts[ms_id]
            if ms.deadline > now and ms.author != agent.account and agent.account not in ms.reviews:
                candidates.append(Candidate(ms_id, ms.deadline, self.quality[ms_id], self.author_clique[ms_id]))
        remaining = cfg.review_limit - rec.reviews_in_window(now, cfg.limit_window)
        return AgentView(now, tuple(candidates), remaining)

    def apply(self, agent: Agent, action: Action) -> None:
        now = self.round
        if self.journal.config.review_mode is ReviewMode.SEQUENTIAL:
            self.journal.submit_review(agent.account, action.manuscript, body=action.body,
                                       score=action.score, now=now)
            self.journal.cast_manuscript_vote(agent.account, action.manuscript, action.direction, now)
        else:
            self.journal.submit_review_and_vote(agent.account, action.manuscript, action.direction,
                                                body=action.body, score=action.score, now=now)


def generate_round_submissions(world: World, rng: np.random.Generator) -> list[str]:
    s = world.scenario
    sm, apc = s.submission_model, s.journal_config.apc
    mean = submission_mean(sm.base_rate, sm.sensitivity, world.recent_fair_acceptance())
    count = int(rng.poisson(mean))
    submitted = []
    for i in range(count):
        author = world.ledger.open_account()
        world.ledger.purchase_tokens(author, apc, 1)
        if s.quality_distribution.kind == "beta":
            q = float(rng.beta(s.quality_distribution.alpha, s.quality_distribution.beta))
        else:
            q = float(rng.random())
        clique = None
        u, acc = rng.random(), 0.0
        for clique_id, share in sorted(sm.clique_share.items()):
            acc += share
            if u < acc:
                clique = clique_id
                break
        ms_id = world.journal.submit_manuscript(author, f"round {world.round} manuscript {i}", world.round)
        world.quality[ms_id] = q
        world.author_clique[ms_id] = clique
        world.pending.append(ms_id)
        submitted.append(ms_id)
    return submitted


def step(world: World) -> RoundReport:
    if world.finished:
        raise SimulationFinished(f"all {world.scenario.rounds} rounds have run")
    s = world.scenario
    world.round += 1
    now = world.round
    tally = Tally()

    submitted = generate_round_submissions(world, world.rng(SUBMISSIONS))
    tally.submissions = len(submitted)
    world.applications.append(len(submitted))

    order = world.rng(ORDER).permutation(len(world.agents))
    for i in order:
        agent = world.agents[int(i)]
        if not world.journal.is_active_curator(agent.account):
            continue
        actions = agent_act(agent, world.view_for(agent), world.rng(AGENT, agent.index))
        for action in actions:
            world.apply(agent, action)
        tally.reviews += len(actions)
        tally.reviews_by_agent[agent.account] += len(actions)

    decisions = {}
    due = [m for m in world.pending if world.journal.manuscripts[m].deadline <= now]
    for ms_id in due:
        decisions[ms_id] = _decide(world, ms_id, tally)
    if due:
        world.pending = [m for m in world.pending if m not in decisions]

    pm = s.price_model
    window_apps = sum(world.applications[-pm.demand_window:])
    tally.applications_in_window = window_apps
    tally.price = token_price(pm.base_price, pm.demand_coefficient, window_apps)

    row = world.metrics.record(now, tally)
    return RoundReport(now, submitted, decisions, tally.price, row)


def _decide(world: World, ms_id: str, tally: Tally) -> str:
    journal, now = world.journal, world.round
    decision = journal.decide(ms_id, now)
    ms = journal.manuscripts[ms_id]
    q = world.quality[ms_id]
    above = q >= world.scenario.quality_threshold

    if decision.state is ManuscriptState.EXPIRED:
        tally.expired += 1
        tally.refunds += world.ledger.escrow(ms.apc_escrow).amount
    else:
        accepted = decision.state is ManuscriptState.ACCEPTED
        if accepted:
            tally.accepted += 1
            tally.quality_accepted += q
        else:
            tally.rejected += 1
            tally.quality_rejected += q
        if above:
            tally.above_bar_decided += 1
            tally.false_rejects += not accepted
        else:
            tally.below_bar_decided += 1
            tally.false_accepts += accepted
        dist = decision.distribution
        tally.treasury_income += dist.fee + dist.remainder
        for winner in dist.winners:
            agent = world.by_account.get(winner)
            if agent is not None:
                tally.earnings[agent.label] += dist.per_winner
    world.recent.append((now, above, decision.state is ManuscriptState.ACCEPTED))
    while world.recent and world.recent[0][0] <= now - world.scenario.submission_model.window:
        world.recent.popleft()

    # clique scoring: did each participating block get the outcome it voted for?
    seen = set()
    for voter in ms.poll.votes:
        agent = world.by_account.get(voter)
        if agent is None or agent.strategy.kind is not StrategyKind.CLIQUE:
            continue
        if agent.strategy.clique_id in seen:
            continue
        seen.add(agent.strategy.clique_id)
        wanted = clique_target(agent.strategy, world.author_clique[ms_id])
        target = ManuscriptState.ACCEPTED if wanted is Direction.FOR else ManuscriptState.REJECTED
        tally.clique_polls += 1
        tally.clique_hits += decision.state is target
    return decision.state.value


def run(scenario: Scenario) -> tuple[Metrics, EventLog]:
    if scenario.rounds == 0:
        counts: dict[str, int] = {}
        for g in scenario.agents:
            counts[g.strategy.kind.value] = counts.get(g.strategy.kind.value, 0) + g.count
        return Metrics(counts), EventLog()
    world = run_world(scenario)
    return world.metrics, world.ledger.log


def run_world(scenario: Scenario) -> World:
    """Like :func:`run` but hands back the whole world, for inspection."""
    world = World(scenario)
    while not world.finished:
        step(world)
    return world

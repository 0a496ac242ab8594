"""Generic token-curated registry: applications, challenges, polls, resolution.

Life of an application::

    apply ──► PENDING ──(window passes unchallenged)──► LISTED
                 │                                        │
              challenge                          removal challenge
                 ▼                                        ▼
              VOTING ──► LISTED | REJECTED        LISTED | DELISTED

A poll whose turnout is below ``max(quorum, 1)`` is void: the challenger's
stake is released and the subject returns to where it stood before the
challenge (an admission gets one more ``vote_window`` of waiting time).
Auto-challenge registries have no "before", so a void poll expires the
application and releases its deposit.

Time is an integer tick passed in by the caller. Windows are half-open.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable

from . import errors
from .events import encode, logged
from .ledger import AccountKind, Distribution, EscrowPurpose, EscrowStatus, Ledger, as_fraction


class TieRule(str, Enum):
    CANDIDATE_WINS_TIES = "CANDIDATE_WINS_TIES"
    CHALLENGER_WINS_TIES = "CHALLENGER_WINS_TIES"


class Direction(str, Enum):
    FOR = "FOR"
    AGAINST = "AGAINST"


class Side(str, Enum):
    CANDIDATE = "CANDIDATE"
    CHALLENGER = "CHALLENGER"


class AppState(str, Enum):
    PENDING = "PENDING"
    VOTING = "VOTING"
    LISTED = "LISTED"
    REJECTED = "REJECTED"
    EXPIRED = "EXPIRED"
    DELISTED = "DELISTED"


TERMINAL = {AppState.REJECTED, AppState.EXPIRED, AppState.DELISTED}


@dataclass(frozen=True)
class RegistryConfig:
    apply_window: int
    vote_window: int
    min_candidate_deposit: int
    challenge_deposit: int
    fee_fraction: Fraction = Fraction(0)
    tie_rule: TieRule = TieRule.CHALLENGER_WINS_TIES
    auto_challenge: bool = False
    quorum: int = 0

    def __post_init__(self):
        object.__setattr__(self, "fee_fraction", as_fraction(self.fee_fraction))
        try:
            object.__setattr__(self, "tie_rule", TieRule(self.tie_rule))
        except ValueError:
            raise errors.InvalidConfig(f"unknown tie_rule {self.tie_rule!r}") from None
        for name in ("apply_window", "vote_window", "min_candidate_deposit", "challenge_deposit"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise errors.InvalidConfig(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.quorum, int) or self.quorum < 0:
            raise errors.InvalidConfig(f"quorum must be a non-negative integer, got {self.quorum!r}")

    def to_dict(self) -> dict:
        return encode(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RegistryConfig":
        return cls(**data)


@dataclass
class Vote:
    voter: str
    direction: Direction
    cast_at: int


@dataclass
class Poll:
    id: str
    subject: str
    opens_at: int
    closes_at: int
    challenger: str | None = None
    challenge_escrow: str | None = None
    removal: bool = False
    votes: dict[str, Vote] = field(default_factory=dict)
    outcome: "Outcome | None" = None

    @property
    def is_open(self) -> bool:
        return self.outcome is None

    def check_vote(self, voter: str, now: int) -> None:
        if not self.opens_at <= now < self.closes_at or not self.is_open:
            raise errors.PollClosed(f"{self.id} accepts votes in [{self.opens_at}, {self.closes_at}), now={now}")
        if voter in self.votes:
            raise errors.DuplicateVote(f"{voter} already voted in {self.id}")

    def record(self, voter: str, direction: Direction, now: int) -> Vote:
        self.check_vote(voter, now)
        vote = Vote(voter, Direction(direction), now)
        self.votes[voter] = vote
        return vote

    def tally(self) -> tuple[int, int]:
        n_for = sum(1 for v in self.votes.values() if v.direction is Direction.FOR)
        return n_for, len(self.votes) - n_for

    def voters(self, direction: Direction) -> list[str]:
        """Voters on one side, in the order their votes were cast."""
        return [v.voter for v in self.votes.values() if v.direction is direction]


@dataclass
class Application:
    id: str
    seq: int
    candidate: Any
    applicant: str
    deposit: str
    state: AppState
    applied_at: int
    window_end: int
    poll: str | None = None
    listed_at: int | None = None
    past_polls: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class Outcome:
    new_state: AppState
    winning_side: Side | None = None
    distribution: Distribution | None = None
    voided: bool = False
    votes_for: int = 0
    votes_against: int = 0


def token_holder(ledger: Ledger) -> Callable[[str], bool]:
    """Default curator eligibility: any participant holding tokens, liquid or staked."""

    def eligible(account_id: str) -> bool:
        acct = ledger.accounts.get(account_id)
        if acct is None or acct.kind is not AccountKind.PARTICIPANT:
            return False
        return acct.balance > 0 or ledger.held_by(account_id) > 0

    return eligible


class Registry:
    def __init__(self, ledger: Ledger, config: RegistryConfig, registry_id: str | None = None,
                 eligibility: Callable[[str], bool] | None = None):
        self.ledger = ledger
        self.config = config
        self.component_id = registry_id or f"registry-{len(ledger.components) + 1}"
        self.eligible = eligibility or token_holder(ledger)
        self.applications: dict[str, Application] = {}
        self.polls: dict[str, Poll] = {}
        ledger.register(self)
        self._created(config)

    @logged("create_registry")
    def _created(self, config: RegistryConfig) -> None:
        if self.ledger.treasury_id is None:
            self.ledger.open_account(AccountKind.TREASURY)

    # -- helpers --

    def application(self, subject: str) -> Application:
        try:
            return self.applications[subject]
        except KeyError:
            raise errors.UnknownSubject(subject) from None

    def poll(self, poll_id: str) -> Poll:
        try:
            return self.polls[poll_id]
        except KeyError:
            raise errors.UnknownSubject(poll_id) from None

    def open_poll(self, app: Application) -> Poll | None:
        if app.poll is None:
            return None
        poll = self.polls[app.poll]
        return poll if poll.is_open else None

    def _new_poll(self, app: Application, now: int, challenger: str | None = None,
                  escrow: str | None = None, removal: bool = False) -> Poll:
        poll_id = f"{self.component_id}/poll-{len(self.polls) + 1}"
        poll = Poll(poll_id, app.id, now, now + self.config.vote_window, challenger, escrow, removal)
        self.polls[poll_id] = poll
        app.poll = poll_id
        return poll

    def _new_application(self, applicant: str, candidate: Any, deposit_amount: int, now: int) -> Application:
        if deposit_amount < self.config.min_candidate_deposit:
            raise errors.DepositTooSmall(
                f"deposit {deposit_amount} below minimum {self.config.min_candidate_deposit}")
        if self.ledger.balance(applicant) < deposit_amount:
            raise errors.InsufficientBalance(f"{applicant} cannot cover deposit {deposit_amount}")
        escrow = self.ledger.hold_escrow(applicant, deposit_amount, EscrowPurpose.GENERIC_DEPOSIT)
        seq = len(self.applications) + 1
        app = Application(f"{self.component_id}/app-{seq}", seq, candidate, applicant, escrow,
                          AppState.PENDING, now, now + self.config.apply_window)
        self.applications[app.id] = app
        return app

    # -- operations --

    @logged("apply")
    def apply(self, applicant: str, candidate: Any, deposit_amount: int, now: int) -> str:
        self.ledger.observe(now)
        app = self._new_application(applicant, candidate, deposit_amount, now)
        if self.config.auto_challenge:
            self._new_poll(app, now)
            app.state = AppState.VOTING
        self.ledger.advance(now)
        return app.id

    @logged("admit")
    def admit(self, applicant: str, candidate: Any, deposit_amount: int, now: int) -> str:
        """List an entry directly, skipping the waiting period (granted memberships)."""
        self.ledger.observe(now)
        app = self._new_application(applicant, candidate, deposit_amount, now)
        app.state = AppState.LISTED
        app.listed_at = now
        self.ledger.advance(now)
        return app.id

    @logged("challenge")
    def challenge(self, subject: str, challenger: str, now: int) -> str:
        self.ledger.observe(now)
        app = self.application(subject)
        if app.state is AppState.PENDING:
            if now >= app.window_end:
                raise errors.WindowClosed(f"{subject} challenge window ended at {app.window_end}")
            removal = False
        elif app.state is AppState.LISTED:
            if self.open_poll(app) is not None:
                raise errors.AlreadyChallenged(f"{subject} is already under a removal poll")
            removal = True
        elif app.state is AppState.VOTING:
            raise errors.AlreadyChallenged(f"{subject} is already being voted on")
        else:
            raise errors.NotChallengeable(f"{subject} is {app.state.value}")
        if not self.eligible(challenger):
            raise errors.NotACurator(f"{challenger} is not an eligible curator")
        if self.ledger.balance(challenger) < self.config.challenge_deposit:
            raise errors.InsufficientBalance(
                f"{challenger} cannot cover challenge deposit {self.config.challenge_deposit}")

        escrow = self.ledger.hold_escrow(challenger, self.config.challenge_deposit,
                                         EscrowPurpose.CHALLENGE_DEPOSIT)
        poll = self._new_poll(app, now, challenger, escrow, removal)
        if not removal:
            app.state = AppState.VOTING
        self.ledger.advance(now)
        return poll.id

    @logged("vote")
    def cast_vote(self, poll: str, curator: str, direction: Direction, now: int) -> str:
        self.ledger.observe(now)
        p = self.poll(poll)
        if not self.eligible(curator):
            raise errors.NotACurator(f"{curator} is not an eligible curator")
        p.record(curator, direction, now)
        self.ledger.advance(now)
        return "recorded"

    def is_resolvable(self, subject: str, now: int) -> bool:
        app = self.applications.get(subject)
        if app is None:
            return False
        poll = self.open_poll(app)
        if poll is not None:
            return now >= poll.closes_at
        return app.state is AppState.PENDING and now >= app.window_end

    @logged("resolve")
    def resolve(self, subject: str, now: int) -> Outcome:
        self.ledger.observe(now)
        app = self.application(subject)
        poll = self.open_poll(app)
        if app.state in TERMINAL or (app.state is AppState.LISTED and poll is None):
            raise errors.AlreadyResolved(f"{subject} is {app.state.value}")

        if poll is None:
            if now < app.window_end:
                raise errors.NotYetResolvable(f"{subject} waiting period ends at {app.window_end}")
            app.state = AppState.LISTED
            app.listed_at = now
            outcome = Outcome(AppState.LISTED, Side.CANDIDATE)
        else:
            if now < poll.closes_at:
                raise errors.NotYetResolvable(f"{poll.id} closes at {poll.closes_at}")
            outcome = self._settle(app, poll, now)
            poll.outcome = outcome
            app.past_polls.append(poll.id)
        self.ledger.advance(now)
        return outcome

    def _settle(self, app: Application, poll: Poll, now: int) -> Outcome:
        n_for, n_against = poll.tally()
        fee = self.config.fee_fraction
        if n_for + n_against < max(self.config.quorum, 1):
            return self._void(app, poll, n_for, n_against)

        candidate_wins = n_for > n_against or (
            n_for == n_against and self.config.tie_rule is TieRule.CANDIDATE_WINS_TIES)
        if candidate_wins:
            dist = None
            if poll.challenge_escrow is not None:
                dist = self.ledger.forfeit_and_distribute(
                    poll.challenge_escrow, poll.voters(Direction.FOR), fee)
            if app.state is not AppState.LISTED:
                app.state = AppState.LISTED
                app.listed_at = now
            return Outcome(AppState.LISTED, Side.CANDIDATE, dist, False, n_for, n_against)

        dist = self.ledger.forfeit_and_distribute(app.deposit, poll.voters(Direction.AGAINST), fee)
        app.state = AppState.DELISTED if poll.removal else AppState.REJECTED
        return Outcome(app.state, Side.CHALLENGER, dist, False, n_for, n_against)

    def _void(self, app: Application, poll: Poll, n_for: int, n_against: int) -> Outcome:
        if poll.challenge_escrow is not None:
            self.ledger.release_escrow(poll.challenge_escrow)
        if poll.removal:
            return Outcome(app.state, None, None, True, n_for, n_against)
        if self.config.auto_challenge:
            self.ledger.release_escrow(app.deposit)
            app.state = AppState.EXPIRED
        else:
            app.state = AppState.PENDING
            app.window_end += self.config.vote_window
            app.poll = None
        return Outcome(app.state, None, None, True, n_for, n_against)

    # -- reads --

    def list_contents(self) -> list[Application]:
        listed = [a for a in self.applications.values() if a.state is AppState.LISTED]
        return sorted(listed, key=lambda a: (a.listed_at, a.seq))

    def deposit_status(self, subject: str) -> EscrowStatus:
        return self.ledger.escrow(self.application(subject).deposit).status

    def state(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "applications": encode(self.applications),
            "polls": encode(self.polls),
        }

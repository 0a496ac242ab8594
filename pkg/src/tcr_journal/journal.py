"""Scholarly-journal workflow on top of the ledger and registry machinery.

A submission escrows the APC and opens a review-gated poll that closes at a
fixed deadline. Curators must file a review before (SEQUENTIAL mode) or
together with (SIMULTANEOUS mode) their vote. At the deadline the manuscript
is accepted when it has at least one FOR vote, FOR >= AGAINST, and turnout
meets the quorum. The APC then goes to the winning voters, less the journal
fee. No votes, or too few, expires the manuscript and refunds the author.

The curator roster is itself a registry: every curator holds a listed entry
with a deposit, and any active curator can stake a challenge to expel another.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any

from . import errors
from .events import encode, logged
from .ledger import AccountKind, Distribution, EscrowPurpose, Ledger, as_fraction
from .tcr import AppState, Direction, Outcome, Poll, Registry, RegistryConfig, TieRule


class ReviewMode(str, Enum):
    SEQUENTIAL = "SEQUENTIAL"
    SIMULTANEOUS = "SIMULTANEOUS"


class CuratorPolicy(str, Enum):
    PUBLISHED_AUTHORS = "PUBLISHED_AUTHORS"
    GRANTED = "GRANTED"
    PURCHASED = "PURCHASED"


class CuratorOrigin(str, Enum):
    PUBLISHED_AUTHOR = "PUBLISHED_AUTHOR"
    GRANTED_EXPERT = "GRANTED_EXPERT"
    PURCHASED = "PURCHASED"


POLICY_FOR_ORIGIN = {
    CuratorOrigin.PUBLISHED_AUTHOR: CuratorPolicy.PUBLISHED_AUTHORS,
    CuratorOrigin.GRANTED_EXPERT: CuratorPolicy.GRANTED,
    CuratorOrigin.PURCHASED: CuratorPolicy.PURCHASED,
}


class CuratorStatus(str, Enum):
    ACTIVE = "ACTIVE"
    EXPELLED = "EXPELLED"


class ManuscriptState(str, Enum):
    UNDER_REVIEW = "UNDER_REVIEW"
    ACCEPTED = "ACCEPTED"
    REJECTED = "REJECTED"
    EXPIRED = "EXPIRED"


class Role(str, Enum):
    CURATOR = "CURATOR"
    AUTHOR = "AUTHOR"
    PUBLIC = "PUBLIC"


_INT_FIELDS = {
    # field: minimum allowed value
    "apc": 1,
    "review_window": 1,
    "quorum": 1,
    "review_limit": 1,
    "limit_window": 1,
    "curator_deposit": 1,
    "expulsion_deposit": 1,
    "expulsion_window": 1,
}


@dataclass(frozen=True)
class JournalConfig:
    apc: int = 300
    review_window: int = 7
    review_mode: ReviewMode = ReviewMode.SEQUENTIAL
    quorum: int = 1
    fee_fraction: Fraction = Fraction(1, 10)
    review_limit: int = 5
    limit_window: int = 30
    open_review: bool = False
    curator_policy: frozenset = frozenset({CuratorPolicy.PUBLISHED_AUTHORS, CuratorPolicy.GRANTED})
    # stake behind each roster entry, and the counter-stake to challenge one
    curator_deposit: int = 1
    expulsion_deposit: int = 10
    expulsion_window: int = 7

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise errors.InvalidConfig("; ".join(problems))
        object.__setattr__(self, "review_mode", ReviewMode(self.review_mode))
        object.__setattr__(self, "fee_fraction", as_fraction(self.fee_fraction))
        object.__setattr__(self, "curator_policy",
                           frozenset(CuratorPolicy(p) for p in self.curator_policy))

    def problems(self) -> list[str]:
        """Field-level validation messages; empty when the config is valid."""
        out = []
        for name, low in _INT_FIELDS.items():
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                out.append(f"{name}: expected an integer, got {value!r}")
            elif value < low:
                out.append(f"{name}: must be >= {low}, got {value}")
        if self.review_mode not in {m.value for m in ReviewMode}:
            out.append(f"review_mode: expected one of {[m.value for m in ReviewMode]}, got {self.review_mode!r}")
        try:
            as_fraction(self.fee_fraction)
        except errors.InvalidFraction as exc:
            out.append(f"fee_fraction: {exc}")
        if not isinstance(self.open_review, bool):
            out.append(f"open_review: expected a boolean, got {self.open_review!r}")
        policies = self.curator_policy
        if isinstance(policies, str) or not policies:
            out.append("curator_policy: expected a non-empty list of policies")
        else:
            bad = [p for p in policies if p not in {c.value for c in CuratorPolicy}]
            if bad:
                out.append(f"curator_policy: unknown policies {bad}")
        return out

    def to_dict(self) -> dict:
        return encode(self)

    @classmethod
    def from_dict(cls, data: dict) -> "JournalConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise errors.InvalidConfig("; ".join(f"{k}: unknown field" for k in sorted(unknown)))
        data = dict(data)
        if "curator_policy" in data and isinstance(data["curator_policy"], list):
            data["curator_policy"] = frozenset(data["curator_policy"])
        return cls(**data)


@dataclass
class Review:
    id: str
    curator: str
    manuscript: str
    body: str | None
    score: int | None
    submitted_at: int


@dataclass(frozen=True)
class ReviewView:
    """A review as a particular reader is allowed to see it."""

    curator: str | None
    body: str | None
    score: int | None
    submitted_at: int
    direction: Direction | None


@dataclass
class Manuscript:
    id: str
    seq: int
    author: str
    payload: Any
    apc_escrow: str
    state: ManuscriptState
    submitted_at: int
    deadline: int
    poll: Poll
    reviews: dict[str, Review] = field(default_factory=dict)
    decided_at: int | None = None
    distribution: Distribution | None = None


@dataclass
class CuratorRecord:
    curator: str
    origin: CuratorOrigin
    status: CuratorStatus
    entry: str
    review_times: list[int] = field(default_factory=list)

    def reviews_in_window(self, now: int, window: int) -> int:
        return sum(1 for t in self.review_times if now - window < t <= now)


@dataclass(frozen=True)
class Decision:
    state: ManuscriptState
    votes_for: int
    votes_against: int
    distribution: Distribution | None = None


class Journal:
    def __init__(self, config: JournalConfig, ledger: Ledger | None = None, journal_id: str = "journal"):
        self.ledger = ledger if ledger is not None else Ledger()
        self.config = config
        self.component_id = journal_id
        self.manuscripts: dict[str, Manuscript] = {}
        self.curators: dict[str, CuratorRecord] = {}
        self.roster: Registry | None = None
        self._review_count = 0
        self.ledger.register(self)
        self._created(config)

    @logged("create_journal")
    def _created(self, config: JournalConfig) -> None:
        if self.ledger.treasury_id is None:
            self.ledger.open_account(AccountKind.TREASURY)
        roster_config = RegistryConfig(
            apply_window=1,
            vote_window=config.expulsion_window,
            min_candidate_deposit=config.curator_deposit,
            challenge_deposit=config.expulsion_deposit,
            fee_fraction=config.fee_fraction,
            tie_rule=TieRule.CANDIDATE_WINS_TIES,
            quorum=1,
        )
        self.roster = Registry(self.ledger, roster_config, f"{self.component_id}/curators",
                               eligibility=self.is_active_curator)

    # -- lookups --

    @property
    def treasury(self) -> str:
        return self.ledger.require_treasury()

    def manuscript(self, manuscript_id: str) -> Manuscript:
        try:
            return self.manuscripts[manuscript_id]
        except KeyError:
            raise errors.UnknownManuscript(manuscript_id) from None

    def is_active_curator(self, account: str) -> bool:
        rec = self.curators.get(account)
        return rec is not None and rec.status is CuratorStatus.ACTIVE

    def _active(self, account: str) -> CuratorRecord:
        if not self.is_active_curator(account):
            raise errors.NotACurator(f"{account} is not an active curator")
        return self.curators[account]

    def role_of(self, requester: str | None, ms: Manuscript) -> Role:
        if requester is not None and requester == ms.author:
            return Role.AUTHOR
        if requester is not None and self.is_active_curator(requester):
            return Role.CURATOR
        return Role.PUBLIC

    # -- submission and review --

    @logged("submit_manuscript")
    def submit_manuscript(self, author: str, payload: Any, now: int) -> str:
        self.ledger.observe(now)
        if self.ledger.balance(author) < self.config.apc:
            raise errors.InsufficientBalance(f"{author} cannot cover the APC of {self.config.apc}")
        escrow = self.ledger.hold_escrow(author, self.config.apc, EscrowPurpose.APC_DEPOSIT)
        seq = len(self.manuscripts) + 1
        ms_id = f"{self.component_id}/ms-{seq}"
        deadline = now + self.config.review_window
        poll = Poll(f"{ms_id}/poll", ms_id, now, deadline)
        self.manuscripts[ms_id] = Manuscript(ms_id, seq, author, payload, escrow,
                                             ManuscriptState.UNDER_REVIEW, now, deadline, poll)
        self.ledger.advance(now)
        return ms_id

    def list_pending(self, requester: str) -> list[dict]:
        """Manuscripts under review, earliest deadline first. Curators only."""
        self._active(requester)
        pending = [m for m in self.manuscripts.values() if m.state is ManuscriptState.UNDER_REVIEW]
        pending.sort(key=lambda m: (m.deadline, m.seq))
        return [{"id": m.id, "author": m.author, "payload": m.payload,
                 "submitted_at": m.submitted_at, "deadline": m.deadline} for m in pending]

    def _check_review(self, curator: str, manuscript: str, body, score, now: int) -> tuple[CuratorRecord, Manuscript]:
        self.ledger.observe(now)
        rec = self._active(curator)
        ms = self.manuscript(manuscript)
        if ms.state is not ManuscriptState.UNDER_REVIEW or now >= ms.deadline:
            raise errors.DeadlinePassed(f"{manuscript} closed for review at {ms.deadline}")
        if curator == ms.author:
            raise errors.SelfReview("authors may not review their own manuscripts")
        if curator in ms.reviews:
            raise errors.DuplicateReview(f"{curator} already reviewed {manuscript}")
        if body is None and score is None:
            raise errors.InvalidReview("a review needs a body, a score, or both")
        if score is not None and (not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 10):
            raise errors.InvalidReview(f"score must be an integer in [1, 10], got {score!r}")
        if body is not None and not isinstance(body, str):
            raise errors.InvalidReview("review body must be text")
        if rec.reviews_in_window(now, self.config.limit_window) >= self.config.review_limit:
            raise errors.LimitExceeded(
                f"{curator} reached {self.config.review_limit} reviews within {self.config.limit_window} ticks")
        return rec, ms

    def _store_review(self, rec: CuratorRecord, ms: Manuscript, body, score, now: int) -> str:
        self._review_count += 1
        review = Review(f"{self.component_id}/review-{self._review_count}", rec.curator, ms.id, body, score, now)
        ms.reviews[rec.curator] = review
        rec.review_times.append(now)
        return review.id

    @logged("submit_review")
    def submit_review(self, curator: str, manuscript: str, *, body: str | None = None,
                      score: int | None = None, now: int) -> str:
        if self.config.review_mode is not ReviewMode.SEQUENTIAL:
            raise errors.WrongMode("simultaneous journals take reviews through submit_review_and_vote")
        rec, ms = self._check_review(curator, manuscript, body, score, now)
        review_id = self._store_review(rec, ms, body, score, now)
        self.ledger.advance(now)
        return review_id

    @logged("manuscript_vote")
    def cast_manuscript_vote(self, curator: str, manuscript: str, direction: Direction, now: int) -> str:
        if self.config.review_mode is not ReviewMode.SEQUENTIAL:
            raise errors.WrongMode("simultaneous journals take votes through submit_review_and_vote")
        self.ledger.observe(now)
        self._active(curator)
        ms = self.manuscript(manuscript)
        if ms.state is not ManuscriptState.UNDER_REVIEW or now >= ms.deadline:
            raise errors.DeadlinePassed(f"{manuscript} closed for voting at {ms.deadline}")
        if curator not in ms.reviews:
            raise errors.NoReviewOnFile(f"{curator} must review {manuscript} before voting")
        ms.poll.record(curator, Direction(direction), now)
        self.ledger.advance(now)
        return "recorded"

    @logged("submit_review_and_vote")
    def submit_review_and_vote(self, curator: str, manuscript: str, direction: Direction, *,
                               body: str | None = None, score: int | None = None, now: int) -> str:
        if self.config.review_mode is not ReviewMode.SIMULTANEOUS:
            raise errors.WrongMode("sequential journals take reviews and votes separately")
        direction = Direction(direction)
        rec, ms = self._check_review(curator, manuscript, body, score, now)
        ms.poll.check_vote(curator, now)
        self._store_review(rec, ms, body, score, now)
        ms.poll.record(curator, direction, now)
        self.ledger.advance(now)
        return "recorded"

    def read_reviews(self, requester: str | None, manuscript: str, now: int | None = None) -> list[ReviewView]:
        """Reviews visible to ``requester`` (None means an anonymous member of the public).

        Curators see everything at once in SEQUENTIAL mode and nothing until the
        decision in SIMULTANEOUS mode. Authors and the public see nothing before
        the decision; afterwards authors get the reviews, with reviewer
        identities only under open review, and the public gets them only under
        open review.
        """
        ms = self.manuscript(manuscript)
        decided = ms.state is not ManuscriptState.UNDER_REVIEW
        role = self.role_of(requester, ms)
        if role is Role.CURATOR:
            visible = decided or self.config.review_mode is ReviewMode.SEQUENTIAL
            named = True
        elif role is Role.AUTHOR:
            visible, named = decided, self.config.open_review
        else:
            visible = named = decided and self.config.open_review
        if not visible:
            return []
        out = []
        for review in sorted(ms.reviews.values(), key=lambda r: (r.submitted_at, r.id)):
            vote = ms.poll.votes.get(review.curator)
            out.append(ReviewView(review.curator if named else None, review.body, review.score,
                                  review.submitted_at, vote.direction if vote else None))
        return out

    # -- decisions --

    def is_decidable(self, manuscript: str, now: int) -> bool:
        ms = self.manuscripts.get(manuscript)
        return ms is not None and ms.state is ManuscriptState.UNDER_REVIEW and now >= ms.deadline

    @logged("decide")
    def decide(self, manuscript: str, now: int) -> Decision:
        self.ledger.observe(now)
        ms = self.manuscript(manuscript)
        if ms.state is not ManuscriptState.UNDER_REVIEW:
            raise errors.AlreadyDecided(f"{manuscript} is {ms.state.value}")
        if now < ms.deadline:
            raise errors.NotYetResolvable(f"{manuscript} deadline is {ms.deadline}")

        n_for, n_against = ms.poll.tally()
        dist = None
        if n_for + n_against == 0 or n_for + n_against < self.config.quorum:
            self.ledger.release_escrow(ms.apc_escrow)
            ms.state = ManuscriptState.EXPIRED
        elif n_for >= 1 and n_for >= n_against:
            dist = self.ledger.forfeit_and_distribute(
                ms.apc_escrow, ms.poll.voters(Direction.FOR), self.config.fee_fraction)
            ms.state = ManuscriptState.ACCEPTED
        else:
            dist = self.ledger.forfeit_and_distribute(
                ms.apc_escrow, ms.poll.voters(Direction.AGAINST), self.config.fee_fraction)
            ms.state = ManuscriptState.REJECTED
        ms.decided_at = now
        ms.distribution = dist
        decision = Decision(ms.state, n_for, n_against, dist)
        ms.poll.outcome = Outcome(AppState.LISTED if ms.state is ManuscriptState.ACCEPTED else AppState.REJECTED,
                                  None, dist, ms.state is ManuscriptState.EXPIRED, n_for, n_against)

        if (ms.state is ManuscriptState.ACCEPTED
                and CuratorPolicy.PUBLISHED_AUTHORS in self.config.curator_policy
                and ms.author not in self.curators):
            self.grant_curatorship(ms.author, CuratorOrigin.PUBLISHED_AUTHOR, now=now)
        self.ledger.advance(now)
        return decision

    def published_list(self) -> list[Manuscript]:
        accepted = [m for m in self.manuscripts.values() if m.state is ManuscriptState.ACCEPTED]
        return sorted(accepted, key=lambda m: (m.decided_at, m.seq))

    # -- curator roster --

    @logged("grant_curatorship")
    def grant_curatorship(self, account: str, origin: CuratorOrigin, now: int | None = None) -> CuratorRecord:
        if now is None:
            now = self.ledger.clock or 0
        self.ledger.observe(now)
        self.ledger.account(account)
        origin = CuratorOrigin(origin)
        if POLICY_FOR_ORIGIN[origin] not in self.config.curator_policy:
            raise errors.PolicyForbidsOrigin(f"curator policy does not allow {origin.value}")
        if self.is_active_curator(account):
            raise errors.AlreadyCurator(f"{account} is already an active curator")

        stake = self.config.curator_deposit
        if origin is CuratorOrigin.PURCHASED:
            if self.ledger.balance(account) < stake:
                raise errors.InsufficientBalance(f"{account} cannot cover the curator deposit {stake}")
        else:
            # free grants: the journal funds the roster stake, buying tokens if it must
            shortfall = stake - self.ledger.balance(self.treasury)
            if shortfall > 0:
                self.ledger.purchase_tokens(self.treasury, shortfall, 1)
            self.ledger.transfer(self.treasury, account, stake)
        entry = self.roster.admit(account, {"curator": account}, stake, now)
        rec = CuratorRecord(account, origin, CuratorStatus.ACTIVE, entry)
        if account in self.curators:
            rec.review_times = self.curators[account].review_times
        self.curators[account] = rec
        self.ledger.advance(now)
        return rec

    @logged("propose_expulsion")
    def propose_expulsion(self, proposer: str, target: str, now: int) -> str:
        if proposer == target:
            raise errors.SelfExpulsion("a curator cannot propose their own expulsion")
        self._active(proposer)
        rec = self._active(target)
        return self.roster.challenge(rec.entry, proposer, now)

    @logged("expulsion_vote")
    def vote_on_expulsion(self, curator: str, poll: str, direction: Direction, now: int) -> str:
        """Vote FOR to keep the targeted curator, AGAINST to expel them."""
        return self.roster.cast_vote(poll, curator, direction, now)

    @logged("resolve_expulsion")
    def resolve_expulsion(self, target: str, now: int) -> Outcome:
        rec = self.curators.get(target)
        if rec is None:
            raise errors.NotACurator(f"{target} has no curator record")
        outcome = self.roster.resolve(rec.entry, now)
        if outcome.new_state is AppState.DELISTED:
            rec.status = CuratorStatus.EXPELLED
        return outcome

    # -- invariant probes --

    def review_gate_violations(self) -> int:
        """Votes lacking a same-curator review on the same manuscript."""
        return sum(1 for ms in self.manuscripts.values() for voter in ms.poll.votes if voter not in ms.reviews)

    def limit_violations(self) -> int:
        """Curator windows of length ``limit_window`` holding more than ``review_limit`` reviews."""
        w, cap = self.config.limit_window, self.config.review_limit
        bad = 0
        for rec in self.curators.values():
            times = sorted(rec.review_times)
            for t in times:
                if sum(1 for u in times if t - w < u <= t) > cap:
                    bad += 1
        return bad

    def state(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "manuscripts": encode(self.manuscripts),
            "curators": encode(self.curators),
        }

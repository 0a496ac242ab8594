from fractions import Fraction

import pytest

from tcr_journal import errors
from tcr_journal.journal import (CuratorOrigin, CuratorPolicy, CuratorStatus, JournalConfig,
                                 ManuscriptState, ReviewMode)
from tcr_journal.ledger import EscrowStatus
from tcr_journal.replay import replay
from tcr_journal.tcr import AppState, Direction


def review_and_vote(journal, curator, ms, direction, now=1):
    if journal.config.review_mode is ReviewMode.SEQUENTIAL:
        journal.submit_review(curator, ms, body="ok", score=5, now=now)
        journal.cast_manuscript_vote(curator, ms, direction, now)
    else:
        journal.submit_review_and_vote(curator, ms, direction, body="ok", score=5, now=now)


class TestConfig:
    def test_defaults_are_valid(self):
        assert JournalConfig().problems() == []

    def test_zero_quorum_named(self):
        with pytest.raises(errors.InvalidConfig, match="quorum"):
            JournalConfig(quorum=0)

    def test_unknown_field(self):
        with pytest.raises(errors.InvalidConfig, match="bogus"):
            JournalConfig.from_dict({"bogus": 1})

    def test_round_trip(self):
        cfg = JournalConfig(fee_fraction=Fraction(1, 4), review_mode=ReviewMode.SIMULTANEOUS)
        assert JournalConfig.from_dict(cfg.to_dict()) == cfg


class TestSubmit:
    def test_escrows_apc(self, make_journal):
        journal, _, author = make_journal()
        ms = journal.submit_manuscript(author, "draft", now=0)
        m = journal.manuscript(ms)
        assert m.state is ManuscriptState.UNDER_REVIEW
        assert m.deadline == 7
        assert journal.ledger.escrow(m.apc_escrow).amount == 300
        assert journal.ledger.balance(author) == 0

    def test_insufficient_balance(self, make_journal):
        journal, _, author = make_journal(author_funds=299)
        with pytest.raises(errors.InsufficientBalance):
            journal.submit_manuscript(author, "draft", now=0)

    def test_pending_pool_is_closed_to_the_public(self, make_journal):
        journal, _, author = make_journal()
        journal.submit_manuscript(author, "draft", now=0)
        with pytest.raises(errors.NotACurator):
            journal.list_pending(None)
        with pytest.raises(errors.NotACurator):
            journal.list_pending(author)


class TestListPending:
    def test_ordered_by_deadline(self, make_journal):
        journal, (c, *_), author = make_journal(author_funds=600)
        first = journal.submit_manuscript(author, "a", now=0)
        second = journal.submit_manuscript(author, "b", now=1)
        assert [m["id"] for m in journal.list_pending(c)] == [first, second]

    def test_expelled_curator_refused(self, make_journal):
        journal, (c, target, v), _ = make_journal()
        journal.ledger.purchase_tokens(c, 10, 1)
        poll = journal.propose_expulsion(c, target, now=0)
        journal.vote_on_expulsion(v, poll, Direction.AGAINST, now=1)
        journal.resolve_expulsion(target, now=7)
        with pytest.raises(errors.NotACurator):
            journal.list_pending(target)


class TestReviewLimit:
    def _journal_with(self, make_journal, n_manuscripts):
        journal, (c, *_), author = make_journal(author_funds=300 * n_manuscripts, review_limit=5, limit_window=30)
        ids = [journal.submit_manuscript(author, i, now=0) for i in range(n_manuscripts)]
        return journal, c, ids

    def test_fifth_review_allowed(self, make_journal):
        journal, c, ids = self._journal_with(make_journal, 5)
        for ms in ids:
            journal.submit_review(c, ms, score=5, now=1)
        assert journal.curators[c].reviews_in_window(1, 30) == 5

    def test_sixth_review_refused(self, make_journal):
        journal, c, ids = self._journal_with(make_journal, 6)
        for ms in ids[:5]:
            journal.submit_review(c, ms, score=5, now=1)
        with pytest.raises(errors.LimitExceeded):
            journal.submit_review(c, ids[5], score=5, now=1)

    def test_window_slides(self, make_journal):
        journal, (c, *_), author = make_journal(author_funds=600, review_limit=1, limit_window=2, review_window=10)
        a = journal.submit_manuscript(author, "a", now=0)
        b = journal.submit_manuscript(author, "b", now=0)
        journal.submit_review(c, a, score=5, now=1)
        with pytest.raises(errors.LimitExceeded):
            journal.submit_review(c, b, score=5, now=2)
        journal.submit_review(c, b, score=5, now=3)

    @pytest.mark.parametrize("score", [0, 11, 5.5, True])
    def test_score_range(self, make_journal, score):
        journal, (c, *_), author = make_journal()
        ms = journal.submit_manuscript(author, "a", now=0)
        with pytest.raises(errors.InvalidReview):
            journal.submit_review(c, ms, score=score, now=1)


class TestReviewRules:
    def test_self_review(self, make_journal):
        journal, (c, *_), _ = make_journal()
        journal.ledger.purchase_tokens(c, 300, 1)
        ms = journal.submit_manuscript(c, "mine", now=0)
        with pytest.raises(errors.SelfReview):
            journal.submit_review(c, ms, score=5, now=1)

    def test_duplicate_review(self, make_journal):
        journal, (c, *_), author = make_journal()
        ms = journal.submit_manuscript(author, "a", now=0)
        journal.submit_review(c, ms, score=5, now=1)
        with pytest.raises(errors.DuplicateReview):
            journal.submit_review(c, ms, score=6, now=1)

    def test_deadline(self, make_journal):
        journal, (c, *_), author = make_journal()
        ms = journal.submit_manuscript(author, "a", now=0)
        with pytest.raises(errors.DeadlinePassed):
            journal.submit_review(c, ms, score=5, now=7)

    def test_simultaneous_rejects_bare_review(self, make_journal):
        journal, (c, *_), author = make_journal(review_mode=ReviewMode.SIMULTANEOUS)
        ms = journal.submit_manuscript(author, "a", now=0)
        with pytest.raises(errors.WrongMode):
            journal.submit_review(c, ms, score=5, now=1)


class TestVote:
    def test_review_then_vote(self, make_journal):
        journal, (c, *_), author = make_journal()
        ms = journal.submit_manuscript(author, "a", now=0)
        journal.submit_review(c, ms, body="fine", now=1)
        assert journal.cast_manuscript_vote(c, ms, Direction.FOR, 1) == "recorded"

    def test_vote_without_review(self, make_journal):
        journal, (c, *_), author = make_journal()
        ms = journal.submit_manuscript(author, "a", now=0)
        with pytest.raises(errors.NoReviewOnFile):
            journal.cast_manuscript_vote(c, ms, Direction.FOR, 1)

    def test_vote_twice(self, make_journal):
        journal, (c, *_), author = make_journal()
        ms = journal.submit_manuscript(author, "a", now=0)
        review_and_vote(journal, c, ms, Direction.FOR)
        with pytest.raises(errors.DuplicateVote):
            journal.cast_manuscript_vote(c, ms, Direction.AGAINST, 1)


class TestSimultaneous:
    def test_atomic_and_hidden(self, make_journal):
        journal, (c, other, _), author = make_journal(review_mode=ReviewMode.SIMULTANEOUS)
        ms = journal.submit_manuscript(author, "a", now=0)
        journal.submit_review_and_vote(c, ms, Direction.FOR, body="fine", score=8, now=1)
        m = journal.manuscript(ms)
        assert c in m.reviews and c in m.poll.votes
        assert journal.read_reviews(other, ms) == []
        assert journal.read_reviews(c, ms) == []

    def test_limit_exceeded_stores_nothing(self, make_journal):
        journal, (c, *_), author = make_journal(author_funds=600, review_mode=ReviewMode.SIMULTANEOUS,
                                                review_limit=1)
        a = journal.submit_manuscript(author, "a", now=0)
        b = journal.submit_manuscript(author, "b", now=0)
        journal.submit_review_and_vote(c, a, Direction.FOR, score=5, now=1)
        log_len = len(journal.ledger.log)
        with pytest.raises(errors.LimitExceeded):
            journal.submit_review_and_vote(c, b, Direction.FOR, score=5, now=1)
        m = journal.manuscript(b)
        assert m.reviews == {} and m.poll.votes == {}
        assert len(journal.ledger.log) == log_len

    def test_wrong_mode(self, make_journal):
        journal, (c, *_), author = make_journal()
        ms = journal.submit_manuscript(author, "a", now=0)
        with pytest.raises(errors.WrongMode):
            journal.submit_review_and_vote(c, ms, Direction.FOR, score=5, now=1)


class TestReadReviews:
    def test_sequential_curator_sees_all_before_decision(self, make_journal):
        journal, (c1, c2, c3), author = make_journal()
        ms = journal.submit_manuscript(author, "a", now=0)
        review_and_vote(journal, c1, ms, Direction.FOR)
        review_and_vote(journal, c2, ms, Direction.AGAINST)
        views = journal.read_reviews(c3, ms)
        assert [v.curator for v in views] == [c1, c2]
        assert [v.direction for v in views] == [Direction.FOR, Direction.AGAINST]

    def test_public_with_open_review_after_decision(self, make_journal):
        journal, (c1, *_), author = make_journal(open_review=True)
        ms = journal.submit_manuscript(author, "a", now=0)
        review_and_vote(journal, c1, ms, Direction.FOR)
        assert journal.read_reviews(None, ms) == []
        journal.decide(ms, now=7)
        assert [v.curator for v in journal.read_reviews(None, ms)] == [c1]

    def test_author_sees_anonymised_reviews_after_decision(self, make_journal):
        journal, (c1, *_), author = make_journal()
        ms = journal.submit_manuscript(author, "a", now=0)
        review_and_vote(journal, c1, ms, Direction.AGAINST)
        journal.decide(ms, now=7)
        views = journal.read_reviews(author, ms)
        assert len(views) == 1 and views[0].curator is None and views[0].score == 5


class TestDecide:
    def _decide(self, make_journal, n_for, n_against, quorum=1):
        journal, curators, author = make_journal(n_curators=n_for + n_against, quorum=quorum)
        ms = journal.submit_manuscript(author, "a", now=0)
        for i, c in enumerate(curators):
            review_and_vote(journal, c, ms, Direction.FOR if i < n_for else Direction.AGAINST)
        return journal, curators, author, ms, journal.decide(ms, now=7)

    def test_tie_accepted(self, make_journal):
        *_, decision = self._decide(make_journal, 3, 3)
        assert decision.state is ManuscriptState.ACCEPTED

    def test_unanimous_rejection_pays_against_voters(self, make_journal):
        journal, curators, _, _, decision = self._decide(make_journal, 0, 4)
        assert decision.state is ManuscriptState.REJECTED
        assert decision.distribution.fee == 30
        assert decision.distribution.winner_count == 4
        # 270 over 4 voters: 67 each, 2 left for the treasury
        assert [journal.ledger.balance(c) for c in curators] == [67] * 4

    def test_no_votes_expires_with_refund(self, make_journal):
        journal, _, author, ms, decision = self._decide(make_journal, 0, 0)
        assert decision.state is ManuscriptState.EXPIRED
        assert decision.distribution is None
        assert journal.ledger.balance(author) == 300
        assert journal.ledger.escrow(journal.manuscript(ms).apc_escrow).status is EscrowStatus.RELEASED

    def test_below_quorum_expires(self, make_journal):
        journal, _, author, _, decision = self._decide(make_journal, 2, 0, quorum=3)
        assert decision.state is ManuscriptState.EXPIRED
        assert journal.ledger.balance(author) == 300

    def test_two_for_one_against(self, make_journal):
        journal, curators, _, _, decision = self._decide(make_journal, 2, 1)
        assert decision.state is ManuscriptState.ACCEPTED
        assert decision.distribution.fee == 30
        assert [journal.ledger.balance(c) for c in curators] == [135, 135, 0]

    def test_not_yet(self, make_journal):
        journal, _, author = make_journal()
        ms = journal.submit_manuscript(author, "a", now=0)
        with pytest.raises(errors.NotYetResolvable):
            journal.decide(ms, now=6)

    def test_already_decided(self, make_journal):
        journal, _, _, ms, _ = self._decide(make_journal, 1, 0)
        with pytest.raises(errors.AlreadyDecided):
            journal.decide(ms, now=8)


class TestPublishedList:
    def test_empty(self, make_journal):
        journal, _, _ = make_journal()
        assert journal.published_list() == []

    def test_only_accepted(self, make_journal):
        journal, (c1, c2, _), author = make_journal(author_funds=900)
        good = journal.submit_manuscript(author, "good", now=0)
        bad = journal.submit_manuscript(author, "bad", now=0)
        journal.submit_manuscript(author, "ignored", now=0)
        review_and_vote(journal, c1, good, Direction.FOR)
        review_and_vote(journal, c2, bad, Direction.AGAINST)
        for m in list(journal.manuscripts):
            journal.decide(m, now=7)
        assert [m.id for m in journal.published_list()] == [good]


class TestCuratorship:
    def test_accepted_author_becomes_curator(self, make_journal):
        journal, (c, *_), author = make_journal()
        ms = journal.submit_manuscript(author, "a", now=0)
        review_and_vote(journal, c, ms, Direction.FOR)
        journal.decide(ms, now=7)
        rec = journal.curators[author]
        assert rec.status is CuratorStatus.ACTIVE and rec.origin is CuratorOrigin.PUBLISHED_AUTHOR

    def test_no_grant_without_policy(self, make_journal):
        journal, (c, *_), author = make_journal(curator_policy={CuratorPolicy.GRANTED})
        ms = journal.submit_manuscript(author, "a", now=0)
        review_and_vote(journal, c, ms, Direction.FOR)
        journal.decide(ms, now=7)
        assert author not in journal.curators

    def test_grant_twice(self, make_journal):
        journal, (c, *_), _ = make_journal()
        with pytest.raises(errors.AlreadyCurator):
            journal.grant_curatorship(c, CuratorOrigin.GRANTED_EXPERT)

    def test_policy_forbids_purchase(self, make_journal):
        journal, _, author = make_journal(curator_policy={CuratorPolicy.GRANTED})
        with pytest.raises(errors.PolicyForbidsOrigin):
            journal.grant_curatorship(author, CuratorOrigin.PURCHASED)

    def test_purchased_curator_stakes_own_tokens(self, make_journal):
        journal, _, author = make_journal(n_curators=0, curator_policy={CuratorPolicy.PURCHASED})
        journal.grant_curatorship(author, CuratorOrigin.PURCHASED, now=0)
        assert journal.ledger.balance(author) == 299


class TestExpulsion:
    def _setup(self, make_journal):
        journal, (proposer, target, v1), _ = make_journal()
        journal.ledger.purchase_tokens(proposer, 10, 1)
        poll = journal.propose_expulsion(proposer, target, now=0)
        return journal, proposer, target, v1, poll

    def test_proposal_opens_removal_poll(self, make_journal):
        journal, _, _, _, poll = self._setup(make_journal)
        assert journal.roster.poll(poll).removal

    def test_self_expulsion(self, make_journal):
        journal, (c, *_), _ = make_journal()
        with pytest.raises(errors.SelfExpulsion):
            journal.propose_expulsion(c, c, now=0)

    def test_proposal_needs_deposit(self, make_journal):
        journal, (c, target, _), _ = make_journal()
        with pytest.raises(errors.InsufficientBalance):
            journal.propose_expulsion(c, target, now=0)

    def test_failed_expulsion_forfeits_proposer_deposit(self, make_journal):
        journal, proposer, target, v1, poll = self._setup(make_journal)
        journal.vote_on_expulsion(v1, poll, Direction.FOR, now=1)
        outcome = journal.resolve_expulsion(target, now=7)
        assert outcome.new_state is AppState.LISTED
        assert journal.curators[target].status is CuratorStatus.ACTIVE
        # roster stakes stay held; only the 10-token challenge deposit moves
        assert journal.ledger.balance(proposer) == 0
        assert journal.ledger.balance(v1) == 9

    def test_successful_expulsion(self, make_journal):
        journal, proposer, target, v1, poll = self._setup(make_journal)
        journal.vote_on_expulsion(v1, poll, Direction.AGAINST, now=1)
        outcome = journal.resolve_expulsion(target, now=7)
        assert outcome.new_state is AppState.DELISTED
        assert journal.curators[target].status is CuratorStatus.EXPELLED
        assert target not in [a.candidate["curator"] for a in journal.roster.list_contents()]

    def test_expelled_curator_cannot_review(self, make_journal):
        journal, proposer, target, v1, poll = self._setup(make_journal)
        journal.vote_on_expulsion(v1, poll, Direction.AGAINST, now=1)
        journal.resolve_expulsion(target, now=7)
        author = journal.ledger.open_account()
        journal.ledger.purchase_tokens(author, 300, 1)
        ms = journal.submit_manuscript(author, "a", now=7)
        with pytest.raises(errors.NotACurator):
            journal.submit_review(target, ms, score=5, now=8)


class TestReplay:
    def test_rebuilds_identical_state(self, make_journal):
        journal, (c1, c2, c3), author = make_journal(author_funds=600)
        a = journal.submit_manuscript(author, "a", now=0)
        b = journal.submit_manuscript(author, "b", now=1)
        review_and_vote(journal, c1, a, Direction.FOR, now=2)
        review_and_vote(journal, c2, b, Direction.AGAINST, now=2)
        journal.ledger.purchase_tokens(c3, 10, 1)
        poll = journal.propose_expulsion(c3, c1, now=3)
        journal.vote_on_expulsion(c2, poll, Direction.FOR, now=3)
        journal.decide(a, now=7)
        journal.decide(b, now=8)
        journal.resolve_expulsion(c1, now=10)

        rebuilt = replay(journal.ledger.log)
        assert rebuilt.state() == journal.ledger.state()
        assert rebuilt.log.to_jsonl() == journal.ledger.log.to_jsonl()

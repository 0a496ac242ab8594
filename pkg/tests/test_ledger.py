from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from tcr_journal import errors
from tcr_journal.ledger import AccountKind, EscrowPurpose, EscrowStatus, Ledger, as_fraction, split


class TestOpenAccount:
    def test_fresh_participant_has_zero_balance(self, ledger):
        acct = ledger.open_account(AccountKind.PARTICIPANT)
        assert ledger.balance(acct) == 0

    def test_second_treasury_rejected(self, ledger):
        ledger.open_account(AccountKind.TREASURY)
        with pytest.raises(errors.DuplicateTreasury):
            ledger.open_account(AccountKind.TREASURY)

    def test_ids_are_distinct(self, ledger):
        assert ledger.open_account() != ledger.open_account()


class TestPurchase:
    @pytest.mark.parametrize("fiat, rate, expected", [
        (300, 1.0, 300),
        (0, 1.0, 0),
        (10.5, 2.0, 21),
        ("0.3", 10, 3),  # exact decimal, no float drift
        (1, Fraction(1, 3), 0),
    ])
    def test_mints_floor_of_fiat_times_rate(self, ledger, fiat, rate, expected):
        acct = ledger.open_account()
        assert ledger.purchase_tokens(acct, fiat, rate) == expected
        assert ledger.balance(acct) == expected
        assert ledger.total_supply() == expected

    def test_unknown_account(self, ledger):
        with pytest.raises(errors.UnknownAccount):
            ledger.purchase_tokens("acct-99", 10, 1)

    @pytest.mark.parametrize("rate", [0, -1, 0.0])
    def test_non_positive_rate(self, ledger, rate):
        acct = ledger.open_account()
        with pytest.raises(errors.NonPositiveRate):
            ledger.purchase_tokens(acct, 10, rate)

    def test_mint_is_logged(self, ledger):
        acct = ledger.open_account()
        ledger.purchase_tokens(acct, 300, 1)
        record = ledger.log[-1]
        assert record["op"] == "purchase_tokens"
        assert record["resulting_total_supply"] == 300


class TestEscrow:
    def test_hold_full_balance(self, ledger):
        acct = ledger.open_account()
        ledger.purchase_tokens(acct, 300, 1)
        esc = ledger.hold_escrow(acct, 300, EscrowPurpose.APC_DEPOSIT)
        assert ledger.balance(acct) == 0
        assert ledger.escrow(esc).amount == 300
        assert ledger.escrow(esc).status is EscrowStatus.HELD

    def test_hold_more_than_balance(self, ledger):
        acct = ledger.open_account()
        ledger.purchase_tokens(acct, 100, 1)
        with pytest.raises(errors.InsufficientBalance):
            ledger.hold_escrow(acct, 101)
        assert ledger.balance(acct) == 100

    def test_hold_zero(self, ledger):
        acct = ledger.open_account()
        ledger.purchase_tokens(acct, 100, 1)
        with pytest.raises(errors.ZeroAmount):
            ledger.hold_escrow(acct, 0)

    def test_release_returns_amount(self, ledger):
        acct = ledger.open_account()
        ledger.purchase_tokens(acct, 300, 1)
        esc = ledger.hold_escrow(acct, 300)
        assert ledger.release_escrow(esc) == 300
        assert ledger.balance(acct) == 300
        assert ledger.escrow(esc).status is EscrowStatus.RELEASED

    def test_release_twice(self, ledger):
        acct = ledger.open_account()
        ledger.purchase_tokens(acct, 300, 1)
        esc = ledger.hold_escrow(acct, 300)
        ledger.release_escrow(esc)
        with pytest.raises(errors.NotHeld):
            ledger.release_escrow(esc)

    def test_release_forfeited(self, ledger):
        ledger.open_account(AccountKind.TREASURY)
        acct, winner = ledger.open_account(), ledger.open_account()
        ledger.purchase_tokens(acct, 50, 1)
        esc = ledger.hold_escrow(acct, 50)
        ledger.forfeit_and_distribute(esc, [winner], 0)
        with pytest.raises(errors.NotHeld):
            ledger.release_escrow(esc)


def _forfeit_setup(amount, n_winners):
    ledger = Ledger()
    treasury = ledger.open_account(AccountKind.TREASURY)
    owner = ledger.open_account()
    winners = [ledger.open_account() for _ in range(n_winners)]
    ledger.purchase_tokens(owner, amount, 1)
    esc = ledger.hold_escrow(owner, amount)
    return ledger, treasury, winners, esc


class TestForfeit:
    @pytest.mark.parametrize("amount, n, fee_fraction, fee, per_winner, remainder", [
        (300, 3, Fraction(1, 10), 30, 90, 0),
        (100, 4, Fraction(1, 10), 10, 22, 2),
        (50, 1, Fraction(0), 0, 50, 0),
    ])
    def test_split(self, amount, n, fee_fraction, fee, per_winner, remainder):
        ledger, treasury, winners, esc = _forfeit_setup(amount, n)
        dist = ledger.forfeit_and_distribute(esc, winners, fee_fraction)
        assert (dist.fee, dist.per_winner, dist.remainder, dist.winner_count) == (fee, per_winner, remainder, n)
        assert ledger.balance(treasury) == fee + remainder
        assert all(ledger.balance(w) == per_winner for w in winners)
        assert ledger.escrow(esc).status is EscrowStatus.FORFEITED
        assert ledger.total_supply() == amount

    def test_empty_winners(self):
        ledger, _, _, esc = _forfeit_setup(100, 0)
        with pytest.raises(errors.EmptyWinners):
            ledger.forfeit_and_distribute(esc, [], 0)

    def test_duplicate_winner(self):
        ledger, _, winners, esc = _forfeit_setup(100, 2)
        with pytest.raises(errors.DuplicateWinner):
            ledger.forfeit_and_distribute(esc, [winners[0], winners[0]], 0)
        assert ledger.escrow(esc).status is EscrowStatus.HELD

    def test_not_held(self):
        ledger, _, winners, esc = _forfeit_setup(100, 1)
        ledger.release_escrow(esc)
        with pytest.raises(errors.NotHeld):
            ledger.forfeit_and_distribute(esc, winners, 0)

    def test_fee_fraction_from_mapping(self):
        ledger, _, winners, esc = _forfeit_setup(300, 3)
        dist = ledger.forfeit_and_distribute(esc, winners, {"num": 1, "den": 10})
        assert dist.fee == 30

    @pytest.mark.parametrize("bad", [0.1, Fraction(11, 10), -1, {"num": 1}])
    def test_inexact_or_out_of_range_fraction(self, bad):
        with pytest.raises(errors.InvalidFraction):
            as_fraction(bad)


class TestTotalSupply:
    def test_fresh(self, ledger):
        assert ledger.total_supply() == 0

    def test_after_mint(self, ledger):
        ledger.purchase_tokens(ledger.open_account(), 300, 1)
        assert ledger.total_supply() == 300

    def test_mint_hold_forfeit(self, ledger):
        # replayed by hand: 300 minted, 100 moved to escrow, escrow paid to one winner
        ledger.open_account(AccountKind.TREASURY)
        acct, winner = ledger.open_account(), ledger.open_account()
        ledger.purchase_tokens(acct, 300, 1)
        esc = ledger.hold_escrow(acct, 100)
        ledger.forfeit_and_distribute(esc, [winner], 0)
        assert ledger.balance(acct) + ledger.balance(winner) == 300
        assert ledger.total_supply() == 300
        assert ledger.audit_supply() == 300


@given(amount=st.integers(min_value=0, max_value=10**12),
       n=st.integers(min_value=1, max_value=500),
       num=st.integers(min_value=0, max_value=1000),
       den=st.integers(min_value=1, max_value=1000))
def test_distribution_identity(amount, n, num, den):
    if num > den:
        num, den = den, num if num else 1
    fee_fraction = Fraction(num, den)
    fee, per_winner, remainder = split(amount, n, fee_fraction)
    assert fee + per_winner * n + remainder == amount
    assert 0 <= remainder < n
    assert fee == (amount * fee_fraction).__floor__()
    assert min(fee, per_winner, remainder) >= 0

"""Exact integer token accounting.

Balances and escrows are plain ``int`` token units. The only operation that
changes total supply is :meth:`Ledger.purchase_tokens`; everything else moves
tokens between balances, escrows and the treasury.
"""

from __future__ import annotations

import copy
import math
import threading
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from fractions import Fraction

from . import errors
from .events import EventLog, logged


class AccountKind(str, Enum):
    PARTICIPANT = "PARTICIPANT"
    TREASURY = "TREASURY"


class EscrowPurpose(str, Enum):
    APC_DEPOSIT = "APC_DEPOSIT"
    CHALLENGE_DEPOSIT = "CHALLENGE_DEPOSIT"
    GENERIC_DEPOSIT = "GENERIC_DEPOSIT"


class EscrowStatus(str, Enum):
    HELD = "HELD"
    RELEASED = "RELEASED"
    FORFEITED = "FORFEITED"


@dataclass
class Account:
    id: str
    kind: AccountKind
    balance: int = 0


@dataclass
class Escrow:
    id: str
    owner: str
    amount: int
    purpose: EscrowPurpose
    status: EscrowStatus = EscrowStatus.HELD


@dataclass(frozen=True)
class Distribution:
    source_escrow: str
    fee: int
    per_winner: int
    winner_count: int
    remainder: int
    winners: tuple[str, ...] = ()

    @property
    def amount(self) -> int:
        return self.fee + self.per_winner * self.winner_count + self.remainder


def as_fraction(value) -> Fraction:
    """Accept a Fraction, an int, a "1/10" string or a ``{"num", "den"}`` mapping."""
    if isinstance(value, dict):
        try:
            value = Fraction(int(value["num"]), int(value["den"]))
        except (KeyError, ValueError, ZeroDivisionError) as exc:
            raise errors.InvalidFraction(f"bad fraction {value!r}") from exc
    elif isinstance(value, float):
        raise errors.InvalidFraction("fee fractions must be exact; pass a Fraction or {num, den}")
    else:
        try:
            value = Fraction(value)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise errors.InvalidFraction(f"bad fraction {value!r}") from exc
    if not 0 <= value <= 1:
        raise errors.InvalidFraction(f"fraction {value} outside [0, 1]")
    return value


def split(amount: int, winner_count: int, fee_fraction: Fraction) -> tuple[int, int, int]:
    """Return ``(fee, per_winner, remainder)`` for an amount split among winners."""
    fee = amount * fee_fraction.numerator // fee_fraction.denominator
    per_winner = (amount - fee) // winner_count
    remainder = amount - fee - per_winner * winner_count
    return fee, per_winner, remainder


def _exact(value) -> Fraction:
    if isinstance(value, float):
        value = Decimal(repr(value))
    return Fraction(value)


class Ledger:
    """Accounts, escrows and the shared event log.

    All mutations go through methods decorated with :func:`logged`, which
    serialises them under one re-entrant lock. ``snapshot()`` returns a deep
    copy that readers may use from other threads.
    """

    def __init__(self) -> None:
        self.log = EventLog()
        self.accounts: dict[str, Account] = {}
        self.escrows: dict[str, Escrow] = {}
        self.treasury_id: str | None = None
        self.components: dict[str, object] = {}
        self.clock: int | None = None
        self.minted = 0
        # running totals behind total_supply(); audit_supply() recomputes them from scratch
        self._liquid = 0
        self._held = 0
        self._next_account = 0
        self._next_escrow = 0
        self._lock = threading.RLock()
        self._depth = 0

    # -- plumbing shared with registries and journals --

    def observe(self, now: int) -> None:
        """Reject timestamps that run backwards relative to earlier operations."""
        if self.clock is not None and now < self.clock:
            raise errors.ClockRegression(f"time {now} precedes last observed time {self.clock}")

    def advance(self, now: int) -> None:
        self.clock = now if self.clock is None else max(self.clock, now)

    def register(self, component) -> None:
        self.components[component.component_id] = component

    def account(self, account_id: str) -> Account:
        try:
            return self.accounts[account_id]
        except KeyError:
            raise errors.UnknownAccount(account_id) from None

    def escrow(self, escrow_id: str) -> Escrow:
        try:
            return self.escrows[escrow_id]
        except KeyError:
            raise errors.UnknownEscrow(escrow_id) from None

    def balance(self, account_id: str) -> int:
        return self.account(account_id).balance

    def held_by(self, account_id: str) -> int:
        return sum(e.amount for e in self.escrows.values()
                   if e.owner == account_id and e.status is EscrowStatus.HELD)

    def require_treasury(self) -> str:
        if self.treasury_id is None:
            raise errors.NoTreasury("no treasury account has been opened")
        return self.treasury_id

    # -- operations --

    @logged("open_account")
    def open_account(self, kind: AccountKind = AccountKind.PARTICIPANT) -> str:
        kind = AccountKind(kind)
        if kind is AccountKind.TREASURY and self.treasury_id is not None:
            raise errors.DuplicateTreasury("a treasury account already exists")
        self._next_account += 1
        account_id = f"acct-{self._next_account}"
        self.accounts[account_id] = Account(account_id, kind)
        if kind is AccountKind.TREASURY:
            self.treasury_id = account_id
        return account_id

    @logged("purchase_tokens")
    def purchase_tokens(self, account: str, fiat_amount, rate) -> int:
        acct = self.account(account)
        rate_q, fiat_q = _exact(rate), _exact(fiat_amount)
        if rate_q <= 0:
            raise errors.NonPositiveRate(f"rate must be positive, got {rate}")
        if fiat_q < 0:
            raise errors.NegativeAmount(f"fiat amount must be non-negative, got {fiat_amount}")
        tokens = math.floor(fiat_q * rate_q)
        acct.balance += tokens
        self.minted += tokens
        self._liquid += tokens
        return tokens

    @logged("transfer")
    def transfer(self, source: str, destination: str, amount: int) -> int:
        src, dst = self.account(source), self.account(destination)
        if amount < 0:
            raise errors.NegativeAmount(f"transfer amount must be non-negative, got {amount}")
        if src.balance < amount:
            raise errors.InsufficientBalance(f"{source} holds {src.balance}, needs {amount}")
        src.balance -= amount
        dst.balance += amount
        return amount

    @logged("hold_escrow")
    def hold_escrow(self, account: str, amount: int,
                    purpose: EscrowPurpose = EscrowPurpose.GENERIC_DEPOSIT) -> str:
        acct = self.account(account)
        purpose = EscrowPurpose(purpose)
        if amount < 0:
            raise errors.NegativeAmount(f"escrow amount must be non-negative, got {amount}")
        if amount == 0:
            raise errors.ZeroAmount("escrow amount must be positive")
        if acct.balance < amount:
            raise errors.InsufficientBalance(f"{account} holds {acct.balance}, needs {amount}")
        acct.balance -= amount
        self._liquid -= amount
        self._held += amount
        self._next_escrow += 1
        escrow_id = f"esc-{self._next_escrow}"
        self.escrows[escrow_id] = Escrow(escrow_id, account, amount, purpose)
        return escrow_id

    @logged("release_escrow")
    def release_escrow(self, escrow: str) -> int:
        esc = self.escrow(escrow)
        if esc.status is not EscrowStatus.HELD:
            raise errors.NotHeld(f"{escrow} is {esc.status.value}")
        owner = self.account(esc.owner)
        esc.status = EscrowStatus.RELEASED
        owner.balance += esc.amount
        self._held -= esc.amount
        self._liquid += esc.amount
        return esc.amount

    @logged("forfeit_and_distribute")
    def forfeit_and_distribute(self, escrow: str, winners: list[str], fee_fraction) -> Distribution:
        esc = self.escrow(escrow)
        fee_fraction = as_fraction(fee_fraction)
        winners = list(winners)
        if esc.status is not EscrowStatus.HELD:
            raise errors.NotHeld(f"{escrow} is {esc.status.value}")
        if not winners:
            raise errors.EmptyWinners("cannot distribute to an empty winner list")
        if len(set(winners)) != len(winners):
            raise errors.DuplicateWinner("winner list contains duplicates")
        accounts = [self.account(w) for w in winners]
        treasury = self.account(self.require_treasury())

        fee, per_winner, remainder = split(esc.amount, len(winners), fee_fraction)
        esc.status = EscrowStatus.FORFEITED
        treasury.balance += fee + remainder
        for acct in accounts:
            acct.balance += per_winner
        self._held -= esc.amount
        self._liquid += esc.amount
        return Distribution(escrow, fee, per_winner, len(winners), remainder, tuple(winners))

    # -- reads --

    def total_supply(self) -> int:
        """Sum of all balances plus all HELD escrows."""
        return self._liquid + self._held

    def audit_supply(self) -> int:
        """``total_supply()`` recomputed by scanning every account and escrow."""
        return (sum(a.balance for a in self.accounts.values())
                + sum(e.amount for e in self.escrows.values() if e.status is EscrowStatus.HELD))

    def snapshot(self) -> "Ledger":
        with self._lock:
            snap = copy.copy(self)
            snap.accounts = copy.deepcopy(self.accounts)
            snap.escrows = copy.deepcopy(self.escrows)
            snap.log = EventLog(list(self.log.records))
            snap.components = {}
            snap._lock = threading.RLock()
            return snap

    def state(self) -> dict:
        """Plain-data view of the whole engine, for replay comparisons."""
        from .events import encode

        return {
            "accounts": encode(self.accounts),
            "escrows": encode(self.escrows),
            "treasury": self.treasury_id,
            "clock": self.clock,
            "minted": self.minted,
            "components": {cid: c.state() for cid, c in sorted(self.components.items())},
        }

"""Exception hierarchy for the protocol engine.

Every rejected operation raises a ``ProtocolError`` subclass. Each class carries
a stable ``code`` string so callers (and the event log) can refer to a failure
without depending on the class object.
"""


class ProtocolError(Exception):
    code = "protocol-error"


# ledger

class UnknownAccount(ProtocolError):
    code = "unknown-account"


class UnknownEscrow(ProtocolError):
    code = "unknown-escrow"


class DuplicateTreasury(ProtocolError):
    code = "duplicate-treasury"


class NoTreasury(ProtocolError):
    code = "no-treasury"


class NonPositiveRate(ProtocolError):
    code = "non-positive-rate"


class NegativeAmount(ProtocolError):
    code = "negative-amount"


class InsufficientBalance(ProtocolError):
    code = "insufficient-balance"


class ZeroAmount(ProtocolError):
    code = "zero-amount"


class NotHeld(ProtocolError):
    code = "not-held"


class EmptyWinners(ProtocolError):
    code = "empty-winners"


class DuplicateWinner(ProtocolError):
    code = "duplicate-winner"


class InvalidFraction(ProtocolError):
    code = "invalid-fraction"


class ClockRegression(ProtocolError):
    code = "clock-regression"


# registry

class InvalidConfig(ProtocolError):
    code = "invalid-config"


class UnknownSubject(ProtocolError):
    code = "unknown-subject"


class DepositTooSmall(ProtocolError):
    code = "deposit-too-small"


class WindowClosed(ProtocolError):
    code = "window-closed"


class NotChallengeable(ProtocolError):
    code = "not-challengeable-state"


class AlreadyChallenged(ProtocolError):
    code = "already-challenged"


class NotACurator(ProtocolError):
    code = "not-a-curator"


class PollClosed(ProtocolError):
    code = "poll-closed"


class DuplicateVote(ProtocolError):
    code = "duplicate-vote"


class NotYetResolvable(ProtocolError):
    code = "not-yet-resolvable"


class AlreadyResolved(ProtocolError):
    code = "already-resolved"


# journal

class UnknownManuscript(ProtocolError):
    code = "unknown-manuscript"


class LimitExceeded(ProtocolError):
    code = "limit-exceeded"


class DuplicateReview(ProtocolError):
    code = "duplicate-review"


class DeadlinePassed(ProtocolError):
    code = "deadline-passed"


class SelfReview(ProtocolError):
    code = "self-review"


class WrongMode(ProtocolError):
    code = "wrong-mode"


class InvalidReview(ProtocolError):
    code = "invalid-review"


class NoReviewOnFile(ProtocolError):
    code = "no-review-on-file"


class AlreadyDecided(ProtocolError):
    code = "already-decided"


class AlreadyCurator(ProtocolError):
    code = "already-curator"


class PolicyForbidsOrigin(ProtocolError):
    code = "policy-forbids-origin"


class SelfExpulsion(ProtocolError):
    code = "self-expulsion"


# simulation

class SimulationFinished(ProtocolError):
    code = "simulation-finished"


class InvalidScenario(ProtocolError):
    """Raised with every field-level problem found, not just the first."""

    code = "invalid-scenario"

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))

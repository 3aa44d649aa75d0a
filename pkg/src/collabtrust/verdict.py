"""Majority-rule verdicts over comparison tallies, plus cross-round suspicion.

The flagging rule: a checkee is FLAGGED only when a strict majority of ALL
its checkers voted DISAGREE. Missing opinions count as abstentions, never as
disagreement, so packet loss alone can never flag a device; and a minority
of liars (at most floor((N-1)/2) in a group of N) can never frame an honest
one. Below the opinion quorum a round is INCONCLUSIVE rather than guessed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import ContractError


class Outcome(Enum):
    TRUSTED = "TRUSTED"
    FLAGGED = "FLAGGED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Tally:
    """Opinion counts about one checkee in one round."""

    agree: int
    disagree: int
    missing: int
    n_checkers: int

    def __post_init__(self):
        if min(self.agree, self.disagree, self.missing) < 0:
            raise ContractError("tally counts must be non-negative")
        if self.agree + self.disagree + self.missing != self.n_checkers:
            raise ContractError(
                f"tally {self.agree}+{self.disagree}+{self.missing} != {self.n_checkers} checkers"
            )


@dataclass(frozen=True)
class Verdict:
    checkee: int
    round: int
    outcome: Outcome
    tally: Tally


def default_quorum(n_checkers: int) -> int:
    """Minimum received opinions for a definite verdict: floor(n/2) + 1."""
    return n_checkers // 2 + 1


def compute_verdict(tally: Tally, quorum: int) -> Outcome:
    """Apply the majority rule to one tally. Pure function."""
    if not 1 <= quorum <= tally.n_checkers:
        raise ContractError(
            f"quorum {quorum} out of range [1, {tally.n_checkers}]"
        )
    if tally.agree + tally.disagree < quorum:
        return Outcome.INCONCLUSIVE
    # Strict majority of all checkers, counting missing as non-disagree.
    if 2 * tally.disagree > tally.n_checkers:
        return Outcome.FLAGGED
    return Outcome.TRUSTED


def oracle_outcome(agree: int, disagree: int, missing: int, quorum: int) -> Outcome:
    """Independent restatement of the rule, kept for cross-checking.

    Flag exactly when the disagreeing checkers outnumber everyone else
    (agreeing plus silent) combined; abstain below quorum. Deliberately
    avoids the `2*d > n` arithmetic used by compute_verdict.
    """
    if agree + disagree < quorum:
        return Outcome.INCONCLUSIVE
    if disagree > agree + missing:
        return Outcome.FLAGGED
    return Outcome.TRUSTED


def decision_table(n_checkers: int, quorum: int | None = None) -> list[tuple[int, int, int, Outcome]]:
    """Every (agree, disagree, missing) split of n_checkers with its outcome.

    Enumerated via oracle_outcome; the CLI exposes this table so the rule
    can be audited without reading code.
    """
    if n_checkers < 1:
        raise ContractError(f"need at least 1 checker, got {n_checkers}")
    q = default_quorum(n_checkers) if quorum is None else quorum
    rows = []
    for agree in range(n_checkers, -1, -1):
        for disagree in range(n_checkers - agree, -1, -1):
            missing = n_checkers - agree - disagree
            rows.append((agree, disagree, missing, oracle_outcome(agree, disagree, missing, q)))
    return rows


def minimum_corruption_to_frame(n: int) -> int:
    """Fewest lying checkers whose DISAGREEs can flag an honest checkee."""
    if n < 3:
        raise ContractError(f"group size must be >= 3, got {n}")
    return (n - 1) // 2 + 1


@dataclass
class SuspicionLedger:
    """Cross-round action state: per-device flag counts and exclusions."""

    flag_threshold: int = 1
    flags: dict[int, int] = field(default_factory=dict)
    excluded_at: dict[int, int] = field(default_factory=dict)
    first_flagged: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.flag_threshold < 1:
            raise ContractError(f"flag threshold must be >= 1, got {self.flag_threshold}")

    def flag_count(self, device: int) -> int:
        return self.flags.get(device, 0)

    def is_excluded(self, device: int) -> bool:
        return device in self.excluded_at

    def excluded_round(self, device: int) -> int | None:
        return self.excluded_at.get(device)

    def eligible(self, population: range | list[int]) -> list[int]:
        return [d for d in population if d not in self.excluded_at]


def update_suspicion(ledger: SuspicionLedger, v: Verdict) -> SuspicionLedger:
    """Fold one verdict into the ledger (mutates and returns it).

    Only FLAGGED changes anything; there is no decay or rehabilitation.
    """
    if v.outcome is not Outcome.FLAGGED:
        return ledger
    count = ledger.flags.get(v.checkee, 0) + 1
    ledger.flags[v.checkee] = count
    ledger.first_flagged.setdefault(v.checkee, v.round)
    if count >= ledger.flag_threshold and v.checkee not in ledger.excluded_at:
        ledger.excluded_at[v.checkee] = v.round
    return ledger

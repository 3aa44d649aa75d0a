"""Energy/traffic accounting and detection-quality statistics.

Energy is charged in abstract integer units and is exact: a device's total
is always e_op * ops + e_tx * sent + e_rx * received. Transmissions are
charged even when the channel drops the message (the radio still spent the
energy); receptions are charged for every delivery that reaches a device,
including ones the protocol then discards as late.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .adversary import AdversaryProfile, FaultKind, ReportingKind
from .errors import ContractError
from .verdict import Outcome, Verdict


@dataclass(frozen=True)
class EnergyModel:
    """Unit costs; defaults follow the simulator's canonical unit model."""

    e_op: int = 1
    e_tx: int = 2
    e_rx: int = 1

    def __post_init__(self):
        if min(self.e_op, self.e_tx, self.e_rx) < 0:
            raise ContractError("energy costs must be non-negative")


@dataclass(frozen=True)
class Execution:
    device: int
    op_count: int


@dataclass(frozen=True)
class Send:
    device: int


@dataclass(frozen=True)
class Delivery:
    device: int


@dataclass
class DeviceUsage:
    ops: int = 0
    sent: int = 0
    received: int = 0


class EnergyLedger:
    """Per-device usage counters plus the cost model to price them."""

    def __init__(self, model: EnergyModel, devices: range | list[int]):
        self.model = model
        self.usage: dict[int, DeviceUsage] = {d: DeviceUsage() for d in devices}

    def energy(self, device: int) -> int:
        u = self.usage[device]
        m = self.model
        return m.e_op * u.ops + m.e_tx * u.sent + m.e_rx * u.received

    def total_energy(self) -> int:
        return sum(self.energy(d) for d in self.usage)


def account(ledger: EnergyLedger, event: Execution | Send | Delivery) -> EnergyLedger:
    """Fold one billable event into the ledger (mutates and returns it)."""
    if isinstance(event, Execution):
        ledger.usage[event.device].ops += event.op_count
    elif isinstance(event, Send):
        ledger.usage[event.device].sent += 1
    elif isinstance(event, Delivery):
        ledger.usage[event.device].received += 1
    else:
        raise ContractError(f"unknown energy event {event!r}")
    return ledger


@dataclass
class TrafficCounters:
    """Message fate counts for one run; conservation is checked in tests."""

    sent: int = 0
    delivered: int = 0
    dropped: int = 0
    late: int = 0
    stray: int = 0
    in_flight: int = 0


def lossless_messages_per_round(n: int) -> int:
    """Closed form for a lossless round in a group of n.

    (n-1) challenge unicasts + (n-1) response unicasts + (n-1)^2 report
    unicasts = (n-1)(n+1).
    """
    return (n - 1) * (n + 1)


def is_stat_honest(profile: AdversaryProfile) -> bool:
    """A device whose verdicts count as disinterested: sound hardware, honest reports."""
    return profile.fault is FaultKind.HONEST and profile.reporting is ReportingKind.HONEST


@dataclass
class DetectionStats:
    detections: dict[int, int] = field(default_factory=dict)  # corrupt device -> first flagged round
    false_positives: int = 0
    inconclusive: int = 0
    outcome_counts: dict[Outcome, int] = field(default_factory=dict)


def detection_stats(
    verdicts: list[tuple[int, Verdict]],
    profiles: dict[int, AdversaryProfile],
) -> DetectionStats:
    """Score a completed run's verdict log against the ground-truth adversary map.

    `verdicts` holds (issuing device, verdict) pairs. Detection latency for a
    corrupt device is the first round an honest device flagged it; a false
    positive is any FLAGGED verdict whose checkee has a honest fault model.
    """
    stats = DetectionStats()
    for issuer, v in verdicts:
        stats.outcome_counts[v.outcome] = stats.outcome_counts.get(v.outcome, 0) + 1
        if v.outcome is Outcome.INCONCLUSIVE:
            stats.inconclusive += 1
        if v.outcome is not Outcome.FLAGGED:
            continue
        checkee_fault = profiles.get(v.checkee, AdversaryProfile()).fault
        if checkee_fault is FaultKind.HONEST:
            stats.false_positives += 1
        elif is_stat_honest(profiles.get(issuer, AdversaryProfile())):
            prior = stats.detections.get(v.checkee)
            if prior is None or v.round < prior:
                stats.detections[v.checkee] = v.round
    return stats

"""Per-device state machine for one checking round.

A round has one checkee and one challenge. The initiator derives operands
from the shared seed and unicasts the challenge to the rest of the group;
every receiver executes the routine through its own fault model; the checkee
broadcasts its output; each checker compares that output against its own
locally computed reference and broadcasts an AGREE/DISAGREE report; every
device (checkee included) tallies reports and concludes a verdict, either
when the tally is complete or at the round deadline.

Handlers are pure transitions (state, message) -> (state, outgoing messages);
the event loop owns delivery, loss and timing.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

from .adversary import (
    AdversaryProfile,
    Opinion,
    TrojanModel,
    apply_fault,
    choose_adversarial_operands,
    distort_opinion,
)
from .errors import ProtocolViolation
from .metrics import EnergyLedger, Execution, TrafficCounters, account
from .routines import OperandVector, RoutineSpec, execute, generate_operands
from .rng import SplitMix64
from .verdict import SuspicionLedger, Tally, Verdict, compute_verdict

if TYPE_CHECKING:
    from .simnet import GroupConfig


class Phase(Enum):
    IDLE = "IDLE"
    AWAIT_RESPONSE = "AWAIT_RESPONSE"
    AWAIT_REPORTS = "AWAIT_REPORTS"


@dataclass(frozen=True)
class Challenge:
    round: int
    initiator: int
    checkee: int
    spec_id: int
    ops: OperandVector
    challenge_id: int


@dataclass(frozen=True)
class Response:
    challenge_id: int
    responder: int
    output: int


@dataclass(frozen=True)
class ComparisonReport:
    challenge_id: int
    reporter: int
    checkee: int
    opinion: Opinion


Message = Challenge | Response | ComparisonReport


class DeviceState:
    """Everything one device knows; confined to the event loop that owns it."""

    __slots__ = (
        "id",
        "profile",
        "routine_order",
        "routines",
        "colluder_trojans",
        "rng",
        "suspicion",
        "energy",
        "counters",
        "group",
        "phase",
        "round",
        "checkee",
        "challenge",
        "reference",
        "pending_response",
        "opinions",
        "verdict_emitted",
    )

    def __init__(
        self,
        device_id: int,
        profile: AdversaryProfile,
        routine_order: list[RoutineSpec],
        rng: SplitMix64,
        suspicion: SuspicionLedger,
        counters: TrafficCounters,
        energy: EnergyLedger | None = None,
        colluder_trojans: dict[int, TrojanModel] | None = None,
    ):
        self.id = device_id
        self.profile = profile
        self.routine_order = routine_order
        self.routines = {spec.id: spec for spec in routine_order}
        self.colluder_trojans = colluder_trojans or {}
        self.rng = rng
        self.suspicion = suspicion
        self.energy = energy
        self.counters = counters
        self.group: GroupConfig | None = None
        self.phase = Phase.IDLE
        self.round: int | None = None
        self.checkee: int | None = None
        self.challenge: Challenge | None = None
        self.reference: int | None = None
        self.pending_response: Response | None = None
        self.opinions: dict[int, Opinion] = {}
        self.verdict_emitted = False

    @property
    def n_checkers(self) -> int:
        assert self.group is not None
        return len(self.group.members) - 1

    def _peers(self) -> list[int]:
        assert self.group is not None
        return [m for m in self.group.members if m != self.id]


def round_checkee(group: "GroupConfig", round_no: int) -> int:
    """Round-robin schedule: position round mod size. Common knowledge."""
    return group.members[round_no % len(group.members)]


def round_initiator(group: "GroupConfig", round_no: int) -> int:
    """The member after the checkee in group order."""
    return group.members[(round_no + 1) % len(group.members)]


def begin_round(state: DeviceState, round_no: int) -> None:
    """Advance the device's local round clock and clear per-round state.

    Rounds are synchronous: every group member knows the round number and
    therefore the scheduled checkee, even if it never sees the challenge.
    """
    assert state.group is not None
    state.round = round_no
    state.checkee = round_checkee(state.group, round_no)
    state.phase = Phase.IDLE
    state.challenge = None
    state.reference = None
    state.pending_response = None
    state.opinions = {}
    state.verdict_emitted = False


def _accept_challenge(state: DeviceState, ch: Challenge) -> list[tuple[int, Message]]:
    spec = state.routines[ch.spec_id]
    honest = execute(spec, ch.ops)
    out = apply_fault(state.profile, spec, ch.ops, honest)
    if state.energy is not None:
        account(state.energy, Execution(device=state.id, op_count=out.op_count))
    state.challenge = ch
    state.reference = out.value
    state.phase = Phase.AWAIT_RESPONSE
    if state.id == ch.checkee:
        # The checkee's "reference" is the output it must defend.
        state.phase = Phase.AWAIT_REPORTS
        response = Response(challenge_id=ch.challenge_id, responder=state.id, output=out.value)
        return [(peer, response) for peer in state._peers()]
    if state.pending_response is not None:
        # The checkee's answer overtook our challenge; compare it now.
        parked, state.pending_response = state.pending_response, None
        return handle_response(state, parked)
    return []


def on_round_start(
    state: DeviceState, round_no: int, shared_seed: int
) -> list[tuple[int, Message]]:
    """Initiator duty: build and unicast the round's challenge.

    The routine rotates through the catalog; operands come from the shared
    seed, then pass through the initiator's evasion policy if it is corrupt.
    """
    if state.group is None or state.round != round_no or state.phase is not Phase.IDLE:
        raise ProtocolViolation(
            f"device {state.id}: round start in phase {state.phase} round {state.round}"
        )
    if round_initiator(state.group, round_no) != state.id:
        raise ProtocolViolation(f"device {state.id} is not round {round_no}'s initiator")
    checkee = round_checkee(state.group, round_no)
    spec = state.routine_order[round_no % len(state.routine_order)]
    ops = generate_operands(shared_seed, round_no, checkee, spec)
    ops = choose_adversarial_operands(state.profile, ops, state.colluder_trojans, checkee)
    ch = Challenge(
        round=round_no,
        initiator=state.id,
        checkee=checkee,
        spec_id=spec.id,
        ops=ops,
        challenge_id=round_no,
    )
    outgoing: list[tuple[int, Message]] = [(peer, ch) for peer in state._peers()]
    # The initiator is a checker too; it processes the challenge locally
    # (never emitting a Response, since initiator != checkee).
    outgoing.extend(_accept_challenge(state, ch))
    return outgoing


def handle_check_request(state: DeviceState, ch: Challenge) -> list[tuple[int, Message]]:
    """Accept a challenge: compute through the local fault model and cache it.

    The checkee answers with a Response broadcast; checkers stay silent and
    keep their output as the private comparison reference (or, if the
    response already arrived, compare and report immediately).
    """
    if ch.round != state.round:
        state.counters.late += 1
        return []
    if state.challenge is not None and state.challenge.challenge_id == ch.challenge_id:
        return []  # duplicate
    return _accept_challenge(state, ch)


def handle_response(state: DeviceState, r: Response) -> list[tuple[int, ComparisonReport]]:
    """Compare the checkee's output to the local reference and broadcast a report.

    A response that beats this checker's own challenge copy through the
    network is parked and replayed once the challenge arrives, so random
    latencies never turn a valid answer into a stray.
    """
    if state.challenge is None:
        if (
            r.challenge_id == state.round
            and r.responder == state.checkee
            and state.id != state.checkee
        ):
            state.pending_response = r
            return []
        state.counters.stray += 1
        return []
    ch = state.challenge
    if r.challenge_id != ch.challenge_id or r.responder != ch.checkee:
        state.counters.stray += 1
        return []
    if state.id == ch.checkee:
        state.counters.stray += 1
        return []
    if state.id in state.opinions:
        return []  # duplicate response; report already sent
    assert state.reference is not None
    true_opinion = Opinion.AGREE if r.output == state.reference else Opinion.DISAGREE
    opinion = distort_opinion(state.profile, true_opinion, ch.checkee, state.rng)
    # Own opinion enters the local tally exactly once, as broadcast.
    # If every other report already arrived, the verdict waits for the
    # round deadline rather than being returned from this handler.
    state.opinions[state.id] = opinion
    state.phase = Phase.AWAIT_REPORTS
    report = ComparisonReport(
        challenge_id=r.challenge_id, reporter=state.id, checkee=ch.checkee, opinion=opinion
    )
    return [(peer, report) for peer in state._peers()]


def handle_report(state: DeviceState, rep: ComparisonReport) -> Verdict | None:
    """Tally a peer's opinion; conclude once every expected opinion is in.

    Devices that missed the challenge still tally: the round's checkee is
    known from the schedule, so reports are verifiable without it.
    """
    if state.group is None or rep.challenge_id != state.round:
        state.counters.late += 1
        return None
    if (
        rep.reporter not in state.group.members
        or rep.reporter == rep.checkee
        or rep.checkee != state.checkee
        or rep.reporter == state.id
    ):
        state.counters.stray += 1
        return None
    if rep.reporter in state.opinions:
        return None  # duplicate
    state.opinions[rep.reporter] = rep.opinion
    if state.verdict_emitted or len(state.opinions) < state.n_checkers:
        return None
    return _conclude(state)


def on_timeout(state: DeviceState, round_no: int) -> Verdict:
    """Round deadline: conclude from the partial tally, missing = abstention."""
    if state.round != round_no or state.verdict_emitted:
        raise ProtocolViolation(
            f"device {state.id}: timeout for round {round_no} with no pending verdict"
        )
    return _conclude(state)


def _conclude(state: DeviceState) -> Verdict:
    assert state.group is not None and state.round is not None and state.checkee is not None
    agree = sum(1 for o in state.opinions.values() if o is Opinion.AGREE)
    disagree = len(state.opinions) - agree
    tally = Tally(
        agree=agree,
        disagree=disagree,
        missing=state.n_checkers - len(state.opinions),
        n_checkers=state.n_checkers,
    )
    outcome = compute_verdict(tally, state.group.quorum)
    state.verdict_emitted = True
    state.phase = Phase.IDLE
    return Verdict(checkee=state.checkee, round=state.round, outcome=outcome, tally=tally)

"""Compromised-device models: functional faults, lying reporters, evading initiators.

A hardware fault (Trojan or always-wrong) lives in the device and applies to
every routine execution it performs, whether it is being checked or doing the
checking. Reporting and initiator policies are independent knobs on the same
profile, so one device can both compute wrong outputs and lie about others.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import ContractError
from .routines import OperandVector, RoutineOutput, RoutineSpec
from .rng import SplitMix64


class Opinion(Enum):
    AGREE = "AGREE"
    DISAGREE = "DISAGREE"

    def flipped(self) -> "Opinion":
        return Opinion.DISAGREE if self is Opinion.AGREE else Opinion.AGREE


class FaultKind(Enum):
    HONEST = "HONEST"
    ALWAYS_WRONG = "ALWAYS_WRONG"
    TROJAN = "TROJAN"


class PayloadKind(Enum):
    XOR = "XOR"
    CONST = "CONST"
    COMPLEMENT = "COMPLEMENT"


class ReportingKind(Enum):
    HONEST = "HONEST"
    FRAME = "FRAME"
    SHIELD = "SHIELD"
    RANDOM = "RANDOM"


class InitiatorKind(Enum):
    HONEST = "HONEST"
    EVADE = "EVADE"


@dataclass(frozen=True)
class TrojanModel:
    """Trigger predicate on one operand plus a payload transform of the output.

    The trigger fires when the inspected operand's bits under `mask` equal
    `match`; the chance of that under uniform operands is 2^-popcount(mask).
    """

    operand_index: int
    mask: int
    match: int
    payload: PayloadKind
    payload_value: int = 0

    def __post_init__(self):
        if self.operand_index < 0:
            raise ContractError(f"operand_index must be >= 0, got {self.operand_index}")
        if self.mask < 0 or self.match < 0:
            raise ContractError("trigger mask and match must be non-negative")
        if self.match & ~self.mask:
            raise ContractError(
                f"trigger match {self.match:#x} has bits outside mask {self.mask:#x}"
            )
        if self.payload in (PayloadKind.XOR, PayloadKind.CONST) and self.payload_value < 0:
            raise ContractError("payload value must be non-negative")

    def triggers(self, ops: OperandVector) -> bool:
        return (ops.values[self.operand_index] & self.mask) == self.match


@dataclass(frozen=True)
class AdversaryProfile:
    """What one device is allowed to do wrong.

    `targets` is the device's colluder/victim set, shared by whichever of the
    FRAME / SHIELD / EVADE policies are active. It never contains the device
    itself (enforced at scenario load, where the owner id is known).
    """

    fault: FaultKind = FaultKind.HONEST
    trojan: TrojanModel | None = None
    reporting: ReportingKind = ReportingKind.HONEST
    targets: frozenset[int] = frozenset()
    flip_probability: float = 0.0
    initiator_policy: InitiatorKind = InitiatorKind.HONEST

    def __post_init__(self):
        if self.fault is FaultKind.TROJAN and self.trojan is None:
            raise ContractError("TROJAN fault needs a TrojanModel")
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ContractError(
                f"flip probability must be in [0, 1], got {self.flip_probability}"
            )

    @property
    def is_fully_honest(self) -> bool:
        return (
            self.fault is FaultKind.HONEST
            and self.reporting is ReportingKind.HONEST
            and self.initiator_policy is InitiatorKind.HONEST
        )


HONEST_PROFILE = AdversaryProfile()


def apply_fault(
    profile: AdversaryProfile,
    spec: RoutineSpec,
    ops: OperandVector,
    honest: RoutineOutput,
) -> RoutineOutput:
    """Pass an honest routine output through the device's hardware fault.

    ALWAYS_WRONG complements every bit; a Trojan corrupts the output only
    when its trigger matches the inspected operand. op_count is preserved.
    """
    if profile.fault is FaultKind.HONEST:
        return honest
    mask = (1 << spec.width) - 1
    if profile.fault is FaultKind.ALWAYS_WRONG:
        return RoutineOutput(value=honest.value ^ mask, op_count=honest.op_count)
    model = profile.trojan
    assert model is not None
    if not model.triggers(ops):
        return honest
    if model.payload is PayloadKind.XOR:
        value = (honest.value ^ model.payload_value) & mask
    elif model.payload is PayloadKind.CONST:
        value = model.payload_value & mask
    else:  # COMPLEMENT
        value = honest.value ^ mask
    return RoutineOutput(value=value, op_count=honest.op_count)


def trigger_probability(model: TrojanModel, spec: RoutineSpec) -> Fraction:
    """Exact chance a uniform operand fires the trigger: 2^-popcount(mask)."""
    width_mask = (1 << spec.width) - 1
    if model.operand_index >= spec.arity:
        raise ContractError(
            f"trigger operand index {model.operand_index} out of range for arity {spec.arity}"
        )
    if model.mask & ~width_mask:
        raise ContractError(
            f"trigger mask {model.mask:#x} wider than routine width {spec.width}"
        )
    return Fraction(1, 1 << (model.mask & width_mask).bit_count())


def distort_opinion(
    profile: AdversaryProfile,
    true_opinion: Opinion,
    checkee: int,
    rng: SplitMix64,
) -> Opinion:
    """What the device reports instead of its honestly computed opinion."""
    if profile.reporting is ReportingKind.HONEST:
        return true_opinion
    if profile.reporting is ReportingKind.FRAME:
        return Opinion.DISAGREE if checkee in profile.targets else true_opinion
    if profile.reporting is ReportingKind.SHIELD:
        return Opinion.AGREE if checkee in profile.targets else true_opinion
    # RANDOM: flip with probability p from the device's own stream.
    if rng.next_float() < profile.flip_probability:
        return true_opinion.flipped()
    return true_opinion


def choose_adversarial_operands(
    profile: AdversaryProfile,
    honest_ops: OperandVector,
    colluder_trojans: dict[int, TrojanModel],
    checkee: int,
) -> OperandVector:
    """An EVADE initiator rewrites the challenge so a colluder's Trojan stays quiet.

    The inspected operand's masked bits are set to `match` with the lowest
    mask bit flipped, which is guaranteed not to equal `match`. A mask of 0
    (trigger always fires) cannot be evaded and the operands pass unchanged.
    """
    if profile.initiator_policy is not InitiatorKind.EVADE or checkee not in profile.targets:
        return honest_ops
    model = colluder_trojans.get(checkee)
    if model is None or model.mask == 0:
        return honest_ops
    lowest_bit = model.mask & -model.mask
    safe_bits = model.match ^ lowest_bit
    width_mask = (1 << honest_ops.width) - 1
    values = list(honest_ops.values)
    v = values[model.operand_index]
    values[model.operand_index] = (v & ~model.mask & width_mask) | safe_bits
    return OperandVector(values=tuple(values), width=honest_ops.width)

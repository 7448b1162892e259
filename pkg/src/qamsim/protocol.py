"""The SUBSET-SUM verification protocol.

An instance is a target S and values a_1..a_n; its tape encoding is the
binary strings joined by '#' (each block '#'-terminated).  The verifier
scans the tape left to right in a restart loop, encoding S into the second
amplitude of the register (each digit step scales by 1/3 on the surviving
branch, doubling the encoded number and adding the digit), encoding each
a_i into the third amplitude the same way, and, on the '#' that closes a
value block, either subtracting it from the running total (prover says
"select") or discarding it ("skip").  The surviving branch right before the
right endmarker is (1/3)^{|w|} * (1, S - T, 0) where T is the sum of the
selected values; the decision step then accepts on the first amplitude and
rejects on the second.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import QamError
from .exact import (
    IDENTITY,
    Mat3,
    OperationElement,
    OutcomeLabel,
    Superoperator,
    Vec3,
    initialize,
    mat3,
    mat_vec,
    scale_mat,
    vec3,
)
from .machine import INITIALIZE, INITIALIZED, OutcomeAction, VerifierSpec

LEFT_END = "¢"
RIGHT_END = "$"
SELECT = "select"
SKIP = "skip"
PROVER_SYMBOLS = (SELECT, SKIP)

#: Valid inputs look like S#a1#...#an# with every block a nonempty binary
#: string; at least one value block must follow the target block.
_FORM_RE = re.compile(r"(?:[01]+#){2,}")

_R = OutcomeLabel.MOVE_RIGHT
_C = OutcomeLabel.RESTART
_A = OutcomeLabel.ACCEPT
_J = OutcomeLabel.REJECT


def _op(name: str, *labeled_grids) -> Superoperator:
    """Build a superoperator whose element matrices are grid/3."""
    third = Fraction(1, 3)
    elements = tuple(
        OperationElement(scale_mat(third, mat3(grid)), label)
        for label, grid in labeled_grids
    )
    return Superoperator(name, elements)


# Target-encoding digit steps: the surviving branch doubles the number held
# in the second amplitude and adds the digit read.
ENCODE_TARGET_0 = _op(
    "encode_target_0",
    (_R, [[1, 0, 0], [0, 2, 0], [0, 0, 1]]),
    (_C, [[2, 0, -2], [2, 0, 2], [0, 2, 0]]),
    (_C, [[0, 1, 0], [0, 0, 0], [0, 0, 0]]),
)
ENCODE_TARGET_1 = _op(
    "encode_target_1",
    (_R, [[1, 0, 0], [1, 2, 0], [0, 0, 1]]),
    (_C, [[2, -1, 0], [1, 0, 2], [1, 0, -2]]),
    (_C, [[1, 0, 0], [0, 2, 0], [0, 0, 0]]),
)
# The '#' closing the target block: pure scaling, no mixing.
TARGET_BOUNDARY = _op(
    "target_boundary",
    (_R, [[1, 0, 0], [0, 1, 0], [0, 0, 1]]),
    (_C, [[2, 0, 0], [0, 2, 0], [0, 0, 2]]),
    (_C, [[2, 0, 0], [0, 2, 0], [0, 0, 2]]),
)
# Value-encoding digit steps: same doubling recurrence on the third amplitude.
ENCODE_VALUE_0 = _op(
    "encode_value_0",
    (_R, [[1, 0, 0], [0, 1, 0], [0, 0, 2]]),
    (_C, [[2, 2, 0], [2, -2, 0], [0, 0, 2]]),
    (_C, [[0, 0, 1], [0, 0, 0], [0, 0, 0]]),
)
ENCODE_VALUE_1 = _op(
    "encode_value_1",
    (_R, [[1, 0, 0], [0, 1, 0], [1, 0, 2]]),
    (_C, [[2, 0, -1], [1, 2, 0], [1, -2, 0]]),
    (_C, [[1, 0, 0], [0, 0, 2], [0, 0, 0]]),
)
# The '#' closing a value block, when the prover selected the value:
# subtract the third amplitude from the second and clear it.
SUBTRACT_SELECTED = _op(
    "subtract_selected",
    (_R, [[1, 0, 0], [0, 1, -1], [0, 0, 0]]),
    (_C, [[0, -1, 1], [2, 1, -1], [2, -1, 1]]),
    (_C, [[0, 2, 2], [0, 0, 0], [0, 0, 0]]),
    (_C, [[0, 1, 0], [0, 0, 1], [0, 0, 0]]),
)
# Same boundary when the value was skipped: just clear the third amplitude.
DISCARD_SKIPPED = _op(
    "discard_skipped",
    (_R, [[1, 0, 0], [0, 1, 0], [0, 0, 0]]),
    (_C, [[2, -2, 0], [2, 2, 0], [0, 0, 3]]),
)
# The decision step on the right endmarker.
DECIDE = _op(
    "decide",
    (_A, [[1, 0, 0], [0, 0, 0], [0, 0, 0]]),
    (_J, [[0, 0, 0], [0, 3, 0], [0, 0, 0]]),
    (_C, [[2, 0, 0], [2, 0, 0], [0, 0, 3]]),
)

#: The protocol's eight quantum operations, in scan order.
PROTOCOL_OPERATORS = (
    ENCODE_TARGET_0,
    ENCODE_TARGET_1,
    TARGET_BOUNDARY,
    ENCODE_VALUE_0,
    ENCODE_VALUE_1,
    SUBTRACT_SELECTED,
    DISCARD_SKIPPED,
    DECIDE,
)

# Classical bridge into the communication state: the verifier cannot apply a
# value-boundary operator until the prover has spoken, and a communication
# state applies no quantum operation, so the first visit to a value '#'
# applies the identity and stays put.
PASS_THROUGH = Superoperator("pass_through", (OperationElement(IDENTITY, _R),))


@dataclass(frozen=True)
class Instance:
    """A SUBSET-SUM problem: does some subset of `values` sum to `target`?"""

    target: int
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) < 1:
            raise ValueError("an instance needs at least one value")
        if self.target < 0 or any(a < 0 for a in self.values):
            raise ValueError("target and values must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.values)


#: A claimed witness: selection flag for each value, in order.
WitnessSubset = tuple[bool, ...]


def selected_sum(inst: Instance, selection) -> int:
    """Sum of the selected values (the T of the closed forms)."""
    selection = tuple(selection)
    if len(selection) != inst.n:
        raise ValueError(f"selection length {len(selection)} != n={inst.n}")
    return sum(a for a, keep in zip(inst.values, selection) if keep)


def validate_form(s: str) -> bool:
    """Full-string match against ([01]+#)([01]+#)+, the shape every real
    instance encoding has.  Inputs failing this are rejected outright,
    before any quantum step."""
    return _FORM_RE.fullmatch(s) is not None


def encode_instance(inst: Instance) -> str:
    """Tape text for an instance: MSB-first binary blocks, '#'-terminated.

    Zero encodes as "0"; endmarkers are implicit.
    """
    blocks = [format(inst.target, "b")] + [format(a, "b") for a in inst.values]
    return "#".join(blocks) + "#"


def decode_tape(tape: str) -> Instance:
    """Inverse of encode_instance up to leading zeros."""
    if not validate_form(tape):
        raise ValueError(f"not a valid instance tape: {tape!r}")
    blocks = tape.split("#")[:-1]
    return Instance(int(blocks[0], 2), tuple(int(b, 2) for b in blocks[1:]))


def tape_of(inst: Instance) -> str:
    return encode_instance(inst)


def with_endmarkers(tape: str) -> str:
    return LEFT_END + tape + RIGHT_END


def default_step_cap(tape: str) -> int:
    """Generous bound on quantum steps in one pass: one per tape cell plus
    one per value boundary (the classical bridge), with slack."""
    return 2 * len(tape) + 8

# Verifier control states.
BOOT = "boot"
READ_TARGET = "read_target"
READ_VALUE = "read_value"
CONSULT_PROVER = "consult_prover"
SUBTRACT_VALUE = "subtract_value"
DISCARD_VALUE = "discard_value"
HALT_ACCEPT = "halt_accept"
HALT_REJECT = "halt_reject"


def build_spec() -> VerifierSpec:
    """The verifier machine for the protocol.

    Phases: initialize on the left endmarker; encode the target (digit
    operators, then the target boundary); for each value, encode its digits,
    then stop on its '#', ask the prover, and apply the selected/skipped
    boundary operator; decide on the right endmarker.  Every restart outcome
    returns to the boot state.
    """
    operators = {
        (BOOT, LEFT_END): INITIALIZE,
        (READ_TARGET, "0"): ENCODE_TARGET_0,
        (READ_TARGET, "1"): ENCODE_TARGET_1,
        (READ_TARGET, "#"): TARGET_BOUNDARY,
        (READ_VALUE, "0"): ENCODE_VALUE_0,
        (READ_VALUE, "1"): ENCODE_VALUE_1,
        (READ_VALUE, "#"): PASS_THROUGH,
        (READ_VALUE, RIGHT_END): DECIDE,
        (SUBTRACT_VALUE, "#"): SUBTRACT_SELECTED,
        (DISCARD_VALUE, "#"): DISCARD_SKIPPED,
    }
    transitions = {
        (BOOT, LEFT_END, INITIALIZED): (READ_TARGET, OutcomeAction.MOVE_RIGHT),
        (READ_VALUE, "#", _R): (CONSULT_PROVER, OutcomeAction.STAY),
        (READ_VALUE, RIGHT_END, _A): (HALT_ACCEPT, OutcomeAction.ACCEPT),
        (READ_VALUE, RIGHT_END, _J): (HALT_REJECT, OutcomeAction.REJECT),
        (READ_VALUE, RIGHT_END, _C): (BOOT, OutcomeAction.RESTART),
    }
    for state, symbol, nxt in [
        (READ_TARGET, "0", READ_TARGET),
        (READ_TARGET, "1", READ_TARGET),
        (READ_TARGET, "#", READ_VALUE),
        (READ_VALUE, "0", READ_VALUE),
        (READ_VALUE, "1", READ_VALUE),
        (SUBTRACT_VALUE, "#", READ_VALUE),
        (DISCARD_VALUE, "#", READ_VALUE),
    ]:
        transitions[(state, symbol, _R)] = (nxt, OutcomeAction.MOVE_RIGHT)
        transitions[(state, symbol, _C)] = (BOOT, OutcomeAction.RESTART)
    comm_transitions = {
        (CONSULT_PROVER, "#", SELECT): (SUBTRACT_VALUE, OutcomeAction.STAY),
        (CONSULT_PROVER, "#", SKIP): (DISCARD_VALUE, OutcomeAction.STAY),
    }
    return VerifierSpec(
        alphabet=frozenset({LEFT_END, "0", "1", "#", RIGHT_END}),
        reading_states=frozenset(
            {BOOT, READ_TARGET, READ_VALUE, SUBTRACT_VALUE, DISCARD_VALUE}
        ),
        communication_states=frozenset({CONSULT_PROVER}),
        halting_states=frozenset({HALT_ACCEPT, HALT_REJECT}),
        start_state=BOOT,
        operators=operators,
        transitions=transitions,
        comm_transitions=comm_transitions,
    )


def responses_from_selection(selection) -> tuple[str, ...]:
    return tuple(SELECT if keep else SKIP for keep in selection)


class HonestProver:
    """Fixed strategy answering from a claimed witness subset, identically
    in every pass."""

    def __init__(self, inst: Instance, witness):
        witness = tuple(witness)
        if len(witness) != inst.n:
            raise ValueError(f"witness length {len(witness)} != n={inst.n}")
        self.instance = inst
        self.witness = witness

    def __call__(self, pass_index: int, event_index: int, outcome_history=()) -> str:
        if not 0 <= event_index < len(self.witness):
            raise ValueError(f"no value with index {event_index}")
        return SELECT if self.witness[event_index] else SKIP

    def responses(self) -> tuple[str, ...]:
        return responses_from_selection(self.witness)


def honest_prover(inst: Instance, witness) -> HonestProver:
    return HonestProver(inst, witness)


def _continue_matrix(sop: Superoperator) -> Mat3:
    for el in sop.elements:
        if el.label is _R:
            return el.matrix
    raise QamError(f"{sop.name} has no continuing element")  # pragma: no cover


class TraceStep:
    """One symbol of a survivor trace: the operator applied and the
    unnormalized register state after it."""

    __slots__ = ("symbol", "operator", "state")

    def __init__(self, symbol: str, operator: str, state: Vec3):
        self.symbol = symbol
        self.operator = operator
        self.state = state


def trace_survivor(tape: str, selection) -> list[TraceStep]:
    """Follow the unique surviving branch from the left endmarker through
    the last '#', one step per tape symbol.

    Applies the actual continue-branch matrices (not the closed form) and
    checks on the way that the third amplitude is cleared at every value
    boundary.  Raises ValueError on tapes failing the form check.
    """
    if not validate_form(tape):
        raise ValueError(f"not a valid instance tape: {tape!r}")
    inst = decode_tape(tape)
    selection = tuple(selection)
    if len(selection) != inst.n:
        raise ValueError(f"selection length {len(selection)} != n={inst.n}")
    state = initialize()
    steps: list[TraceStep] = []
    in_target = True
    value_idx = 0
    for symbol in tape:
        if in_target:
            if symbol == "#":
                op = TARGET_BOUNDARY
                in_target = False
            else:
                op = ENCODE_TARGET_0 if symbol == "0" else ENCODE_TARGET_1
        else:
            if symbol == "#":
                op = SUBTRACT_SELECTED if selection[value_idx] else DISCARD_SKIPPED
                value_idx += 1
            else:
                op = ENCODE_VALUE_0 if symbol == "0" else ENCODE_VALUE_1
        state = mat_vec(_continue_matrix(op), state)
        if symbol == "#" and not in_target and state[2] != 0:
            raise QamError(f"third amplitude not cleared after value boundary: {state}")
        steps.append(TraceStep(symbol, op.name, state))
    return steps


def trace_state(tape: str, selection) -> Vec3:
    """The unnormalized register state right before the right endmarker,
    obtained by walking the surviving branch symbol by symbol."""
    return trace_survivor(tape, selection)[-1].state


def closed_form_state(tape: str, selection) -> Vec3:
    """What the surviving state must be: (1/3)^{|w|} * (1, S - T, 0),
    computed from the decoded integers alone (no matrices)."""
    inst = decode_tape(tape)
    gap = inst.target - selected_sum(inst, selection)
    unit = Fraction(1, 3 ** len(tape))
    return vec3(unit, unit * gap, 0)

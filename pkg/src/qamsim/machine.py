"""Generic verifier engine for Arthur-Merlin games driven by a small quantum
register.

A verifier spec couples classical control (reading, communication, and
halting states) with a per-(state, symbol) table of quantum operations.  One
"pass" scans the tape from the left endmarker; measurement outcomes drive
classical transitions; Accept/Reject end the protocol and Restart abandons
the pass (head back to the left endmarker, register re-initialized there).

`run_pass_exact` enumerates the whole branch tree of one pass with exact
rational weights.  `sample_pass` draws a single trajectory using integer
weights only, so its branch distribution is exact as well.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Callable, Mapping, Sequence, Union

from .errors import ConfigurationError, ProtocolError
from .exact import (
    OutcomeLabel,
    Superoperator,
    Vec3,
    apply,
    check_completeness,
    initialize,
    squared_norm,
    vec3,
)


class OutcomeAction(Enum):
    """Classical action taken after an outcome is observed."""

    MOVE_RIGHT = "move_right"
    MOVE_LEFT = "move_left"
    STAY = "stay"
    RESTART = "restart"
    ACCEPT = "accept"
    REJECT = "reject"


#: Actions that end the current pass.
TERMINAL_ACTIONS = frozenset(
    {OutcomeAction.RESTART, OutcomeAction.ACCEPT, OutcomeAction.REJECT}
)


class _InitializeOperator:
    """Sentinel operator-table entry: reset the register to (1, 0, 0)."""

    def __repr__(self):  # pragma: no cover - cosmetic
        return "INITIALIZE"


INITIALIZE = _InitializeOperator()

#: Outcome key produced by the initialize operator (it has a single outcome).
INITIALIZED = "initialized"

#: Keys under which transitions are looked up: a measurement label or the
#: initialize outcome.
OutcomeKey = Union[OutcomeLabel, str]

#: A prover strategy maps (pass index, communication-event index, outcome
#: history of the current pass so far) to a prover symbol.
ProverStrategy = Callable[[int, int, tuple], str]


def strategy_for_pass(strategy: ProverStrategy, pass_index: int):
    """Bind a cross-pass strategy to one pass, giving the
    (event index, history) callable `sample_pass` accepts."""
    return lambda event_index, history: strategy(pass_index, event_index, history)


@dataclass(frozen=True)
class VerifierSpec:
    """Immutable machine description.

    `operators` maps (reading state, symbol) to the superoperator applied
    there, or to INITIALIZE.  `transitions` maps (reading state, symbol,
    outcome key) to (next state, action).  `comm_transitions` maps
    (communication state, symbol, prover symbol) to (next state, action);
    a communication state consumes exactly one prover symbol per visit and
    applies no quantum operation.
    """

    alphabet: frozenset[str]
    reading_states: frozenset[str]
    communication_states: frozenset[str]
    halting_states: frozenset[str]
    start_state: str
    operators: Mapping[tuple[str, str], object]
    transitions: Mapping[tuple[str, str, OutcomeKey], tuple[str, OutcomeAction]]
    comm_transitions: Mapping[tuple[str, str, str], tuple[str, OutcomeAction]]

    def __post_init__(self):
        groups = (self.reading_states, self.communication_states, self.halting_states)
        for i, a in enumerate(groups):
            for b in groups[i + 1:]:
                if a & b:
                    raise ConfigurationError(f"state partition overlaps: {sorted(a & b)}")
        if self.start_state not in self.reading_states | self.communication_states:
            raise ConfigurationError(f"unknown start state {self.start_state!r}")
        for (state, _sym), op in self.operators.items():
            if state not in self.reading_states:
                raise ConfigurationError(f"operator table entry for non-reading state {state!r}")
            if op is not INITIALIZE and not check_completeness(op):
                raise ConfigurationError(f"superoperator {op.name!r} fails the completeness relation")
        for (state, _sym, _out) in self.transitions:
            if state in self.halting_states:
                raise ConfigurationError(f"halting state {state!r} has an outgoing transition")
        for (state, _sym, _msg) in self.comm_transitions:
            if state not in self.communication_states:
                raise ConfigurationError(f"communication transition on non-communication state {state!r}")

    def transition(self, state, symbol, outcome=None, prover_symbol=None):
        """Unified transition lookup; raises ConfigurationError when the
        spec has no entry for the observed situation."""
        if prover_symbol is not None:
            key = (state, symbol, prover_symbol)
            if key not in self.comm_transitions:
                raise ConfigurationError(f"no communication transition for {key!r}")
            return self.comm_transitions[key]
        key = (state, symbol, outcome)
        if key not in self.transitions:
            raise ConfigurationError(f"no transition for {key!r}")
        return self.transitions[key]


@dataclass(frozen=True)
class PassAnalysis:
    """Exact outcome masses of one pass.

    `residual` is the mass left unresolved at the step cap (two-way specs
    may branch forever); the four fields always sum to exactly 1.
    """

    p_accept: Fraction
    p_reject: Fraction
    p_restart: Fraction
    residual: Fraction = Fraction(0)

    def __post_init__(self):
        total = self.p_accept + self.p_reject + self.p_restart + self.residual
        if total != 1:
            raise ValueError(f"pass masses must sum to 1 exactly, got {total}")


@dataclass(frozen=True)
class Verdict:
    """Overall protocol outcome across the restart loop.

    When no pass mass ever halts (p_accept + p_reject = 0) the protocol
    never terminates: `halts` is False and `expected_passes` is None.
    """

    overall_accept: Fraction
    overall_reject: Fraction
    expected_passes: Fraction | None
    halts: bool = True


@dataclass
class _Node:
    state: str
    pos: int
    vec: Vec3
    scale: Fraction
    steps: int
    resp_idx: int


def run_pass_exact(
    spec: VerifierSpec,
    tape: str,
    prover_responses: Sequence[str],
    step_cap: int,
) -> PassAnalysis:
    """Enumerate the full branch tree of one pass, exactly.

    The tape must include both endmarkers.  Each branch carries an
    unnormalized register vector plus a scale factor; the absolute
    probability of a branch is scale * squared_norm(vector).  Quantum steps
    count toward `step_cap`; mass still alive at the cap is reported as
    residual.  Communication steps consume one entry of `prover_responses`
    (per branch, in event order) and apply no operator.
    """
    if step_cap < 1:
        raise ValueError("step_cap must be positive")
    accept = reject = restart = residual = Fraction(0)
    stack = [_Node(spec.start_state, 0, initialize(), Fraction(1), 0, 0)]

    def settle(action, next_state, node, vec, scale, resp_idx):
        nonlocal accept, reject, restart
        if action is OutcomeAction.ACCEPT:
            accept += scale * squared_norm(vec)
        elif action is OutcomeAction.REJECT:
            reject += scale * squared_norm(vec)
        elif action is OutcomeAction.RESTART:
            restart += scale * squared_norm(vec)
        else:
            pos = node.pos
            if action is OutcomeAction.MOVE_RIGHT:
                pos += 1
            elif action is OutcomeAction.MOVE_LEFT:
                pos -= 1
            if not 0 <= pos < len(tape):
                raise ConfigurationError(f"head moved off the tape at position {pos}")
            stack.append(_Node(next_state, pos, vec, scale, node.steps, resp_idx))

    while stack:
        node = stack.pop()
        symbol = tape[node.pos]
        if node.state in spec.communication_states:
            if node.resp_idx >= len(prover_responses):
                raise ProtocolError(
                    f"prover responses exhausted at event {node.resp_idx} in state {node.state!r}"
                )
            msg = prover_responses[node.resp_idx]
            nxt, action = spec.transition(node.state, symbol, prover_symbol=msg)
            settle(action, nxt, node, node.vec, node.scale, node.resp_idx + 1)
            continue

        if node.steps >= step_cap:
            residual += node.scale * squared_norm(node.vec)
            continue
        key = (node.state, symbol)
        if key not in spec.operators:
            raise ConfigurationError(f"no operator-table entry for {key!r}")
        op = spec.operators[key]
        node.steps += 1
        if op is INITIALIZE:
            mass = node.scale * squared_norm(node.vec)
            if mass == 0:
                continue
            nxt, action = spec.transition(node.state, symbol, outcome=INITIALIZED)
            settle(action, nxt, node, initialize(), mass, node.resp_idx)
            continue
        for label, post, weight in apply(op, node.vec):
            if weight == 0:
                continue
            nxt, action = spec.transition(node.state, symbol, outcome=label)
            settle(action, nxt, node, post, node.scale, node.resp_idx)

    return PassAnalysis(accept, reject, restart, residual)


def run_protocol_exact(per_pass: PassAnalysis) -> Verdict:
    """Collapse the restart loop of identically distributed passes.

    Restart mass feeds the next pass, so overall acceptance is the geometric
    series a + ar' + ar'^2 + ... = a / (a + r) for per-pass accept mass a,
    reject mass r, restart mass r' = 1 - a - r.  Expected number of passes
    is 1 / (a + r).
    """
    if per_pass.residual != 0:
        raise ValueError(f"cannot analyze a pass with unresolved mass {per_pass.residual}")
    halt = per_pass.p_accept + per_pass.p_reject
    if halt == 0:
        return Verdict(Fraction(0), Fraction(0), None, halts=False)
    return Verdict(
        per_pass.p_accept / halt,
        per_pass.p_reject / halt,
        1 / halt,
        halts=True,
    )


# --- sampling -------------------------------------------------------------
#
# A sampled step picks branch i with probability |Ei v|^2 / sum_j |Ej v|^2.
# Scaling every element of a superoperator to a common integer denominator
# makes those weights plain integers, so `Random.randrange` samples the
# branch distribution exactly; no floating point is involved anywhere.

_IntVec = tuple[int, int, int]


@lru_cache(maxsize=None)
def _integer_form(sop: Superoperator):
    """Element matrices scaled to a common denominator, as integer grids."""
    den = 1
    for el in sop.elements:
        for row in el.matrix:
            for x in row:
                den = lcm(den, x.denominator)
    mats = tuple(
        tuple(tuple(int(x * den) for x in row) for row in el.matrix)
        for el in sop.elements
    )
    labels = tuple(el.label for el in sop.elements)
    return mats, labels


def _int_mat_vec(m, v: _IntVec) -> _IntVec:
    return (
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    )


def _sample_int_step(sop: Superoperator, vec: _IntVec, rng: random.Random):
    mats, labels = _integer_form(sop)
    posts = [_int_mat_vec(m, vec) for m in mats]
    weights = [p[0] * p[0] + p[1] * p[1] + p[2] * p[2] for p in posts]
    total = sum(weights)
    if total == 0:
        raise ConfigurationError(f"all branches of {sop.name!r} have zero weight")
    r = rng.randrange(total)
    acc = 0
    for i, w in enumerate(weights):
        acc += w
        if r < acc:
            return i, labels[i], posts[i]
    raise AssertionError("unreachable")  # pragma: no cover


def sample_step(sop: Superoperator, state: Vec3, rng: random.Random):
    """Sample one measurement outcome of applying `sop` to `state`.

    Returns (element index, label).  The draw is exact: branch i is chosen
    with probability weight_i / total via integer arithmetic.
    """
    state = vec3(*state)
    den = lcm(state[0].denominator, state[1].denominator, state[2].denominator)
    ivec = (int(state[0] * den), int(state[1] * den), int(state[2] * den))
    idx, label, _post = _sample_int_step(sop, ivec, rng)
    return idx, label


def _as_rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def sample_pass(
    spec: VerifierSpec,
    tape: str,
    prover_responses,
    seed,
    step_cap: int | None = None,
    on_outcome: Callable[[OutcomeKey], None] | None = None,
) -> tuple[list[OutcomeKey], OutcomeAction]:
    """Sample a single pass trajectory; deterministic given the seed.

    `prover_responses` is either a sequence of symbols or a callable
    (event index, outcome history) -> symbol, which lets an interactive
    prover answer mid-pass.  `on_outcome` is invoked after every quantum
    step with the observed outcome key (this is the broadcast channel the
    prover is entitled to).  Returns the outcome sequence and the terminal
    action; raises ConfigurationError if `step_cap` quantum steps pass
    without the pass terminating.
    """
    rng = _as_rng(seed)
    state = spec.start_state
    pos = 0
    vec: _IntVec = (1, 0, 0)
    steps = 0
    resp_idx = 0
    history: list[OutcomeKey] = []
    if callable(prover_responses):
        ask = prover_responses
    else:
        responses = list(prover_responses)

        def ask(i, _hist):
            if i >= len(responses):
                raise ProtocolError(f"prover responses exhausted at event {i}")
            return responses[i]

    while True:
        symbol = tape[pos]
        if state in spec.communication_states:
            msg = ask(resp_idx, tuple(history))
            resp_idx += 1
            nxt, action = spec.transition(state, symbol, prover_symbol=msg)
        else:
            if step_cap is not None and steps >= step_cap:
                raise ConfigurationError(f"pass did not terminate within {step_cap} quantum steps")
            key = (state, symbol)
            if key not in spec.operators:
                raise ConfigurationError(f"no operator-table entry for {key!r}")
            op = spec.operators[key]
            steps += 1
            if op is INITIALIZE:
                vec = (1, 0, 0)
                outcome: OutcomeKey = INITIALIZED
            else:
                _idx, outcome, vec = _sample_int_step(op, vec, rng)
            history.append(outcome)
            if on_outcome is not None:
                on_outcome(outcome)
            nxt, action = spec.transition(state, symbol, outcome=outcome)
        if action in TERMINAL_ACTIONS:
            return history, action
        state = nxt
        if action is OutcomeAction.MOVE_RIGHT:
            pos += 1
        elif action is OutcomeAction.MOVE_LEFT:
            pos -= 1
        if not 0 <= pos < len(tape):
            raise ConfigurationError(f"head moved off the tape at position {pos}")

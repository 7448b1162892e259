"""Exact protocol-level probability analysis.

Per-pass probabilities are computed twice, independently: once from the
closed forms

    p_accept = (1/3)^{2|w|+2}
    p_reject = (1/3)^{2|w|+2} * (3S - 3T)^2

and once by exhaustive branch enumeration through the machine engine.  Any
disagreement aborts.  Protocol verdicts, adversarial soundness sweeps, the
classical brute-force oracle, expected running time, and sequential error
amplification all build on that.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import ConsistencyError, GuardError
from .machine import PassAnalysis, Verdict, run_pass_exact, run_protocol_exact
from .protocol import (
    Instance,
    WitnessSubset,
    build_spec,
    default_step_cap,
    encode_instance,
    responses_from_selection,
    selected_sum,
    with_endmarkers,
)

#: Enumerating 2^n selections or subsets is refused above this many values.
SELECTION_GUARD = 24

_spec_cache = None


def _spec():
    global _spec_cache
    if _spec_cache is None:
        _spec_cache = build_spec()
    return _spec_cache


def closed_form_pass(inst: Instance, selection) -> PassAnalysis:
    """Per-pass masses straight from the closed forms, no simulation."""
    w = len(encode_instance(inst))
    gap = inst.target - selected_sum(inst, selection)
    base = Fraction(1, 3 ** (2 * w + 2))
    p_accept = base
    p_reject = base * (3 * gap) ** 2
    return PassAnalysis(p_accept, p_reject, 1 - p_accept - p_reject)


def pass_probs(inst: Instance, selection) -> PassAnalysis:
    """Exact per-pass probabilities for a fixed selection.

    Computed both by closed form and by full branch enumeration; a mismatch
    means the simulator and the formulas have diverged and is fatal.
    """
    selection = tuple(selection)
    formula = closed_form_pass(inst, selection)
    tape = with_endmarkers(encode_instance(inst))
    enumerated = run_pass_exact(
        _spec(), tape, responses_from_selection(selection), default_step_cap(tape)
    )
    if enumerated != formula:
        raise ConsistencyError(
            f"branch enumeration {enumerated} disagrees with closed form {formula} "
            f"on instance {inst} selection {selection}"
        )
    return enumerated


def overall_verdict(inst: Instance, selection) -> Verdict:
    """Outcome of the whole restart loop under a fixed selection."""
    return run_protocol_exact(pass_probs(inst, selection))


def subset_sum_oracle(inst: Instance, guard: int = SELECTION_GUARD):
    """Classical brute force over all subsets.

    Returns (is_member, witness) with a witness selection when one exists.
    Independent of the quantum route: plain integer sums.
    """
    if inst.n > guard:
        raise GuardError(
            f"n={inst.n} exceeds the enumeration guard {guard}; "
            "use sampling on large instances"
        )
    for bits in product((False, True), repeat=inst.n):
        if sum(a for a, keep in zip(inst.values, bits) if keep) == inst.target:
            return True, bits
    return False, None


@dataclass(frozen=True)
class SelectionRow:
    """Soundness-table row for one fixed selection."""

    selection: WitnessSubset
    p_accept: Fraction
    p_reject: Fraction
    overall_reject: Fraction


@dataclass(frozen=True)
class SoundnessReport:
    """Adversarial analysis over every fixed selection.

    `adaptive_bound_holds` records whether every selection satisfies
    p_reject >= 9 * p_accept; when it does, no cross-pass strategy can push
    cumulative acceptance above 1/10 (each pass the adversary picks some
    selection k, and p_reject_k >= 9 * p_accept_k bounds the accept share
    of the halting mass by 1/10 in every pass, hence in the total).
    """

    rows: tuple[SelectionRow, ...]
    worst_fixed_rejection: Fraction
    adaptive_bound_holds: bool
    oracle_membership: bool


def worst_case_soundness(inst: Instance, guard: int = SELECTION_GUARD) -> SoundnessReport:
    """Enumerate all 2^n fixed selections and aggregate the soundness data.

    For nonmembers this asserts the rejection guarantee: worst fixed
    rejection at least 9/10 and the per-pass adaptive inequality holding
    everywhere.
    """
    if inst.n > guard:
        raise GuardError(
            f"n={inst.n} exceeds the enumeration guard {guard}; "
            "use sampling on large instances"
        )
    rows = []
    for bits in product((False, True), repeat=inst.n):
        per_pass = pass_probs(inst, bits)
        verdict = run_protocol_exact(per_pass)
        rows.append(SelectionRow(bits, per_pass.p_accept, per_pass.p_reject, verdict.overall_reject))
    worst = min(row.overall_reject for row in rows)
    adaptive = all(row.p_reject >= 9 * row.p_accept for row in rows)
    member, _ = subset_sum_oracle(inst, guard)
    if not member:
        if worst < Fraction(9, 10) or not adaptive:
            raise ConsistencyError(
                f"soundness bound violated on nonmember {inst}: worst={worst}, adaptive={adaptive}"
            )
    return SoundnessReport(tuple(rows), worst, adaptive, member)


def amplify(base_error: Fraction, rounds: int) -> Fraction:
    """Wrongful-acceptance bound after sequentially repeating the whole
    protocol `rounds` times and rejecting if any round rejects.

    The protocol's error is one-sided (a true member with an honest prover
    is never rejected), so repetition multiplies the error: the result is
    base_error ** rounds.
    """
    base_error = Fraction(base_error)
    if not 0 <= base_error < Fraction(1, 2):
        raise ValueError(f"base error must be in [0, 1/2), got {base_error}")
    if rounds < 1:
        raise ValueError("rounds must be positive")
    return base_error ** rounds


def rounds_needed(base_error: Fraction, target: Fraction) -> int:
    """Smallest number of sequential rounds pushing the error to or below
    `target`."""
    base_error = Fraction(base_error)
    target = Fraction(target)
    if not 0 < base_error < Fraction(1, 2):
        raise ValueError(f"base error must be in (0, 1/2), got {base_error}")
    if not 0 < target < 1:
        raise ValueError(f"target must be in (0, 1), got {target}")
    rounds = 1
    err = base_error
    while err > target:
        err *= base_error
        rounds += 1
    return rounds


def expected_runtime(inst: Instance, selection):
    """(expected passes, symbol-read upper bound) for a fixed selection.

    Expected passes is 1 / (p_accept + p_reject); every pass reads at most
    |w| + 2 symbols (endmarkers included), so the product bounds expected
    symbol reads.  Returns (None, None) when the protocol never halts.
    """
    verdict = overall_verdict(inst, selection)
    if not verdict.halts:
        return None, None
    reads_per_pass = len(encode_instance(inst)) + 2
    return verdict.expected_passes, reads_per_pass * verdict.expected_passes


def _fmt_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _fmt_selection(selection) -> str:
    return ",".join("select" if keep else "skip" for keep in selection)


def render_soundness_report(report: SoundnessReport, structured: bool = False) -> list[str]:
    """Serialize a soundness report.

    Human mode is a readable table; structured mode is line-oriented
    space-separated key=value tokens.  Rationals always render as num/den;
    decimal approximations are labeled and informational only.
    """
    out = []
    if structured:
        out.append(f"oracle_membership={str(report.oracle_membership).lower()}")
        out.append(
            f"worst_fixed_rejection={_fmt_rational(report.worst_fixed_rejection)} "
            f"worst_fixed_rejection_approx={float(report.worst_fixed_rejection)!r}"
        )
        out.append(f"adaptive_bound_holds={str(report.adaptive_bound_holds).lower()}")
        for row in report.rows:
            out.append(
                f"selection={_fmt_selection(row.selection)} "
                f"p_accept={_fmt_rational(row.p_accept)} "
                f"p_reject={_fmt_rational(row.p_reject)} "
                f"overall_reject={_fmt_rational(row.overall_reject)}"
            )
    else:
        out.append(f"oracle membership: {report.oracle_membership}")
        out.append(
            f"worst fixed rejection: {_fmt_rational(report.worst_fixed_rejection)} "
            f"(approx {float(report.worst_fixed_rejection)!r})"
        )
        out.append(f"adaptive bound holds: {report.adaptive_bound_holds}")
        for row in report.rows:
            out.append(
                f"  selection {_fmt_selection(row.selection)}: "
                f"p_accept={_fmt_rational(row.p_accept)} "
                f"p_reject={_fmt_rational(row.p_reject)} "
                f"overall_reject={_fmt_rational(row.overall_reject)}"
            )
    return out

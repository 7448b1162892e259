"""Exact rational scalars, 3-vectors, 3x3 matrices, and superoperators.

Everything here is arbitrary-precision rational arithmetic: amplitudes and
probabilities are `fractions.Fraction` values, kept in lowest terms with a
positive denominator, and no operation ever rounds.  Quantum branches are
tracked UNNORMALIZED (the squared norm of a branch vector is its probability
mass), which keeps every downstream quantity rational: normalizing would
introduce square roots.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, NamedTuple

Scalar = Fraction
Vec3 = tuple[Fraction, Fraction, Fraction]
Mat3 = tuple[Vec3, Vec3, Vec3]


def scalar(x) -> Fraction:
    """Coerce an int, string like "2/3", or Fraction to an exact scalar."""
    return Fraction(x)


def vec3(a, b, c) -> Vec3:
    return (Fraction(a), Fraction(b), Fraction(c))


def mat3(rows: Iterable[Iterable]) -> Mat3:
    """Build a 3x3 exact matrix from any nested iterable of rationals."""
    out = tuple(tuple(Fraction(x) for x in row) for row in rows)
    if len(out) != 3 or any(len(row) != 3 for row in out):
        raise ValueError("matrix must be 3x3")
    return out  # type: ignore[return-value]


ZERO_VEC: Vec3 = vec3(0, 0, 0)
IDENTITY: Mat3 = mat3([[1, 0, 0], [0, 1, 0], [0, 0, 1]])


def mat_vec(m: Mat3, v: Vec3) -> Vec3:
    return tuple(sum(m[i][j] * v[j] for j in range(3)) for i in range(3))  # type: ignore[return-value]


def mat_mul(a: Mat3, b: Mat3) -> Mat3:
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3))
        for i in range(3)
    )  # type: ignore[return-value]


def mat_add(a: Mat3, b: Mat3) -> Mat3:
    return tuple(
        tuple(a[i][j] + b[i][j] for j in range(3)) for i in range(3)
    )  # type: ignore[return-value]


def transpose(m: Mat3) -> Mat3:
    return tuple(tuple(m[j][i] for j in range(3)) for i in range(3))  # type: ignore[return-value]


def scale_mat(c, m: Mat3) -> Mat3:
    c = Fraction(c)
    return tuple(tuple(c * x for x in row) for row in m)  # type: ignore[return-value]


def scale_vec(c, v: Vec3) -> Vec3:
    c = Fraction(c)
    return (c * v[0], c * v[1], c * v[2])


def dot(u: Vec3, v: Vec3) -> Fraction:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def squared_norm(v: Vec3) -> Fraction:
    """Sum of squared components; the probability mass of an unnormalized
    branch vector."""
    return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]


def initialize() -> Vec3:
    """The state produced by the register-initialize operator."""
    return vec3(1, 0, 0)


class OutcomeLabel(Enum):
    """Measurement-outcome label attached to one operation element.

    The label records the verifier action the protocol associates with the
    outcome; a verifier spec's classical transition may remap it.
    """

    MOVE_RIGHT = "→"
    RESTART = "↻"
    ACCEPT = "A"
    REJECT = "R"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class OperationElement:
    """One matrix of a superoperator together with its outcome label."""

    matrix: Mat3
    label: OutcomeLabel


@dataclass(frozen=True)
class Superoperator:
    """An ordered, labeled collection of operation elements.

    A valid quantum operation satisfies the completeness relation
    sum_i(Ei^T Ei) = I; constructing an invalid one is permitted (tests use
    deliberately broken operators), and `check_completeness` is the flag.
    """

    name: str
    elements: tuple[OperationElement, ...]

    def __post_init__(self):
        if len(self.elements) < 1:
            raise ValueError("superoperator needs at least one element")


class Branch(NamedTuple):
    """One measurement branch of applying a superoperator."""

    label: OutcomeLabel
    post_state: Vec3
    weight: Fraction


def check_completeness(sop: Superoperator) -> bool:
    """True iff sum_i(Ei^T Ei) equals the identity exactly.

    Entries are real rationals, so the conjugate transpose is the plain
    transpose.  Equality is entry-wise rational equality, no tolerance.
    """
    total = mat3([[0, 0, 0], [0, 0, 0], [0, 0, 0]])
    for el in sop.elements:
        total = mat_add(total, mat_mul(transpose(el.matrix), el.matrix))
    return total == IDENTITY


def apply(sop: Superoperator, state: Vec3) -> list[Branch]:
    """Apply a superoperator to an (unnormalized) state vector.

    Branch i carries the unnormalized post-state Ei|psi> and its weight
    <psi_i|psi_i>.  When the completeness relation holds, the weights sum
    exactly to the squared norm of the input.  Branch order follows element
    order.
    """
    out = []
    for el in sop.elements:
        post = mat_vec(el.matrix, state)
        out.append(Branch(el.label, post, squared_norm(post)))
    return out

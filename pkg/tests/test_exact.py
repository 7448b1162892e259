"""Exact-core: rational vectors, superoperators, completeness, application."""

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qamsim import exact
from qamsim.exact import (
    IDENTITY,
    OperationElement,
    OutcomeLabel,
    Superoperator,
    apply,
    check_completeness,
    initialize,
    mat3,
    scale_mat,
    squared_norm,
    vec3,
)
from qamsim.protocol import (
    DECIDE,
    DISCARD_SKIPPED,
    ENCODE_TARGET_0,
    ENCODE_TARGET_1,
    ENCODE_VALUE_0,
    ENCODE_VALUE_1,
    PASS_THROUGH,
    PROTOCOL_OPERATORS,
    SUBTRACT_SELECTED,
    TARGET_BOUNDARY,
)

RIGHT = OutcomeLabel.MOVE_RIGHT
RESTART = OutcomeLabel.RESTART

IDENTITY_OP = Superoperator("identity", (OperationElement(IDENTITY, RIGHT),))


def independent_completeness_sum(sop):
    """Test-local oracle: sum of E^T E entries via raw index loops, not the
    package's matrix helpers."""
    tot = [[F(0)] * 3 for _ in range(3)]
    for el in sop.elements:
        m = el.matrix
        for i in range(3):
            for j in range(3):
                tot[i][j] += sum(m[k][i] * m[k][j] for k in range(3))
    return tot


rationals = st.builds(F, st.integers(-9, 9), st.integers(1, 9))
vectors = st.builds(vec3, rationals, rationals, rationals)


def test_identity_is_complete():
    assert check_completeness(IDENTITY_OP) is True


def test_two_half_identities_are_incomplete():
    half = scale_mat(F(1, 2), IDENTITY)
    sop = Superoperator(
        "halves",
        (OperationElement(half, RIGHT), OperationElement(half, RESTART)),
    )
    assert check_completeness(sop) is False


def test_encode_target_0_complete_against_independent_oracle():
    expected = [[F(1) if i == j else F(0) for j in range(3)] for i in range(3)]
    assert independent_completeness_sum(ENCODE_TARGET_0) == expected
    assert check_completeness(ENCODE_TARGET_0) is True


def test_target_boundary_is_complete():
    # scalar elements 1/3, 2/3, 2/3: squared weights 1/9 + 4/9 + 4/9 = 1
    assert check_completeness(TARGET_BOUNDARY) is True


@pytest.mark.parametrize("sop", PROTOCOL_OPERATORS + (PASS_THROUGH,), ids=lambda s: s.name)
def test_all_protocol_operators_complete(sop):
    assert check_completeness(sop) is True
    expected = [[F(1) if i == j else F(0) for j in range(3)] for i in range(3)]
    assert independent_completeness_sum(sop) == expected


def test_empty_superoperator_rejected():
    with pytest.raises(ValueError):
        Superoperator("empty", ())


def test_apply_encode_target_1_on_initial_state():
    branches = apply(ENCODE_TARGET_1, initialize())
    assert [b.label for b in branches] == [RIGHT, RESTART, RESTART]
    assert branches[0].post_state == vec3(F(1, 3), F(1, 3), 0)
    assert branches[0].weight == F(2, 9)
    assert branches[1].post_state == vec3(F(2, 3), F(1, 3), F(1, 3))
    assert branches[1].weight == F(6, 9)
    assert branches[2].post_state == vec3(F(1, 3), 0, 0)
    assert branches[2].weight == F(1, 9)
    assert sum(b.weight for b in branches) == 1


def test_apply_target_boundary_scales_without_mixing():
    v = vec3(F(3, 5), F(4, 5), 0)
    branches = apply(TARGET_BOUNDARY, v)
    assert [b.weight for b in branches] == [F(1, 9), F(4, 9), F(4, 9)]
    assert branches[0].post_state == vec3(F(1, 5), F(4, 15), 0)
    # directions unchanged: each post state is a scalar multiple of v
    for b, c in zip(branches, (F(1, 3), F(2, 3), F(2, 3))):
        assert b.post_state == tuple(c * x for x in v)


def test_apply_identity_preserves_state():
    v = vec3(F(1, 2), F(1, 3), F(1, 6))
    (branch,) = apply(IDENTITY_OP, v)
    assert branch.post_state == v
    assert branch.weight == squared_norm(v)


def test_initialize_and_norm():
    v = initialize()
    assert v == vec3(1, 0, 0)
    assert squared_norm(v) == 1


def test_target_boundary_branch_from_initial():
    branches = apply(TARGET_BOUNDARY, initialize())
    assert branches[0].post_state == vec3(F(1, 3), 0, 0)


def test_squared_norm_values():
    assert squared_norm(vec3(1, 0, 0)) == 1
    assert squared_norm(vec3(F(1, 3), F(1, 3), 0)) == F(2, 9)
    assert squared_norm(vec3(F(1, 81), 0, 0)) == F(1, 6561)


@pytest.mark.parametrize("sop", PROTOCOL_OPERATORS, ids=lambda s: s.name)
@given(v=vectors)
@settings(max_examples=25, deadline=None)
def test_weights_sum_to_input_norm(sop, v):
    branches = apply(sop, v)
    assert sum(b.weight for b in branches) == squared_norm(v)


@pytest.mark.parametrize("sop", PROTOCOL_OPERATORS, ids=lambda s: s.name)
def test_completeness_invariant_under_permutation(sop):
    rotated = sop.elements[1:] + sop.elements[:1]
    assert check_completeness(Superoperator(sop.name + "_rot", rotated)) is True
    reverse = tuple(reversed(sop.elements))
    assert check_completeness(Superoperator(sop.name + "_rev", reverse)) is True


@given(v=vectors, c=rationals)
@settings(max_examples=50, deadline=None)
def test_apply_is_linear(v, c):
    base = apply(SUBTRACT_SELECTED, v)
    scaled = apply(SUBTRACT_SELECTED, tuple(c * x for x in v))
    for b, s in zip(base, scaled):
        assert s.post_state == tuple(c * x for x in b.post_state)
        assert s.weight == c * c * b.weight


@pytest.mark.parametrize(
    "sop,expected",
    [
        (ENCODE_TARGET_0, 3),
        (ENCODE_TARGET_1, 3),
        (TARGET_BOUNDARY, 3),
        (ENCODE_VALUE_0, 3),
        (ENCODE_VALUE_1, 3),
        (SUBTRACT_SELECTED, 4),
        (DISCARD_SKIPPED, 2),
        (DECIDE, 3),
    ],
    ids=lambda x: x.name if isinstance(x, Superoperator) else str(x),
)
def test_element_counts(sop, expected):
    assert len(sop.elements) == expected


def test_decide_labels():
    assert [el.label for el in DECIDE.elements] == [
        OutcomeLabel.ACCEPT,
        OutcomeLabel.REJECT,
        OutcomeLabel.RESTART,
    ]


def test_mat3_validates_shape():
    with pytest.raises(ValueError):
        mat3([[1, 0], [0, 1]])

"""Exhaustive desk-scale sweeps over instance families.

The acceptance checks quantify over every instance with n <= 4 values below
16 and every one of the 2^n selections: about 17 million (instance,
selection) pairs.  Walking each pair's surviving branch in Fraction
arithmetic is far too slow, so the walk is compiled with numba over integer
numerators: every matrix entry is an integer over the common denominator 3,
so after m steps the register numerators are exact integers over 3^m.  The
kernel applies the very same matrices as the Fraction route (their integer
numerators are extracted from the protocol constants, not re-typed here)
and compares against the closed forms computed from plain integer sums.

All arithmetic is int64 and exact: numerators stay tiny (|entries| <= 15,
terminal masses <= 9 * 15^2) for this family.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from numba import njit

from .protocol import (
    DECIDE,
    DISCARD_SKIPPED,
    ENCODE_TARGET_0,
    ENCODE_TARGET_1,
    ENCODE_VALUE_0,
    ENCODE_VALUE_1,
    Instance,
    SUBTRACT_SELECTED,
    TARGET_BOUNDARY,
)

_DEN = 3


def _numerators(matrix) -> np.ndarray:
    out = np.empty((3, 3), dtype=np.int64)
    for i in range(3):
        for j in range(3):
            x = matrix[i][j] * _DEN
            if x.denominator != 1:
                raise ValueError("protocol matrices must have denominator 3")
            out[i, j] = int(x)
    return out


def _walk_matrices() -> np.ndarray:
    """Continue-branch numerators, indexed 0..6: target digits 0/1, target
    boundary, value digits 0/1, selected boundary, skipped boundary."""
    ops = (
        ENCODE_TARGET_0,
        ENCODE_TARGET_1,
        TARGET_BOUNDARY,
        ENCODE_VALUE_0,
        ENCODE_VALUE_1,
        SUBTRACT_SELECTED,
        DISCARD_SKIPPED,
    )
    return np.stack([_numerators(op.elements[0].matrix) for op in ops])


def family_size(max_n: int, bound: int) -> int:
    return sum(bound ** (n + 1) for n in range(1, max_n + 1))


def family_instances(max_n: int, bound: int):
    """All instances with 1..max_n values and target/values below `bound`,
    in the exact order the sweep kernel visits them."""
    for n in range(1, max_n + 1):
        for target in range(bound):
            for values in product(range(bound), repeat=n):
                yield Instance(target, values)


def instance_at(ordinal: int, max_n: int, bound: int) -> Instance:
    """The instance the sweep kernel visited at position `ordinal`."""
    if ordinal < 0:
        raise IndexError(ordinal)
    for n in range(1, max_n + 1):
        block = bound ** (n + 1)
        if ordinal < block:
            target, rem = divmod(ordinal, bound ** n)
            values = []
            for i in range(n):
                values.append(rem // bound ** (n - 1 - i))
                rem %= bound ** (n - 1 - i)
            return Instance(target, tuple(values))
        ordinal -= block
    raise IndexError("ordinal past the end of the family")


@njit(cache=True)
def _sweep_kernel(max_n, bound, walk, acc, rej, min_abs_gap, tape_len):
    """Walk every (instance, selection) pair; returns mismatch counters.

    For each pair: apply the continue-branch matrices symbol by symbol,
    then check (a) the numerators equal (1, S - T, 0) with exponent |w|,
    (b) the accept-branch mass numerator is 1, and (c) the reject-branch
    mass numerator is 9 * (S - T)^2, both over 3^(2|w|+2).  Fills
    min_abs_gap and tape_len per instance.
    """
    pairs = 0
    bad_trace = 0
    bad_accept = 0
    bad_reject = 0
    ordinal = 0
    vals = np.zeros(4, dtype=np.int64)
    digits = np.zeros(8, dtype=np.int64)
    for n in range(1, max_n + 1):
        for target in range(bound):
            for i in range(n):
                vals[i] = 0
            while True:
                best = np.int64(2 ** 62)
                wlen = 0
                for mask in range(1 << n):
                    x = np.int64(1)
                    y = np.int64(0)
                    z = np.int64(0)
                    steps = 0
                    # target digits, MSB first
                    nd = 0
                    t = target
                    if t == 0:
                        digits[0] = 0
                        nd = 1
                    else:
                        while t > 0:
                            digits[nd] = t % 2
                            t //= 2
                            nd += 1
                        lo = 0
                        hi = nd - 1
                        while lo < hi:
                            tmp = digits[lo]
                            digits[lo] = digits[hi]
                            digits[hi] = tmp
                            lo += 1
                            hi -= 1
                    sel_sum = np.int64(0)
                    for d in range(nd):
                        m = walk[digits[d]]
                        x2 = m[0, 0] * x + m[0, 1] * y + m[0, 2] * z
                        y2 = m[1, 0] * x + m[1, 1] * y + m[1, 2] * z
                        z2 = m[2, 0] * x + m[2, 1] * y + m[2, 2] * z
                        x, y, z = x2, y2, z2
                        steps += 1
                    m = walk[2]
                    x2 = m[0, 0] * x + m[0, 1] * y + m[0, 2] * z
                    y2 = m[1, 0] * x + m[1, 1] * y + m[1, 2] * z
                    z2 = m[2, 0] * x + m[2, 1] * y + m[2, 2] * z
                    x, y, z = x2, y2, z2
                    steps += 1
                    for vi in range(n):
                        a = vals[vi]
                        nd = 0
                        if a == 0:
                            digits[0] = 0
                            nd = 1
                        else:
                            t = a
                            while t > 0:
                                digits[nd] = t % 2
                                t //= 2
                                nd += 1
                            lo = 0
                            hi = nd - 1
                            while lo < hi:
                                tmp = digits[lo]
                                digits[lo] = digits[hi]
                                digits[hi] = tmp
                                lo += 1
                                hi -= 1
                        for d in range(nd):
                            m = walk[3 + digits[d]]
                            x2 = m[0, 0] * x + m[0, 1] * y + m[0, 2] * z
                            y2 = m[1, 0] * x + m[1, 1] * y + m[1, 2] * z
                            z2 = m[2, 0] * x + m[2, 1] * y + m[2, 2] * z
                            x, y, z = x2, y2, z2
                            steps += 1
                        if (mask >> vi) & 1:
                            m = walk[5]
                            sel_sum += a
                        else:
                            m = walk[6]
                        x2 = m[0, 0] * x + m[0, 1] * y + m[0, 2] * z
                        y2 = m[1, 0] * x + m[1, 1] * y + m[1, 2] * z
                        z2 = m[2, 0] * x + m[2, 1] * y + m[2, 2] * z
                        x, y, z = x2, y2, z2
                        steps += 1
                    gap = target - sel_sum
                    if x != 1 or y != gap or z != 0:
                        bad_trace += 1
                    ax = acc[0, 0] * x + acc[0, 1] * y + acc[0, 2] * z
                    ay = acc[1, 0] * x + acc[1, 1] * y + acc[1, 2] * z
                    az = acc[2, 0] * x + acc[2, 1] * y + acc[2, 2] * z
                    if ax * ax + ay * ay + az * az != 1:
                        bad_accept += 1
                    rx = rej[0, 0] * x + rej[0, 1] * y + rej[0, 2] * z
                    ry = rej[1, 0] * x + rej[1, 1] * y + rej[1, 2] * z
                    rz = rej[2, 0] * x + rej[2, 1] * y + rej[2, 2] * z
                    if rx * rx + ry * ry + rz * rz != 9 * gap * gap:
                        bad_reject += 1
                    agap = gap if gap >= 0 else -gap
                    if agap < best:
                        best = agap
                    wlen = steps
                    pairs += 1
                min_abs_gap[ordinal] = best
                tape_len[ordinal] = wlen
                ordinal += 1
                # odometer over the value tuple, last index fastest
                k = n - 1
                while k >= 0:
                    vals[k] += 1
                    if vals[k] < bound:
                        break
                    vals[k] = 0
                    k -= 1
                if k < 0:
                    break
    return pairs, bad_trace, bad_accept, bad_reject


@dataclass(frozen=True)
class FamilySweep:
    """Aggregate result of one exhaustive family sweep."""

    max_n: int
    bound: int
    pairs: int
    trace_mismatches: int
    accept_mismatches: int
    reject_mismatches: int
    min_abs_gap: np.ndarray
    tape_len: np.ndarray

    @property
    def membership(self) -> np.ndarray:
        """Membership per instance: some selection hits the target exactly."""
        return self.min_abs_gap == 0


def sweep_family(max_n: int = 4, bound: int = 16) -> FamilySweep:
    """Run the exhaustive closed-form/probability sweep over the family."""
    size = family_size(max_n, bound)
    min_abs_gap = np.zeros(size, dtype=np.int64)
    tape_len = np.zeros(size, dtype=np.int64)
    walk = _walk_matrices()
    acc = _numerators(DECIDE.elements[0].matrix)
    rej = _numerators(DECIDE.elements[1].matrix)
    pairs, bad_trace, bad_accept, bad_reject = _sweep_kernel(
        max_n, bound, walk, acc, rej, min_abs_gap, tape_len
    )
    return FamilySweep(
        max_n, bound, pairs, bad_trace, bad_accept, bad_reject, min_abs_gap, tape_len
    )

"""Sweep plumbing: enumeration order and kernel agreement on tiny families."""

from qamsim import sweeps
from qamsim.analysis import subset_sum_oracle
from qamsim.protocol import Instance, encode_instance


def test_instance_at_matches_enumeration_order():
    listed = list(sweeps.family_instances(2, 3))
    assert len(listed) == sweeps.family_size(2, 3)
    for ordinal, inst in enumerate(listed):
        assert sweeps.instance_at(ordinal, 2, 3) == inst


def test_family_size():
    assert sweeps.family_size(4, 16) == 16 ** 2 + 16 ** 3 + 16 ** 4 + 16 ** 5


def test_tiny_sweep_agrees_with_oracle_everywhere():
    res = sweeps.sweep_family(max_n=2, bound=4)
    assert res.trace_mismatches == 0
    assert res.accept_mismatches == 0
    assert res.reject_mismatches == 0
    assert res.pairs == 4 ** 2 * 2 + 4 ** 3 * 4
    for ordinal, inst in enumerate(sweeps.family_instances(2, 4)):
        member, _ = subset_sum_oracle(inst)
        assert bool(res.membership[ordinal]) == member
        assert res.tape_len[ordinal] == len(encode_instance(inst))


def test_first_ordinals():
    assert sweeps.instance_at(0, 4, 16) == Instance(0, (0,))
    assert sweeps.instance_at(1, 4, 16) == Instance(0, (1,))
    assert sweeps.instance_at(16, 4, 16) == Instance(1, (0,))
    first_n2 = sweeps.family_size(1, 16)
    assert sweeps.instance_at(first_n2, 4, 16) == Instance(0, (0, 0))

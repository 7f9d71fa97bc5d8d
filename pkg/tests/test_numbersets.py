"""The quadruple-system engine: reach, trees, pumping, certificates.

Expected reach sets below were derived by brute-force iteration of the
rules (frozen); periodicity thresholds follow the member-normalized rule
the certificates use.
"""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hintikka.errors import HintikkaError
from hintikka.numbersets import (
    Node,
    PumpPair,
    QuadrupleSystem,
    chain_rank,
    dump_tree,
    find_period,
    find_pump,
    iter_nodes,
    node_at,
    parse_system,
    peak_nodes,
    pump,
    reach,
    serialize_system,
    validate_tree,
    verify_certificate,
    witness_tree,
)

MULT3 = QuadrupleSystem(1, ((0, 0, 0, 0),), (frozenset({3}),))
COFIN2 = QuadrupleSystem(1, ((0, 0, 0, 1),), (frozenset({2}),))
SEMIGROUP47 = QuadrupleSystem(1, ((0, 0, 0, 0),), (frozenset({4, 7}),))


def test_reach_multiples_of_three():
    assert reach(MULT3, 20).values(0) == (3, 6, 9, 12, 15, 18)


def test_reach_cofinite_from_two():
    assert reach(COFIN2, 10).values(0) == (2, 3, 4, 5, 6, 7, 8, 9, 10)


def test_reach_empty_base():
    sysq = QuadrupleSystem(1, ((0, 0, 0, 0),), (frozenset(),))
    assert reach(sysq, 10).values(0) == ()


def test_reach_numerical_semigroup():
    vals = set(reach(SEMIGROUP47, 30).values(0))
    assert 17 not in vals and 18 in vals          # Frobenius number of <4,7>
    assert {4, 7, 8, 11, 12, 14} <= vals


def test_reach_deterministic_and_slack_stable():
    a = reach(MULT3, 50)
    b = reach(MULT3, 50)
    assert a == b and a.slack_stable


@given(st.integers(min_value=5, max_value=40), st.integers(min_value=41, max_value=80))
@settings(max_examples=15, deadline=None)
def test_reach_monotone_in_bound(b1, b2):
    small = set(reach(SEMIGROUP47, b1).values(0))
    large = set(reach(SEMIGROUP47, b2).values(0))
    assert small <= large


def test_reach_monotone_in_base():
    bigger = QuadrupleSystem(1, ((0, 0, 0, 0),), (frozenset({3, 5}),))
    assert set(reach(MULT3, 40).values(0)) <= set(reach(bigger, 40).values(0))


def test_witness_for_every_reached_value():
    for sysq in (MULT3, COFIN2, SEMIGROUP47):
        rr = reach(sysq, 50)
        for value in rr.values(0):
            tree = witness_tree(sysq, 0, value, 50)
            assert validate_tree(sysq, tree) is None
            assert tree.value == value and tree.label == 0


def test_find_period_expected_certificates():
    for sysq, want in ((MULT3, (3, 3)), (COFIN2, (2, 1)), (SEMIGROUP47, (18, 1))):
        cert = find_period(sysq, 0, 200, 16)
        assert (cert.threshold, cert.period) == want
        assert cert.status == "certified-progression"
        assert cert.pump is not None
        assert cert.pump.pair.delta % cert.period == 0
        assert verify_certificate(sysq, cert)


def test_find_period_inconclusive():
    # period 3 cannot be found with a window of 2
    assert find_period(MULT3, 0, 200, 2) is None


def test_find_period_requires_scan_margin():
    with pytest.raises(HintikkaError):
        find_period(MULT3, 0, 10, 16)


CHAIN_TREE = Node(0, 9, 0, Node(0, 3), Node(0, 6, 0, Node(0, 3), Node(0, 3)))


def test_validate_tree_ok_and_violations():
    assert validate_tree(MULT3, CHAIN_TREE) is None
    bad_value = Node(0, 8, 0, Node(0, 3), Node(0, 6, 0, Node(0, 3), Node(0, 3)))
    v = validate_tree(MULT3, bad_value)
    assert v.clause == "f" and v.path == "e"
    bad_leaf = Node(0, 7, 0, Node(0, 4), Node(0, 3))
    v2 = validate_tree(MULT3, bad_leaf)
    assert v2.clause == "e" and v2.path == "0"


def test_find_pump_none_on_leaf():
    assert find_pump(Node(0, 3)) is None


def test_find_pump_chain_example():
    pair = find_pump(CHAIN_TREE)
    assert pair is not None
    low = node_at(CHAIN_TREE, pair.low)
    high = node_at(CHAIN_TREE, pair.high)
    assert (low.value, high.value, pair.delta) == (3, 6, 3)


def test_find_pump_alternating_labels():
    # two labels, rules flipping label: no equal-label peak pair in the
    # three-node tree; a deeper derivation has one
    sysq = QuadrupleSystem(2, ((1, 1, 0, 0), (0, 0, 1, 0)),
                           (frozenset(), frozenset({1})))
    # rules are stored sorted: index 0 = (0,0,1,0), index 1 = (1,1,0,0)
    shallow = Node(0, 2, 1, Node(1, 1), Node(1, 1))
    assert validate_tree(sysq, shallow) is None
    assert find_pump(shallow) is None

    def zero2():
        return Node(0, 2, 1, Node(1, 1), Node(1, 1))

    def one4():
        return Node(1, 4, 0, zero2(), zero2())

    deeper = Node(0, 8, 1, one4(), one4())
    assert validate_tree(sysq, deeper) is None
    pair = find_pump(deeper)
    assert pair is not None
    low = node_at(deeper, pair.low)
    high = node_at(deeper, pair.high)
    assert low.label == high.label and pair.delta > 0


def test_pump_identity_and_growth():
    pair = find_pump(CHAIN_TREE)
    assert pump(CHAIN_TREE, pair, 0) == CHAIN_TREE
    for i in range(1, 6):
        pumped = pump(CHAIN_TREE, pair, i)
        assert validate_tree(MULT3, pumped) is None
        assert pumped.value == CHAIN_TREE.value + i * pair.delta
    # membership cross-check against reach
    p5 = pump(CHAIN_TREE, pair, 5)
    assert p5.value in reach(MULT3, p5.value + 3).values(0)


def test_pump_rejects_bad_pair():
    with pytest.raises(HintikkaError):
        pump(CHAIN_TREE, PumpPair((0,), (1,), 3), 1)


def test_rank_bound_on_trees():
    rng = random.Random(31)
    for sysq in (MULT3, COFIN2, SEMIGROUP47):
        rr = reach(sysq, 40)
        for value in rr.values(0)[:8]:
            tree = witness_tree(sysq, 0, value, 40)
            ranks = chain_rank(tree)
            n0 = sysq.max_base
            for path, node in iter_nodes(tree):
                assert node.value <= 2 ** ranks[path] * n0


def test_peak_nodes_definition():
    peaks = peak_nodes(CHAIN_TREE)
    # every node dominates its strict descendants here
    assert peaks == {(), (0,), (1,), (1, 0), (1, 1)}


def test_system_file_roundtrip():
    text = serialize_system(SEMIGROUP47)
    assert parse_system(text) == SEMIGROUP47
    multi = QuadrupleSystem(2, ((0, 1, 0, 2), (1, 1, 1, 0)),
                            (frozenset({1}), frozenset({2, 5})))
    assert parse_system(serialize_system(multi)) == multi


def test_tree_dump_paths():
    dump = dump_tree(CHAIN_TREE)
    assert "node e label=0 value=9 rule=0" in dump
    assert "node 10 label=0 value=3" in dump

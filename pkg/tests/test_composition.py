"""Gluing schemes and the addition theorem.

The defining property: transfer after computing part theories equals the
theory of glue, exactly, for every tested scheme and depth. The direct
computation on the glued structure is the oracle throughout.
"""

import random

import pytest

from conftest import k2_graph, rand_structure, triangle
from hintikka.composition import (
    Scheme,
    count_patterns,
    count_schemes,
    disjoint_union_scheme,
    enumerate_patterns,
    enumerate_schemes,
    glue,
    parse_scheme,
    pattern_key,
    pattern_union_value,
    plain_union_scheme,
    random_table_scheme,
    serialize_scheme,
    table_extension,
    transfer,
)
from hintikka.errors import BudgetError, SignatureError
from hintikka.structures import Structure, Vocabulary, path_graph
from hintikka.theory import compute_theory, default_interner

GRAPHS = Vocabulary((("E", 2),))

GLUE_POINT = plain_union_scheme(1, 1, 1, ident=((0, 0),),
                                result_refs=(("s", 0, 0),), name="point")
CHAIN = plain_union_scheme(2, 2, 2, ident=((1, 0),),
                           result_refs=(("1", 0), ("2", 1)), name="chain")


def _scheme_samples(rng, vocab, k1, k2, seed):
    idents = ((0, 0),) if (k1 and k2 and rng.random() < 0.6) else ()
    keep1, keep2 = [True] * k1, [True] * k2
    ents = Scheme(k1, k2, 0, idents).entities()
    if ents and rng.random() < 0.4:
        ref = rng.choice([ref for ref, _ in ents])
        if ref[0] == "s":
            keep1[ref[1]] = keep2[ref[2]] = False
        elif ref[0] == "1":
            keep1[ref[1]] = False
        else:
            keep2[ref[1]] = False
    kept = Scheme(k1, k2, 0, idents, tuple(keep1), tuple(keep2)).kept_refs()
    k = rng.randint(0, min(2, len(kept)))
    result = tuple(rng.sample(list(kept), k))
    if rng.random() < 0.5:
        return plain_union_scheme(k1, k2, k, idents, tuple(keep1), tuple(keep2), result)
    return random_table_scheme(vocab, k1, k2, k, seed, idents,
                               tuple(keep1), tuple(keep2), result)


def test_glue_k2_on_point_gives_p3():
    left = k2_graph(1, (1,))
    right = k2_graph(1, (0,))
    g = glue(left, right, GLUE_POINT)
    assert g.size == 3
    assert compute_theory(g, 0).digest == \
        compute_theory(path_graph(3, 1, (1,)), 0).digest


def test_glue_neutral_element():
    v1 = Vocabulary((("E", 2),), 1)
    point = Structure(v1, 1, (frozenset(),), (0,))
    m1 = rand_structure(v1, 4, random.Random(2))
    g = glue(m1, point, GLUE_POINT)
    assert g.size == m1.size
    for n in (0, 1, 2):
        assert compute_theory(g, n).digest == compute_theory(m1, n).digest


def test_glue_bowtie():
    t1 = triangle(1, (0,))
    t2 = triangle(1, (0,))
    g = glue(t1, t2, GLUE_POINT)
    assert g.size == 5
    assert len(g.rel("E")) // 2 == 6


def test_glue_size_law():
    rng = random.Random(4)
    v = Vocabulary((("E", 2),), 2)
    for trial in range(30):
        m1 = rand_structure(v, rng.randint(2, 5), rng)
        m2 = rand_structure(v, rng.randint(2, 5), rng)
        s = _scheme_samples(rng, v, 2, 2, 900 + trial)
        assert glue(m1, m2, s).size == m1.size + m2.size - s.j


def test_glue_rejects_repeated_constants():
    v = Vocabulary((("E", 2),), 2)
    bad = Structure(v, 2, (frozenset(),), (0, 0))
    good = Structure(v, 2, (frozenset(),), (0, 1))
    s = plain_union_scheme(2, 2, 0)
    with pytest.raises(SignatureError):
        glue(bad, good, s)


def test_plain_union_clause():
    # union table: within-part tuples copy the part, mixed tuples are false
    rng = random.Random(6)
    for _ in range(10):
        m1 = rand_structure(GRAPHS, rng.randint(1, 4), rng)
        m2 = rand_structure(GRAPHS, rng.randint(1, 4), rng)
        g = glue(m1, m2, disjoint_union_scheme())
        n1 = m1.size
        expected = set(m1.rel("E")) | {(a + n1, b + n1) for a, b in m2.rel("E")}
        assert g.rel("E") == frozenset(expected)


def test_transfer_matches_direct_random():
    rng = random.Random(13)
    interner = default_interner()
    checked = 0
    for preds, nsets in (((("E", 2),), 0), ((("S", 1), ("E", 2)), 1)):
        for trial in range(10):
            k1, k2 = rng.randint(0, 2), rng.randint(0, 2)
            v1 = Vocabulary(preds, k1, nsets)
            v2 = Vocabulary(preds, k2, nsets)
            m1 = rand_structure(v1, rng.randint(max(1, k1), 3), rng)
            m2 = rand_structure(v2, rng.randint(max(1, k2), 3), rng)
            s = _scheme_samples(rng, v1, k1, k2, 40 + trial)
            g = glue(m1, m2, s)
            for n in (0, 1):
                lhs = transfer(compute_theory(m1, n, interner),
                               compute_theory(m2, n, interner), s, interner)
                rhs = compute_theory(g, n, interner)
                assert lhs.intern_id == rhs.intern_id
                checked += 1
    assert checked == 40


def test_transfer_depth2():
    rng = random.Random(17)
    interner = default_interner()
    v = Vocabulary((("E", 2),), 1)
    for trial in range(3):
        m1 = rand_structure(v, 2, rng)
        m2 = rand_structure(v, rng.randint(1, 2), rng)
        s = GLUE_POINT if trial % 2 else random_table_scheme(v, 1, 1, 1, 70 + trial,
                                                             ((0, 0),),
                                                             result_refs=(("s", 0, 0),))
        g = glue(m1, m2, s)
        lhs = transfer(compute_theory(m1, 2, interner),
                       compute_theory(m2, 2, interner), s, interner)
        assert lhs.intern_id == compute_theory(g, 2, interner).intern_id


def test_transfer_p2_p2_equals_p3_depth1():
    interner = default_interner()
    t = transfer(compute_theory(k2_graph(1, (1,)), 1, interner),
                 compute_theory(k2_graph(1, (0,)), 1, interner),
                 GLUE_POINT, interner)
    assert t.digest == compute_theory(path_graph(3, 1, (1,)), 1, interner).digest


def test_representative_independence():
    from hintikka.structures import apply_permutation
    rng = random.Random(23)
    interner = default_interner()
    v = Vocabulary((("E", 2),), 1)
    for _ in range(8):
        m1 = rand_structure(v, 3, rng)
        m2 = rand_structure(v, 3, rng)
        pi1 = list(range(3)); rng.shuffle(pi1)
        pi2 = list(range(3)); rng.shuffle(pi2)
        m1p = apply_permutation(m1, pi1)
        m2p = apply_permutation(m2, pi2)
        s = GLUE_POINT
        a = compute_theory(glue(m1, m2, s), 1, interner)
        b = compute_theory(glue(m1p, m2p, s), 1, interner)
        assert a.intern_id == b.intern_id


def test_transfer_rejects_mismatched_signature():
    interner = default_interner()
    t1 = compute_theory(k2_graph(1, (0,)), 0, interner)
    t2 = compute_theory(k2_graph(), 0, interner)
    with pytest.raises(SignatureError):
        transfer(t1, t2, GLUE_POINT, interner)


def test_enumerate_schemes_unary_count_law():
    unary = Vocabulary((("S", 1),))
    total = count_schemes(unary, 1, 1, 1)
    schemes = enumerate_schemes(unary, 1, 1, 1, k_star=2, budget=2 ** 20)
    assert len(schemes) == total
    assert len(set(s.scheme_id for s in schemes)) == total
    # count decomposes as sum over configs of 2^(pattern count)
    seen_cfgs = {(s.ident, s.keep1, s.keep2, s.result_refs) for s in schemes}
    acc = 0
    for ident, keep1, keep2, result in seen_cfgs:
        probe = Scheme(1, 1, 1, ident, keep1, keep2, result)
        acc += 2 ** count_patterns(unary, probe, "S")
    assert acc == total


def test_enumeration_contains_plain_union():
    unary = Vocabulary((("S", 1),))
    schemes = enumerate_schemes(unary, 0, 0, 0, k_star=1, budget=2 ** 20)
    du = disjoint_union_scheme()
    du_ext = table_extension(du, unary)
    assert any(table_extension(s, unary) == du_ext for s in schemes)


def test_enumerate_schemes_budget_refusal():
    with pytest.raises(BudgetError):
        enumerate_schemes(GRAPHS, 1, 1, 1, k_star=2, budget=1000)


def test_pattern_keys_unique_and_union_values():
    unary = Vocabulary((("S", 1),))
    probe = plain_union_scheme(1, 1, 1, ((0, 0),), result_refs=(("s", 0, 0),))
    patterns = list(enumerate_patterns(unary, probe, "S"))
    keys = [pattern_key(p) for p in patterns]
    assert len(set(keys)) == len(keys) == count_patterns(unary, probe, "S")
    for p in patterns:
        assert pattern_union_value(p, unary) in (True, False)


def test_scheme_file_roundtrip():
    for s in (CHAIN, GLUE_POINT, disjoint_union_scheme(),
              Scheme(2, 1, 1, ((0, 0),), (True, False), (True,), (("s", 0, 0),),
                     (("E", ("const", True)),))):
        parsed = parse_scheme(serialize_scheme(s))
        assert parsed == s and parsed.scheme_id == s.scheme_id


def test_scheme_file_with_overrides_roundtrip():
    unary = Vocabulary((("S", 1),))
    schemes = enumerate_schemes(unary, 1, 1, 0, k_star=1, budget=2 ** 20)
    sample = schemes[len(schemes) // 3]
    assert parse_scheme(serialize_scheme(sample)) == sample


def test_scheme_validation():
    with pytest.raises(SignatureError):
        Scheme(1, 1, 1, ((0, 0),), (True,), (False,))     # joint flag mismatch
    with pytest.raises(SignatureError):
        Scheme(1, 1, 1, (), (False,), (True,), (("1", 0),))  # result ref dropped
    with pytest.raises(SignatureError):
        Scheme(0, 0, 1, (), (), (), (("1", 0),))          # ref out of range

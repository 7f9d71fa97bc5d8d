import itertools
import random

import pytest

from hintikka.structures import Structure, Vocabulary


def rand_structure(vocab, size, rng):
    """Seeded random structure; constants sampled without replacement."""
    rels = []
    for _, ar in vocab.predicates:
        tuples = list(itertools.product(range(size), repeat=ar))
        rels.append(frozenset(t for t in tuples if rng.random() < 0.4))
    consts = tuple(rng.sample(range(size), vocab.num_consts))
    sets = tuple(frozenset(e for e in range(size) if rng.random() < 0.5)
                 for _ in range(vocab.num_sets))
    return Structure(vocab, size, tuple(rels), consts, sets)


@pytest.fixture
def graphs():
    return Vocabulary((("E", 2),))


def triangle(num_consts=0, consts=()):
    v = Vocabulary((("E", 2),), num_consts)
    edges = frozenset({(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)})
    return Structure(v, 3, (edges,), tuple(consts))


def k2_graph(num_consts=0, consts=()):
    v = Vocabulary((("E", 2),), num_consts)
    return Structure(v, 2, (frozenset({(0, 1), (1, 0)}),), tuple(consts))


def matching_graph(pairs):
    """Disjoint union of `pairs` single edges."""
    v = Vocabulary((("E", 2),))
    edges = set()
    for i in range(pairs):
        edges |= {(2 * i, 2 * i + 1), (2 * i + 1, 2 * i)}
    return Structure(v, 2 * pairs, (frozenset(edges),))

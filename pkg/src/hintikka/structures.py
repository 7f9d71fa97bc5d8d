"""Finite relational structures with named constants and unary set expansions.

The universe is always {0..size-1}. Relations are sets of tuples, constants
a list of elements, sets a list of element subsets. Values are immutable
after construction and safe to share.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .config import DEFAULT, Config
from .errors import HintikkaError, ParseError


@dataclass(frozen=True)
class Vocabulary:
    """Predicate symbols plus counts of constants and distinguished sets.

    ``predicates`` is a tuple of (name, arity) pairs; the distinguished unary
    set predicates are implicitly named P0..P{num_sets-1}.
    """

    predicates: tuple
    num_consts: int = 0
    num_sets: int = 0

    def __post_init__(self):
        object.__setattr__(self, "predicates", tuple((str(n), int(a)) for n, a in self.predicates))
        names = [n for n, _ in self.predicates]
        if len(set(names)) != len(names):
            raise HintikkaError(f"duplicate predicate names in {names}")
        for n, a in self.predicates:
            if a < 1:
                raise HintikkaError(f"predicate {n} has arity {a} < 1")
            if n.startswith("P") and n[1:].isdigit():
                raise HintikkaError(f"predicate name {n} collides with set-predicate naming")
        if self.num_consts < 0 or self.num_sets < 0:
            raise HintikkaError("negative constant or set count")

    @property
    def arity(self) -> int:
        return max([1] + [a for _, a in self.predicates])

    def pred_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.predicates):
            if n == name:
                return i
        raise HintikkaError(f"unknown predicate {name!r}")

    def with_sets(self, num_sets: int) -> "Vocabulary":
        return Vocabulary(self.predicates, self.num_consts, num_sets)

    def with_consts(self, num_consts: int) -> "Vocabulary":
        return Vocabulary(self.predicates, num_consts, self.num_sets)

    def key(self) -> tuple:
        return self.predicates

    def sig(self) -> str:
        return ",".join(f"{n}/{a}" for n, a in self.predicates) or "-"


def parse_vocab_sig(text: str) -> tuple:
    """Parse "E/2,S/1" (or "-" for empty) into a predicate tuple."""
    text = text.strip()
    if text in ("", "-"):
        return ()
    preds = []
    for item in text.replace(",", " ").split():
        if "/" not in item:
            raise ParseError(f"expected Name/arity, got {item!r}")
        name, arity = item.rsplit("/", 1)
        try:
            preds.append((name, int(arity)))
        except ValueError:
            raise ParseError(f"bad arity in {item!r}")
    return tuple(preds)


@dataclass(frozen=True)
class Structure:
    """A finite model: relations, constants, and set expansions over {0..size-1}."""

    vocab: Vocabulary
    size: int
    relations: tuple = ()   # per predicate, frozenset of tuples
    consts: tuple = ()      # element per constant
    sets: tuple = ()        # per set predicate, frozenset of elements

    def __post_init__(self):
        rels = list(self.relations) + [frozenset()] * (len(self.vocab.predicates) - len(self.relations))
        object.__setattr__(self, "relations", tuple(frozenset(map(tuple, r)) for r in rels))
        object.__setattr__(self, "consts", tuple(self.consts))
        ss = list(self.sets) + [frozenset()] * (self.vocab.num_sets - len(self.sets))
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in ss))
        if len(self.relations) != len(self.vocab.predicates):
            raise HintikkaError("relation count does not match vocabulary")
        if len(self.consts) != self.vocab.num_consts:
            raise HintikkaError(f"expected {self.vocab.num_consts} constants, got {len(self.consts)}")
        if len(self.sets) != self.vocab.num_sets:
            raise HintikkaError(f"expected {self.vocab.num_sets} sets, got {len(self.sets)}")
        if self.size < 0:
            raise HintikkaError("negative size")
        if self.size == 0 and self.consts:
            raise HintikkaError("empty universe requires zero constants")
        for (name, arity), rel in zip(self.vocab.predicates, self.relations):
            for tup in rel:
                if len(tup) != arity:
                    raise HintikkaError(f"arity mismatch in {name}: {tup}")
                if any(not (0 <= e < self.size) for e in tup):
                    raise HintikkaError(f"out-of-range element in {name}: {tup}")
        for i, c in enumerate(self.consts):
            if not (0 <= c < self.size):
                raise HintikkaError(f"constant {i} out of range: {c}")
        for j, s in enumerate(self.sets):
            if any(not (0 <= e < self.size) for e in s):
                raise HintikkaError(f"set {j} has out-of-range element")

    def rel(self, name: str) -> frozenset:
        return self.relations[self.vocab.pred_index(name)]

    def key(self) -> tuple:
        """Canonical hashable identity (used for memoisation)."""
        return (
            self.vocab.key(), self.size,
            tuple(tuple(sorted(r)) for r in self.relations),
            self.consts,
            tuple(tuple(sorted(s)) for s in self.sets),
        )

    def with_extra_set(self, members) -> "Structure":
        return Structure(
            self.vocab.with_sets(self.vocab.num_sets + 1),
            self.size, self.relations, self.consts,
            self.sets + (frozenset(members),),
        )


def serialize_structure(m: Structure) -> str:
    lines = [f"vocab {' '.join(f'{n}/{a}' for n, a in m.vocab.predicates)}".rstrip()]
    lines.append(f"consts {m.vocab.num_consts}")
    lines.append(f"sets {m.vocab.num_sets}")
    lines.append(f"size {m.size}")
    for i, c in enumerate(m.consts):
        lines.append(f"const {i} = {c}")
    for (name, _), rel in zip(m.vocab.predicates, m.relations):
        if rel:
            body = " ".join("(" + ",".join(map(str, t)) + ")" for t in sorted(rel))
            lines.append(f"rel {name}: {body}")
    for j, s in enumerate(m.sets):
        if s:
            lines.append(f"set {j}: {' '.join(map(str, sorted(s)))}")
    return "\n".join(lines) + "\n"


def parse_structure(text: str) -> Structure:
    """Parse the line-oriented structure grammar (see serialize_structure)."""
    preds = None
    num_consts = num_sets = size = None
    const_lines, rel_lines, set_lines = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kw = parts[0]
        try:
            if kw == "vocab":
                preds = parse_vocab_sig(" ".join(parts[1:]))
            elif kw == "consts":
                num_consts = int(parts[1])
            elif kw == "sets":
                num_sets = int(parts[1])
            elif kw == "size":
                size = int(parts[1])
            elif kw == "const":
                if len(parts) != 4 or parts[2] != "=":
                    raise ParseError("expected 'const <i> = <element>'", lineno)
                const_lines.append((lineno, int(parts[1]), int(parts[3])))
            elif kw == "rel":
                rel_lines.append((lineno, line))
            elif kw == "set":
                set_lines.append((lineno, line))
            else:
                raise ParseError(f"unknown keyword {kw!r}", lineno)
        except (ValueError, IndexError):
            raise ParseError(f"malformed line: {raw.strip()!r}", lineno)
    if preds is None:
        raise ParseError("missing 'vocab' line")
    if size is None:
        raise ParseError("missing 'size' line")
    vocab = Vocabulary(preds, num_consts or 0, num_sets or 0)

    consts = [None] * vocab.num_consts
    for lineno, i, e in const_lines:
        if not (0 <= i < vocab.num_consts):
            raise ParseError(f"constant index {i} out of range", lineno)
        consts[i] = e
    if any(c is None for c in consts):
        raise ParseError("missing 'const' line for some constant")

    relations = [set() for _ in vocab.predicates]
    for lineno, line in rel_lines:
        head, _, body = line.partition(":")
        name = head.split()[1]
        try:
            idx = vocab.pred_index(name)
        except HintikkaError:
            raise ParseError(f"unknown relation {name!r}", lineno)
        arity = vocab.predicates[idx][1]
        for token in body.split():
            if not (token.startswith("(") and token.endswith(")")):
                raise ParseError(f"expected (e,...,e), got {token!r}", lineno)
            try:
                tup = tuple(int(x) for x in token[1:-1].split(",") if x != "")
            except ValueError:
                raise ParseError(f"bad tuple {token!r}", lineno)
            if len(tup) != arity:
                raise ParseError(f"arity mismatch for {name}: {token}", lineno)
            relations[idx].add(tup)

    sets = [set() for _ in range(vocab.num_sets)]
    for lineno, line in set_lines:
        head, _, body = line.partition(":")
        j = int(head.split()[1])
        if not (0 <= j < vocab.num_sets):
            raise ParseError(f"set index {j} out of range", lineno)
        sets[j].update(int(x) for x in body.split())

    try:
        return Structure(vocab, size, tuple(relations), tuple(consts), tuple(sets))
    except HintikkaError as exc:
        raise ParseError(str(exc))


def incidence_graph(n: int) -> Structure:
    """Incidence graph of the complete graph K_n.

    Nodes 0..n-1 are the K_n vertices; node n + t is the subdivision point of
    the t-th pair (i, j), i < j, in lexicographic order. Edges join each pair
    node to its two endpoints (both orientations stored).
    """
    if n < 2:
        raise HintikkaError(f"incidence graph needs n >= 2, got {n}")
    vocab = Vocabulary((("E", 2),))
    pairs = list(itertools.combinations(range(n), 2))
    size = n + len(pairs)
    edges = set()
    for t, (i, j) in enumerate(pairs):
        c = n + t
        edges.update([(i, c), (c, i), (j, c), (c, j)])
    return Structure(vocab, size, (frozenset(edges),))


def path_graph(n: int, num_consts: int = 0, const_elems: tuple = ()) -> Structure:
    """Path on n vertices 0-1-...-(n-1) as a symmetric edge relation."""
    vocab = Vocabulary((("E", 2),), num_consts)
    edges = set()
    for i in range(n - 1):
        edges.update([(i, i + 1), (i + 1, i)])
    return Structure(vocab, n, (frozenset(edges),), tuple(const_elems))


def apply_permutation(m: Structure, pi) -> Structure:
    """Relabel every element through the bijection pi on {0..size-1}."""
    pi = tuple(pi)
    if sorted(pi) != list(range(m.size)):
        raise HintikkaError(f"not a bijection on 0..{m.size - 1}: {pi}")
    rels = tuple(frozenset(tuple(pi[e] for e in t) for t in r) for r in m.relations)
    consts = tuple(pi[c] for c in m.consts)
    sets = tuple(frozenset(pi[e] for e in s) for s in m.sets)
    return Structure(m.vocab, m.size, rels, consts, sets)


def enumeration_count(vocab: Vocabulary, size: int) -> int:
    total = 1
    for _, arity in vocab.predicates:
        total *= 2 ** (size ** arity)
    total *= size ** vocab.num_consts if vocab.num_consts else 1
    if vocab.num_consts and size == 0:
        total = 0
    total *= 2 ** (size * vocab.num_sets)
    return total


def enumerate_structures(vocab: Vocabulary, size: int, config: Config = DEFAULT):
    """Yield every labeled structure of the given size exactly once.

    Order: constant assignments (lexicographic), then set assignments
    (bitmask order per set), then relation subsets (bitmask order per
    predicate, tuples lexicographic). Refuses if the relation-subset space
    exceeds the enumeration budget.
    """
    rel_bits = sum(size ** a for _, a in vocab.predicates)
    config.check("enum_bits", rel_bits, config.enum_bits_max)
    config.check("enum_bits", size * vocab.num_sets, config.enum_bits_max)

    if size == 0:
        if vocab.num_consts == 0:
            yield Structure(vocab, 0)
        return

    tuple_lists = [sorted(itertools.product(range(size), repeat=a)) for _, a in vocab.predicates]
    universe = list(range(size))

    for consts in itertools.product(universe, repeat=vocab.num_consts):
        for set_masks in itertools.product(range(2 ** size), repeat=vocab.num_sets):
            sets = tuple(frozenset(e for e in universe if mask >> e & 1) for mask in set_masks)
            for rel_masks in itertools.product(*(range(2 ** len(tl)) for tl in tuple_lists)):
                rels = tuple(
                    frozenset(t for b, t in enumerate(tl) if mask >> b & 1)
                    for mask, tl in zip(rel_masks, tuple_lists)
                )
                yield Structure(vocab, size, rels, consts, sets)

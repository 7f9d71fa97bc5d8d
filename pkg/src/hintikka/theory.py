"""Depth-n monadic theories: computation, canonical interning, formal spaces.

A depth-0 theory is the set of quantifier-free diagrams realized by tuples
of length arity+1 (repetitions allowed) together with the constant diagram.
A depth-(n+1) theory over m set columns is the finite set of depth-n
theories over m+1 columns, one per subset of the universe. Theories are
hereditarily finite values; the interner gives them stable identities and
platform-independent digests.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import threading
from dataclasses import dataclass, field

from .config import DEFAULT, Config
from .diagrams import DiagramEngine, canonical_eq, subdiagram
from .errors import BudgetError, HintikkaError, SignatureError
from .structures import Structure, Vocabulary


class _Rec:
    __slots__ = ("depth", "vocab_key", "m", "k", "payload", "const_diag", "digest")

    def __init__(self, depth, vocab_key, m, k, payload, const_diag, digest):
        self.depth = depth
        self.vocab_key = vocab_key
        self.m = m
        self.k = k
        self.payload = payload
        self.const_diag = const_diag
        self.digest = digest


class Interner:
    """Append-only canonical store; get-or-insert is atomic.

    Depth-0 payloads are (sorted diagram tuple, constant diagram); deeper
    payloads are sorted tuples of member ids. Digests hash the canonical
    structural form (member digests, not local ids), so they are stable
    across runs, platforms, and interner instances.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._ids = {}
        self._recs = []
        self.theory_memo = {}
        self.transfer_memo = {}
        self._by_digest = {}

    def _insert(self, key, rec_builder):
        with self._lock:
            tid = self._ids.get(key)
            if tid is not None:
                return tid
            rec = rec_builder()
            tid = len(self._recs)
            self._ids[key] = tid
            self._recs.append(rec)
            self._by_digest.setdefault(rec.digest, tid)
            return tid

    def intern_depth0(self, vocab_key, m, k, realized, const_diag) -> int:
        payload = tuple(sorted(realized))
        key = (0, vocab_key, m, k, payload, const_diag)

        def build():
            digest = _sha(("t0", vocab_key, m, k, payload, const_diag))
            return _Rec(0, vocab_key, m, k, payload, const_diag, digest)

        return self._insert(key, build)

    def intern_node(self, depth, vocab_key, m, k, child_ids) -> int:
        payload = tuple(sorted(set(child_ids)))
        key = (depth, vocab_key, m, k, payload)

        def build():
            child_digests = tuple(sorted(self._recs[c].digest for c in payload))
            digest = _sha(("t", depth, vocab_key, m, k, child_digests))
            const_diag = None
            if payload:
                inner = self._recs[payload[0]].const_diag
                if inner is not None:
                    const_diag = restrict_const_diag(inner, m)
            return _Rec(depth, vocab_key, m, k, payload, const_diag, digest)

        return self._insert(key, build)

    def rec(self, tid: int) -> _Rec:
        return self._recs[tid]

    def by_digest(self, digest: str):
        return self._by_digest.get(digest)

    def __len__(self):
        return len(self._recs)


def _sha(obj) -> str:
    return hashlib.sha256(repr(obj).encode("utf-8")).hexdigest()


def restrict_const_diag(const_diag, m: int):
    """Drop set columns beyond the first m from a constant diagram."""
    v, eq, rel, sets = const_diag
    return (v, eq, rel, sets[:m])


_DEFAULT_INTERNER = Interner()


def default_interner() -> Interner:
    return _DEFAULT_INTERNER


@dataclass(frozen=True)
class Theory:
    """Handle to an interned theory value."""

    interner: Interner = field(repr=False)
    intern_id: int

    @property
    def _rec(self):
        return self.interner.rec(self.intern_id)

    @property
    def depth(self):
        return self._rec.depth

    @property
    def m(self):
        return self._rec.m

    @property
    def k(self):
        return self._rec.k

    @property
    def vocab_key(self):
        return self._rec.vocab_key

    @property
    def payload(self):
        return self._rec.payload

    @property
    def digest(self):
        return self._rec.digest

    @property
    def const_diag(self):
        return self._rec.const_diag

    def children(self) -> tuple:
        if self.depth == 0:
            raise HintikkaError("depth-0 theory has no member theories")
        return tuple(Theory(self.interner, c) for c in self.payload)

    def sig_str(self) -> str:
        return ",".join(f"{n}/{a}" for n, a in self.vocab_key) or "-"

    def dump(self) -> str:
        header = (
            f"theory depth={self.depth} tau={self.sig_str()} "
            f"m={self.m} k={self.k} digest={self.digest}"
        )
        return header + "\n" + self._render() + "\n"

    def _render(self) -> str:
        if self.depth == 0:
            return f"#{self.intern_id}"
        return "{" + ",".join(c._render() for c in self.children()) + "}"


def compute_theory(m: Structure, n: int, interner: Interner = None,
                   config: Config = DEFAULT) -> Theory:
    """Th^n(M, sets, consts): definition-faithful, exponential in n."""
    interner = interner or default_interner()
    config.check("theory_depth", n, config.n_max)
    if n >= 2:
        config.check("theory_depth2_size", m.size, config.depth2_size_max)
    config.check("theory_bits", m.size * max(n, 1), config.theory_bits_max)

    memo_key = (m.key(), n)
    cached = interner.theory_memo.get(memo_key)
    if cached is not None:
        return Theory(interner, cached)

    vocab = m.vocab
    r = vocab.arity + 1
    engine = DiagramEngine(m, r)
    vocab_key = vocab.key()
    k = vocab.num_consts
    base_m = vocab.num_sets
    all_masks = tuple(range(2 ** m.size))
    local_cache = {}

    def intern_local(ids, cid, m_eff):
        key = (ids, cid)
        tid = local_cache.get(key)
        if tid is None:
            realized = frozenset(engine.resolve_local(l) for l in ids)
            cdiag = engine.resolve_local(cid)
            tid = interner.intern_depth0(vocab_key, m_eff, k, realized, cdiag)
            local_cache[key] = tid
        return tid

    def rec(extra, depth):
        m_eff = base_m + len(extra)
        if depth == 0:
            ids, cid = engine.th0_local(extra)
            return intern_local(ids, cid, m_eff)
        children = {rec(extra + (u,), depth - 1) for u in all_masks}
        return interner.intern_node(depth, vocab_key, m_eff, k, children)

    tid = rec((), n)
    interner.theory_memo[memo_key] = tid
    return Theory(interner, tid)


# ---------------------------------------------------------------------------
# Formal theory spaces (Claim: TH^{n+1} is the powerset of TH^n one set up)
# ---------------------------------------------------------------------------

def _all_eq_tuples(nslots: int):
    """All canonical first-occurrence partitions of nslots slots."""
    if nslots == 0:
        yield ()
        return
    def rec(prefix, used):
        pos = len(prefix)
        if pos == nslots:
            yield tuple(prefix)
            return
        for c in range(used + 1):
            yield from rec(prefix + [c], max(used, c + 1))
    yield from rec([], 0)


def _diagram_universe(vocab: Vocabulary, r: int, budget: int, config: Config):
    """Every syntactically complete diagram over r variables + k constants."""
    k = vocab.num_consts
    m = vocab.num_sets
    arities = tuple(a for _, a in vocab.predicates)
    diagrams = []
    for eq in _all_eq_tuples(r + k):
        n = max(eq) + 1 if eq else 0
        bits = sum(n ** a for a in arities) + n * m
        config.check("formal_space", bits, 24)
        rel_spaces = [list(itertools.product((False, True), repeat=n ** a)) for a in arities]
        set_space = list(itertools.product((False, True), repeat=n))
        for rel in itertools.product(*rel_spaces):
            for sets in itertools.product(set_space, repeat=m):
                diagrams.append((r, eq, tuple(rel), tuple(sets)))
    return diagrams


def _substitution_closure(diagrams, r: int, arities, k: int):
    """Map diagram -> frozenset of all substitution images (the diagram of
    (a_{f(0)},...,a_{f(r-1)}) for every slot map f), transitively closed."""
    index = {d: i for i, d in enumerate(diagrams)}
    direct = []
    const_slots = list(range(r, r + k))
    maps = list(itertools.product(range(r), repeat=r))
    for d in diagrams:
        imgs = set()
        for f in maps:
            img = subdiagram(d, list(f) + const_slots, arities, new_v=r)
            imgs.add(index[img])
        direct.append(imgs)
    closures = [None] * len(diagrams)
    for i in range(len(diagrams)):
        seen = {i}
        stack = [i]
        while stack:
            cur = stack.pop()
            for nxt in direct[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        closures[i] = frozenset(seen)
    return closures


@dataclass(frozen=True)
class FormalTheorySpace:
    """Formally possible theory values at one signature.

    Depth 0 is materialized (interned ids); deeper spaces are symbolic
    powersets of the space one set-column up, with membership decided
    recursively and cardinality available without materialization.
    """

    vocab: Vocabulary
    depth: int
    cardinality: int
    base_ids: frozenset = None
    inner: "FormalTheorySpace" = None
    interner: Interner = field(default=None, repr=False, compare=False)

    def contains(self, theory: Theory) -> bool:
        rec = theory._rec
        if rec.depth != self.depth or rec.vocab_key != self.vocab.key():
            return False
        if rec.m != self.vocab.num_sets or rec.k != self.vocab.num_consts:
            return False
        if self.depth == 0:
            return theory.intern_id in self.base_ids
        return all(self.inner.contains(c) for c in theory.children())

    def members(self):
        """Iterate members as Theory handles (materializes; keep spaces small)."""
        if self.depth == 0:
            for tid in sorted(self.base_ids):
                yield Theory(self.interner, tid)
            return
        inner_ids = sorted(t.intern_id for t in self.inner.members())
        vk = self.vocab.key()
        for n_take in range(len(inner_ids) + 1):
            for combo in itertools.combinations(inner_ids, n_take):
                tid = self.interner.intern_node(
                    self.depth, vk, self.vocab.num_sets, self.vocab.num_consts, combo)
                yield Theory(self.interner, tid)


def enumerate_formal(vocab: Vocabulary, n: int, budget: int = None,
                     interner: Interner = None, config: Config = DEFAULT) -> FormalTheorySpace:
    """The space of formally possible depth-n theories over vocab's (m, k).

    Depth 0 applies local consistency closure (substitution closure, constant
    coherence, nonemptiness when k >= 1); depth n+1 is the full powerset of
    the depth-n space over m+1 sets. Refuses when the cardinality exceeds the
    budget. Soundness contract: every realizable theory is a member.
    """
    interner = interner or default_interner()
    budget = budget if budget is not None else config.formal_budget
    if n > 0:
        inner = enumerate_formal(vocab.with_sets(vocab.num_sets + 1), n - 1,
                                 budget, interner, config)
        if inner.cardinality > max(budget.bit_length(), 1):
            raise BudgetError("formal_space", f"2^{inner.cardinality}", budget)
        card = 2 ** inner.cardinality
        if card > budget:
            raise BudgetError("formal_space", card, budget)
        return FormalTheorySpace(vocab, n, card, inner=inner, interner=interner)

    r = vocab.arity + 1
    k = vocab.num_consts
    arities = tuple(a for _, a in vocab.predicates)

    # cheap lower bound before materializing anything: all-distinct diagrams
    # are maximal, so each orbit of them doubles the downset count
    full_n = r + k
    full_bits = sum(full_n ** a for a in arities) + full_n * vocab.num_sets
    lb_orbits = (2 ** full_bits) // math.factorial(r)
    if lb_orbits > budget.bit_length() + 64:
        raise BudgetError("formal_space", f">=2^{lb_orbits}", budget)

    diagrams = _diagram_universe(vocab, r, budget, config)
    closures = _substitution_closure(diagrams, r, arities, k)

    # group mutually-substitutable diagrams (permutation orbits) into one unit
    orbit_of = {}
    orbits = []
    for i in range(len(diagrams)):
        if i in orbit_of:
            continue
        members = frozenset(j for j in closures[i] if i in closures[j])
        oid = len(orbits)
        orbits.append(members)
        for j in members:
            orbit_of[j] = oid
    orbit_closure = []
    for oid, members in enumerate(orbits):
        req = set()
        for i in members:
            req.update(orbit_of[j] for j in closures[i])
        req.discard(oid)
        orbit_closure.append(frozenset(req))

    order = sorted(range(len(orbits)), key=lambda o: (len(orbit_closure[o]), sorted(orbits[o])))
    pos = {o: p for p, o in enumerate(order)}
    req_masks = []
    for p, o in enumerate(order):
        mask = 0
        for dep in orbit_closure[o]:
            if pos[dep] > p:
                raise HintikkaError("internal: closure ordering violated")
            mask |= 1 << pos[dep]
        req_masks.append(mask)

    const_slots = list(range(r, r + k))
    group_of = [subdiagram(d, const_slots, arities, new_v=0) for d in diagrams]
    orbit_group = []
    for members in orbits:
        gs = {group_of[i] for i in members}
        if len(gs) != 1:
            raise HintikkaError("internal: orbit mixes constant restrictions")
        orbit_group.append(gs.pop())

    groups = sorted(set(orbit_group), key=repr)
    member_ids = set()
    count = 0
    vk = vocab.key()
    mm = vocab.num_sets

    for group in groups:
        idxs = [p for p, o in enumerate(order) if orbit_group[o] == group]

        # count with abort before materializing
        counter = [0]

        def dfs_count(i, mask):
            if counter[0] > budget:
                return
            if i == len(idxs):
                if not (mask == 0 and k >= 1):
                    counter[0] += 1
                return
            dfs_count(i + 1, mask)
            p = idxs[i]
            if req_masks[p] & ~mask == 0:
                dfs_count(i + 1, mask | (1 << p))

        dfs_count(0, 0)
        count += counter[0]
        if count > budget:
            raise BudgetError("formal_space", f">{count}", budget)

        sels = []

        def dfs(i, mask):
            if i == len(idxs):
                if not (mask == 0 and k >= 1):
                    sels.append(mask)
                return
            dfs(i + 1, mask)
            p = idxs[i]
            if req_masks[p] & ~mask == 0:
                dfs(i + 1, mask | (1 << p))

        dfs(0, 0)
        for mask in sels:
            diags = set()
            for p, o in enumerate(order):
                if mask >> p & 1:
                    for i in orbits[o]:
                        diags.add(diagrams[i])
            tid = interner.intern_depth0(vk, mm, k, frozenset(diags), group)
            member_ids.add(tid)

    return FormalTheorySpace(vocab, 0, count, base_ids=frozenset(member_ids),
                             interner=interner)


# ---------------------------------------------------------------------------
# Small-model theory tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmallModels:
    """Theories of all models with at most k_star elements, with realized
    sizes and one smallest witness structure per theory."""

    entries: tuple          # ((theory_id, sorted sizes tuple), ...)
    witnesses: dict = field(compare=False)

    def sizes_of(self, tid):
        for t, sizes in self.entries:
            if t == tid:
                return sizes
        return ()

    def theory_ids(self):
        return tuple(t for t, _ in self.entries)


def small_model_theories(vocab: Vocabulary, n: int, k_star: int,
                         interner: Interner = None, config: Config = DEFAULT,
                         include_empty: bool = None) -> SmallModels:
    from .structures import enumerate_structures

    interner = interner or default_interner()
    include_empty = config.include_empty_model if include_empty is None else include_empty
    sizes_by_theory = {}
    witnesses = {}
    lo = 0 if (include_empty and vocab.num_consts == 0) else 1
    for size in range(lo, k_star + 1):
        for m in enumerate_structures(vocab, size, config):
            tid = compute_theory(m, n, interner, config).intern_id
            sizes_by_theory.setdefault(tid, set()).add(size)
            if tid not in witnesses:
                witnesses[tid] = m
    entries = tuple(sorted((tid, tuple(sorted(s))) for tid, s in sizes_by_theory.items()))
    return SmallModels(entries, witnesses)


# ---------------------------------------------------------------------------
# Sentence-level agreement (bridge to the oracle)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AgreementReport:
    theories_equal: bool
    samples: int
    agreements: int
    disagreements: tuple

    @property
    def ok(self):
        return not self.disagreements


def theories_equal_on_sentences(m1: Structure, m2: Structure, d: int,
                                samples: int, seed: int,
                                interner: Interner = None,
                                config: Config = DEFAULT) -> AgreementReport:
    """If Th^d(M1) = Th^d(M2), random depth-<=d sentences must agree."""
    from .oracle import eval_formula, random_sentence

    interner = interner or default_interner()
    if m1.vocab != m2.vocab:
        raise SignatureError("structures have different vocabularies")
    t1 = compute_theory(m1, d, interner, config)
    t2 = compute_theory(m2, d, interner, config)
    if t1.intern_id != t2.intern_id:
        return AgreementReport(False, 0, 0, ())
    disagreements = []
    agreements = 0
    for i in range(samples):
        phi = random_sentence(m1.vocab, d, seed * 1_000_003 + i)
        if eval_formula(m1, phi, config=config) == eval_formula(m2, phi, config=config):
            agreements += 1
        else:
            disagreements.append(phi)
    return AgreementReport(True, samples, agreements, tuple(disagreements))

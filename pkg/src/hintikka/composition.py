"""Gluing schemes, the glue operation on structures, and the transfer
function on theories (the addition theorem).

A scheme amalgamates two structures over identified constants: constants may
be identified across parts, kept or dropped (dropped elements leave the
universe entirely), and every relation is redefined by a total truth table
over tuple patterns. A pattern records the equalities among positions, each
position's origin (non-constant of part 1 or 2, or a kept constant), and the
quantifier-free type of the part-projected subtuple in its own part. Tables
may therefore redefine relations even inside one part, clique-width style.

The transfer function computes the theory of the glued structure from the
parts' theories alone; glue is the oracle it is tested against.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field

from .config import DEFAULT, Config
from .diagrams import canonical_eq, rel_index, subdiagram, vars_distinct_nonconst
from .errors import BudgetError, HintikkaError, ParseError, SignatureError
from .structures import Structure, Vocabulary
from .theory import Interner, Theory, default_interner

REF_SHARED = "s"
REF_P1 = "1"
REF_P2 = "2"


def _ref_str(ref) -> str:
    if ref[0] == REF_SHARED:
        return f"1.{ref[1]}"          # canonical name of an identified pair
    return f"{ref[0]}.{ref[1]}"


@dataclass(frozen=True)
class Scheme:
    """Gluing recipe: identification, keep/drop flags, result constants, and
    per-predicate pattern tables.

    ``tables`` maps predicate names (including set predicates "P<j>") to
    specs: ("union",), ("const", bool), ("map", default, overrides) with
    default in {"union", False, True}, or ("random", seed). Predicates
    without an entry use plain union, which is also how the extra set
    columns introduced by theory depth are always handled.
    """

    k1: int
    k2: int
    k: int
    ident: tuple = ()
    keep1: tuple = None
    keep2: tuple = None
    result_refs: tuple = ()
    tables: tuple = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ident", tuple(sorted((int(i), int(j)) for i, j in self.ident)))
        keep1 = tuple(self.keep1) if self.keep1 is not None else (True,) * self.k1
        keep2 = tuple(self.keep2) if self.keep2 is not None else (True,) * self.k2
        object.__setattr__(self, "keep1", keep1)
        object.__setattr__(self, "keep2", keep2)
        object.__setattr__(self, "result_refs", tuple(self.result_refs))
        object.__setattr__(self, "tables", tuple(sorted(self.tables)))
        if len(keep1) != self.k1 or len(keep2) != self.k2:
            raise SignatureError("keep flags do not match constant counts")
        lhs = [i for i, _ in self.ident]
        rhs = [j for _, j in self.ident]
        if len(set(lhs)) != len(lhs) or len(set(rhs)) != len(rhs):
            raise SignatureError("identification is not a partial matching")
        if any(not (0 <= i < self.k1 and 0 <= j < self.k2) for i, j in self.ident):
            raise SignatureError("identification index out of range")
        for i, j in self.ident:
            if keep1[i] != keep2[j]:
                raise SignatureError("identified pair must be kept or dropped jointly")
        kept = set(self.kept_refs())
        if len(self.result_refs) != self.k:
            raise SignatureError("result constant count does not match k")
        if len(set(self.result_refs)) != self.k:
            raise SignatureError("result constants must be distinct references")
        if any(ref not in kept for ref in self.result_refs):
            raise SignatureError("result constant references a dropped constant")

    def matched1(self):
        return {i: j for i, j in self.ident}

    def matched2(self):
        return {j: i for i, j in self.ident}

    def entities(self):
        """Constant entities: identified pairs and unmatched constants."""
        m1, m2 = self.matched1(), self.matched2()
        ents = [((REF_SHARED, i, j), self.keep1[i]) for i, j in self.ident]
        ents += [((REF_P1, i), self.keep1[i]) for i in range(self.k1) if i not in m1]
        ents += [((REF_P2, j), self.keep2[j]) for j in range(self.k2) if j not in m2]
        return ents

    def kept_refs(self):
        return tuple(ref for ref, kept in self.entities() if kept)

    @property
    def j(self) -> int:
        """Size deficit: identified pairs plus dropped constant entities."""
        dropped = sum(1 for _, kept in self.entities() if not kept)
        return len(self.ident) + dropped

    @property
    def scheme_id(self) -> str:
        cached = getattr(self, "_scheme_id", None)
        if cached is None:
            payload = (self.k1, self.k2, self.k, self.ident, self.keep1,
                       self.keep2, self.result_refs, self.tables)
            cached = hashlib.sha256(repr(payload).encode("utf-8")).hexdigest()[:16]
            object.__setattr__(self, "_scheme_id", cached)
        return cached

    def table_spec(self, pred_name: str):
        for name, spec in self.tables:
            if name == pred_name:
                return spec
        return ("union",)


def plain_union_scheme(k1=0, k2=0, k=0, ident=(), keep1=None, keep2=None,
                       result_refs=(), name="plain-union") -> Scheme:
    """R^M = R^{M1} union R^{M2}; mixed tuples are never related."""
    return Scheme(k1, k2, k, ident, keep1, keep2, result_refs, (), name)


def disjoint_union_scheme() -> Scheme:
    return plain_union_scheme(name="disjoint-union")


def random_table_scheme(vocab: Vocabulary, k1, k2, k, seed, ident=(),
                        keep1=None, keep2=None, result_refs=()) -> Scheme:
    """Total tables decided by a PRF of the canonical pattern string."""
    names = [n for n, _ in vocab.predicates] + [f"P{j}" for j in range(vocab.num_sets)]
    tables = tuple((n, ("random", seed + idx)) for idx, n in enumerate(names))
    return Scheme(k1, k2, k, ident, keep1, keep2, result_refs, tables,
                  name=f"random-{seed}")


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------

def pattern_key(pattern) -> str:
    pred, eq, origins, p1, p2 = pattern

    def _diag(d):
        v, deq, rel, sets = d
        rels = ",".join("".join("1" if b else "0" for b in r) for r in rel)
        ss = ",".join("".join("1" if b else "0" for b in s) for s in sets)
        return f"{','.join(map(str, deq))}|{rels}|{ss}"

    orig = ";".join(":".join(map(str, o)) for o in origins)
    return (f"{pred} eq={','.join(map(str, eq))} orig={orig} "
            f"p1=[{_diag(p1)}] p2=[{_diag(p2)}]")


_TABLE_CACHE = {}


def _table_value(scheme: Scheme, pred_name: str, pattern, union_value) -> bool:
    spec = scheme.table_spec(pred_name)
    kind = spec[0]
    if kind == "union":
        return union_value
    if kind == "const":
        return spec[1]
    key = pattern_key(pattern())
    cache_key = (scheme.scheme_id, key)
    cached = _TABLE_CACHE.get(cache_key)
    if cached is not None:
        return cached
    if kind == "map":
        overrides = dict(spec[2])
        if key in overrides:
            value = overrides[key]
        elif spec[1] == "union":
            value = union_value
        else:
            value = bool(spec[1])
    elif kind == "random":
        digest = hashlib.sha256(f"{spec[1]}|{key}".encode("utf-8")).digest()
        value = digest[0] & 1 == 1
    else:
        raise HintikkaError(f"unknown table spec {spec!r}")
    _TABLE_CACHE[cache_key] = value
    return value


# ---------------------------------------------------------------------------
# Glue
# ---------------------------------------------------------------------------

def glue(m1: Structure, m2: Structure, scheme: Scheme, config: Config = DEFAULT) -> Structure:
    """Amalgamate two structures along the scheme.

    The parts are treated as disjoint except for identified constants; each
    part's constants must be pairwise distinct for the size law to hold.
    """
    if m1.vocab.predicates != m2.vocab.predicates or m1.vocab.num_sets != m2.vocab.num_sets:
        raise SignatureError("parts have different vocabularies")
    if m1.vocab.num_consts != scheme.k1 or m2.vocab.num_consts != scheme.k2:
        raise SignatureError("constant counts do not match scheme")
    if len(set(m1.consts)) != scheme.k1 or len(set(m2.consts)) != scheme.k2:
        raise SignatureError("part constants must be pairwise distinct")

    preds = m1.vocab.predicates
    msets = m1.vocab.num_sets
    c1set, c2set = set(m1.consts), set(m2.consts)

    # element -> (part1 element or None, part2 element or None, ref or None)
    elems = []
    for e in range(m1.size):
        if e not in c1set:
            elems.append((e, None, None))
    for e in range(m2.size):
        if e not in c2set:
            elems.append((None, e, None))
    for ref, kept in scheme.entities():
        if not kept:
            continue
        if ref[0] == REF_SHARED:
            elems.append((m1.consts[ref[1]], m2.consts[ref[2]], ref))
        elif ref[0] == REF_P1:
            elems.append((m1.consts[ref[1]], None, ref))
        else:
            elems.append((None, m2.consts[ref[1]], ref))

    size = len(elems)
    if size != m1.size + m2.size - scheme.j:
        raise HintikkaError("internal: size law violated")

    def pattern_of(pred_name, tuple_idx):
        eq = canonical_eq(tuple_idx)
        nclasses = max(eq) + 1 if eq else 0
        class_elem = [None] * nclasses
        for pos, cls in enumerate(eq):
            if class_elem[cls] is None:
                class_elem[cls] = elems[tuple_idx[pos]]
        origins = []
        for cls in range(nclasses):
            e1, e2, ref = class_elem[cls]
            if ref is not None:
                origins.append(ref)
            elif e1 is not None:
                origins.append(("n1",))
            else:
                origins.append(("n2",))
        part1 = [class_elem[c][0] for c in range(nclasses) if class_elem[c][0] is not None]
        part2 = [class_elem[c][1] for c in range(nclasses) if class_elem[c][1] is not None]
        p1 = _vars_diagram(m1, part1)
        p2 = _vars_diagram(m2, part2)
        return (pred_name, eq, tuple(origins), p1, p2)

    def tuple_value(pred_name, rel1, rel2, tuple_idx):
        infos = [elems[i] for i in tuple_idx]
        in1 = all(e1 is not None for e1, _, _ in infos)
        in2 = all(e2 is not None for _, e2, _ in infos)
        union = False
        if in1 and tuple(e1 for e1, _, _ in infos) in rel1:
            union = True
        if not union and in2 and tuple(e2 for _, e2, _ in infos) in rel2:
            union = True
        return _table_value(scheme, pred_name, lambda: pattern_of(pred_name, tuple_idx), union)

    relations = []
    for (pname, arity), rel1, rel2 in zip(preds, m1.relations, m2.relations):
        rel = frozenset(
            t for t in itertools.product(range(size), repeat=arity)
            if tuple_value(pname, rel1, rel2, t)
        )
        relations.append(rel)

    sets = []
    for jcol in range(msets):
        s1, s2 = m1.sets[jcol], m2.sets[jcol]
        sets.append(frozenset(
            e for e in range(size)
            if tuple_value(f"P{jcol}", {(x,) for x in s1}, {(x,) for x in s2}, (e,))
        ))

    ref_to_new = {ref: idx for idx, (_, _, ref) in enumerate(elems) if ref is not None}
    consts = tuple(ref_to_new[ref] for ref in scheme.result_refs)
    vocab = Vocabulary(preds, scheme.k, msets)
    return Structure(vocab, size, tuple(relations), consts, tuple(sets))


def _vars_diagram(m: Structure, elements) -> tuple:
    """Quantifier-free type of a tuple in m: variables only, no constant slots."""
    eq = canonical_eq(elements)
    nclasses = max(eq) + 1 if eq else 0
    reps = [None] * nclasses
    for slot, cls in enumerate(eq):
        if reps[cls] is None:
            reps[cls] = elements[slot]
    rel = tuple(
        tuple(
            tuple(reps[c] for c in ct) in tuples
            for ct in itertools.product(range(nclasses), repeat=arity)
        )
        for (_, arity), tuples in zip(m.vocab.predicates, m.relations)
    )
    sets = tuple(tuple(r in col for r in reps) for col in m.sets)
    return (len(elements), eq, rel, sets)


# ---------------------------------------------------------------------------
# Transfer (the addition theorem)
# ---------------------------------------------------------------------------

def transfer(t1: Theory, t2: Theory, scheme: Scheme,
             interner: Interner = None, config: Config = DEFAULT) -> Theory:
    """F^n(t1, t2, s): the theory of any glue of representatives."""
    interner = interner or t1.interner
    if t1.interner is not t2.interner or t1.interner is not interner:
        raise SignatureError("theories come from different interners")
    if t1.vocab_key != t2.vocab_key or t1.depth != t2.depth or t1.m != t2.m:
        raise SignatureError("theories have different signatures")
    if t1.k != scheme.k1 or t2.k != scheme.k2:
        raise SignatureError("constant counts do not match scheme")
    tid = _transfer_id(t1.intern_id, t2.intern_id, scheme, interner, config, 0)
    return Theory(interner, tid)


def _transfer_id(i1: int, i2: int, scheme: Scheme, interner: Interner,
                 config: Config, lift: int) -> int:
    # lift counts the trailing set columns added by depth recursion; tables
    # never see them (the glued structure's relations predate those columns)
    memo_key = (i1, i2, scheme.scheme_id, lift)
    cached = interner.transfer_memo.get(memo_key)
    if cached is not None:
        return cached
    r1, r2 = interner.rec(i1), interner.rec(i2)
    _require_distinct_consts(r1)
    _require_distinct_consts(r2)
    if r1.depth == 0:
        result = _transfer_base(i1, i2, r1, r2, scheme, interner, config, lift)
    else:
        newest = r1.m  # children carry one extra set column
        children = set()
        for c1 in r1.payload:
            for c2 in r2.payload:
                if _compatible(interner.rec(c1), interner.rec(c2), scheme, newest):
                    children.add(_transfer_id(c1, c2, scheme, interner, config, lift + 1))
        result = interner.intern_node(r1.depth, r1.vocab_key, r1.m, scheme.k, children)
    interner.transfer_memo[memo_key] = result
    return result


def _require_distinct_consts(rec):
    cd = rec.const_diag
    if cd is None:
        raise SignatureError("theory carries no constant diagram")
    eq = cd[1]
    if len(set(eq)) != len(eq):
        raise SignatureError(
            "transfer requires pairwise-distinct constants in each part")


def _compatible(rec1, rec2, scheme: Scheme, newest: int) -> bool:
    """Set assignments on the parts combine into one on the glue exactly when
    identified constants agree on the newest column and dropped constants
    avoid it."""
    cd1, cd2 = rec1.const_diag, rec2.const_diag
    col1 = cd1[3][newest]
    col2 = cd2[3][newest]
    eq1, eq2 = cd1[1], cd2[1]
    for ref, kept in scheme.entities():
        if ref[0] == REF_SHARED:
            v1 = col1[eq1[ref[1]]]
            v2 = col2[eq2[ref[2]]]
            if kept and v1 != v2:
                return False
            if not kept and (v1 or v2):
                return False
        elif ref[0] == REF_P1:
            if not kept and col1[eq1[ref[1]]]:
                return False
        else:
            if not kept and col2[eq2[ref[1]]]:
                return False
    return True


def _slot_atoms(diag, arities):
    """Per predicate, atom values indexed by slot tuples; per set column,
    values per slot."""
    v, eq, rel, sets = diag
    nslots = len(eq)
    n = max(eq) + 1 if eq else 0
    rel_out = []
    for atoms, arity in zip(rel, arities):
        rel_out.append(tuple(
            atoms[rel_index(tuple(eq[s] for s in st), n)]
            for st in itertools.product(range(nslots), repeat=arity)
        ))
    set_out = tuple(tuple(col[eq[s]] for s in range(nslots)) for col in sets)
    return rel_out, set_out


_CONFIG_CACHE = {}


def _scheme_configs(scheme: Scheme, preds, r: int):
    """Per (partition, block-origin) configuration: result-diagram
    bookkeeping plus flat atom-index recipes into the part projections."""
    cache_key = (scheme.scheme_id, preds, r)
    cached = _CONFIG_CACHE.get(cache_key)
    if cached is not None:
        return cached
    arities = tuple(a for _, a in preds)
    kept = scheme.kept_refs()
    k1, k2, k = scheme.k1, scheme.k2, scheme.k
    configs = []
    for eq_vars in _partitions(r):
        nblocks = max(eq_vars) + 1 if eq_vars else 0
        for origins_blocks in _block_origins(nblocks, kept):
            entry = _build_config(eq_vars, origins_blocks, scheme, k1, k2, k, r)
            if entry is None:
                continue
            res_eq, class_origin, d1slot, d2slot, v1, v2 = entry
            nclasses = max(res_eq) + 1 if res_eq else 0
            ns1 = v1 + k1
            ns2 = v2 + k2
            rel_entries = []
            for arity in arities:
                entries = []
                for ct in itertools.product(range(nclasses), repeat=arity):
                    i1 = i2 = None
                    if all(d1slot[c] is not None for c in ct):
                        i1 = rel_index(tuple(d1slot[c] for c in ct), ns1)
                    if all(d2slot[c] is not None for c in ct):
                        i2 = rel_index(tuple(d2slot[c] for c in ct), ns2)
                    entries.append((i1, i2, ct, _pattern_skeleton(ct, class_origin,
                                                                  d1slot, d2slot)))
                rel_entries.append(tuple(entries))
            set_skeletons = tuple(
                _pattern_skeleton((c,), class_origin, d1slot, d2slot)
                for c in range(nclasses))
            configs.append((res_eq, class_origin, d1slot, d2slot, v1, v2,
                            nclasses, tuple(rel_entries), set_skeletons))
    _CONFIG_CACHE[cache_key] = configs
    return configs


def _pattern_skeleton(ct, class_origin, d1slot, d2slot):
    """Config-constant part of a tuple's pattern: equalities, origins, and
    the projection slots feeding each part type."""
    peq = canonical_eq(ct)
    pcls = []
    for pos, c in enumerate(peq):
        if c == len(pcls):
            pcls.append(ct[pos])
    porig = tuple(class_origin[c] for c in pcls)
    slots1 = tuple(d1slot[c] for c in pcls if d1slot[c] is not None)
    slots2 = tuple(d2slot[c] for c in pcls if d2slot[c] is not None)
    return (peq, porig, slots1, slots2)


def _sub_truncated(interner, diag, slots, base_m, arities):
    cache = getattr(interner, "_sub_cache", None)
    if cache is None:
        cache = interner._sub_cache = {}
    key = (diag, slots, base_m)
    out = cache.get(key)
    if out is None:
        p = subdiagram(diag, list(slots), arities, new_v=len(slots))
        out = (p[0], p[1], p[2], p[3][:base_m])
        cache[key] = out
    return out


def _pattern_value(interner, scheme, pname, skeleton, D1, D2, base_m,
                   arities, union):
    peq, porig, slots1, slots2 = skeleton
    sub1 = _sub_truncated(interner, D1, slots1, base_m, arities)
    sub2 = _sub_truncated(interner, D2, slots2, base_m, arities)
    cache = getattr(interner, "_patval_cache", None)
    if cache is None:
        cache = interner._patval_cache = {}
    key = (scheme.scheme_id, pname, peq, porig, sub1, sub2, union)
    val = cache.get(key)
    if val is None:
        pattern = (pname, peq, porig, sub1, sub2)
        val = _table_value(scheme, pname, lambda: pattern, union)
        cache[key] = val
    return val


def _projections(interner: Interner, tid: int, rec, r: int, arities, kc: int):
    """Realized prefix projections of a depth-0 theory by variable count,
    variables pairwise distinct and non-constant; cached on the interner,
    with per-diagram projection results shared across theories."""
    cache = getattr(interner, "_proj_cache", None)
    if cache is None:
        cache = interner._proj_cache = {}
    key = (tid, r)
    out = cache.get(key)
    if out is not None:
        return out
    dcache = getattr(interner, "_diag_proj_cache", None)
    if dcache is None:
        dcache = interner._diag_proj_cache = {}
    out = {0: (rec.const_diag,)}
    for v in range(1, r + 1):
        seen = {}
        for d in rec.payload:
            dkey = (d, v, kc)
            p = dcache.get(dkey)
            if p is None:
                proj = subdiagram(d, list(range(v)) + list(range(r, r + kc)),
                                  arities, new_v=v)
                p = proj if vars_distinct_nonconst(proj) else False
                dcache[dkey] = p
            if p is not False and p not in seen:
                seen[p] = True
        out[v] = tuple(seen)
    cache[key] = out
    return out


def _satoms_cached(interner: Interner, diag, arities):
    cache = getattr(interner, "_satoms_cache", None)
    if cache is None:
        cache = interner._satoms_cache = {}
    out = cache.get(diag)
    if out is None:
        out = _slot_atoms(diag, arities)
        cache[diag] = out
    return out


def _transfer_base(i1: int, i2: int, r1, r2, scheme: Scheme,
                   interner: Interner, config: Config, lift: int) -> int:
    vocab_key = r1.vocab_key
    preds = vocab_key
    arities = tuple(a for _, a in preds)
    m = r1.m
    k1, k2, k = scheme.k1, scheme.k2, scheme.k
    r = max([1] + [a for a in arities]) + 1

    R1 = _projections(interner, i1, r1, r, arities, k1)
    R2 = _projections(interner, i2, r2, r, arities, k2)

    set_names = tuple(f"P{j}" for j in range(m))
    base_m = m - lift
    specs = {name: scheme.table_spec(name)
             for name in [p for p, _ in preds] + list(set_names)}
    all_union = all(spec[0] == "union" for spec in specs.values())

    realized = set()
    configs = _scheme_configs(scheme, preds, r)
    if all_union:
        pack_cache = getattr(interner, "_pack_cache", None)
        if pack_cache is None:
            pack_cache = interner._pack_cache = {}
        sig_cache = getattr(interner, "_sig_cache", None)
        if sig_cache is None:
            sig_cache = interner._sig_cache = {}
        sid = scheme.scheme_id
        for cfg_idx, cfg in enumerate(configs):
            (res_eq, class_origin, d1slot, d2slot, v1, v2, nclasses,
             rel_entries, set_skeletons) = cfg
            packs1 = []
            for D1 in R1[v1]:
                key = (sid, r, cfg_idx, 1, m, D1)
                p = pack_cache.get(key)
                if p is None:
                    sa = _satoms_cached(interner, D1, arities)
                    p = _pack_side(sa, rel_entries, d1slot, m, side=1)
                    pack_cache[key] = p
                packs1.append(p)
            packs2 = []
            for D2 in R2[v2]:
                key = (sid, r, cfg_idx, 2, m, D2)
                p = pack_cache.get(key)
                if p is None:
                    sa = _satoms_cached(interner, D2, arities)
                    p = _pack_side(sa, rel_entries, d2slot, m, side=2)
                    pack_cache[key] = p
                packs2.append(p)
            sigs = set()
            for p1 in packs1:
                for p2 in packs2:
                    sigs.add(tuple(a | b for a, b in zip(p1, p2)))
            for sig in sigs:
                skey = (sid, r, cfg_idx, m, sig)
                diag = sig_cache.get(skey)
                if diag is None:
                    diag = _unpack_sig(sig, r, res_eq, rel_entries, m, nclasses)
                    sig_cache[skey] = diag
                realized.add(diag)
    else:
        for cfg in configs:
            (res_eq, class_origin, d1slot, d2slot, v1, v2, nclasses,
             rel_entries, set_skeletons) = cfg
            for D1 in R1[v1]:
                sa1 = _satoms_cached(interner, D1, arities)
                for D2 in R2[v2]:
                    sa2 = _satoms_cached(interner, D2, arities)
                    diag = _assemble_tables(r, res_eq, rel_entries, scheme, specs,
                                            preds, arities, set_names, set_skeletons,
                                            d1slot, d2slot, D1, D2, sa1, sa2,
                                            base_m, nclasses, interner)
                    realized.add(diag)

    if realized:
        const_diag = _const_restriction(sorted(realized)[0], r, k, arities)
    else:
        # glue of empty parts: only possible with k = 0
        const_diag = (0, (), tuple(() for _ in preds), tuple(() for _ in range(m)))
    return interner.intern_depth0(vocab_key, m, k, frozenset(realized), const_diag)


def _pack_side(sa, rel_entries, dslot, m, side):
    """Bitmask per predicate (and per set column) of this part's union
    contribution, aligned with the config's entry order."""
    out = []
    for pred_idx, entries in enumerate(rel_entries):
        sap = sa[0][pred_idx]
        mask = 0
        for e, (i1, i2, _, _) in enumerate(entries):
            idx = i1 if side == 1 else i2
            if idx is not None and sap[idx]:
                mask |= 1 << e
        out.append(mask)
    for jcol in range(m):
        col = sa[1][jcol]
        mask = 0
        for c, slot in enumerate(dslot):
            if slot is not None and col[slot]:
                mask |= 1 << c
        out.append(mask)
    return tuple(out)


def _unpack_sig(sig, r, res_eq, rel_entries, m, nclasses):
    rel_atoms = tuple(
        tuple(sig[p] >> e & 1 == 1 for e in range(len(rel_entries[p])))
        for p in range(len(rel_entries))
    )
    set_atoms = tuple(
        tuple(sig[len(rel_entries) + j] >> c & 1 == 1 for c in range(nclasses))
        for j in range(m)
    )
    return (r, res_eq, rel_atoms, set_atoms)


def _assemble_tables(r, res_eq, rel_entries, scheme, specs, preds, arities,
                     set_names, set_skeletons, d1slot, d2slot, D1, D2,
                     sa1, sa2, base_m, nclasses, interner):
    rel_atoms = []
    for pred_idx, (pname, _) in enumerate(preds):
        sa1p = sa1[0][pred_idx]
        sa2p = sa2[0][pred_idx]
        spec = specs[pname]
        kind = spec[0]
        vals = []
        for i1, i2, ct, skeleton in rel_entries[pred_idx]:
            union = (i1 is not None and sa1p[i1]) or (i2 is not None and sa2p[i2])
            if kind == "union":
                vals.append(union)
            elif kind == "const":
                vals.append(spec[1])
            else:
                vals.append(_pattern_value(interner, scheme, pname, skeleton,
                                           D1, D2, base_m, arities, union))
        rel_atoms.append(tuple(vals))

    set_atoms = []
    for jcol, sname in enumerate(set_names):
        col1 = sa1[1][jcol]
        col2 = sa2[1][jcol]
        spec = specs[sname]
        kind = spec[0]
        vals = []
        for c in range(nclasses):
            union = ((d1slot[c] is not None and col1[d1slot[c]]) or
                     (d2slot[c] is not None and col2[d2slot[c]]))
            if kind == "union":
                vals.append(union)
            elif kind == "const":
                vals.append(spec[1])
            else:
                vals.append(_pattern_value(interner, scheme, sname,
                                           set_skeletons[c], D1, D2, base_m,
                                           arities, union))
        set_atoms.append(tuple(vals))

    return (r, res_eq, tuple(rel_atoms), tuple(set_atoms))


def _partitions(n):
    if n == 0:
        yield ()
        return
    def rec(prefix, used):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for c in range(used + 1):
            yield from rec(prefix + [c], max(used, c + 1))
    yield from rec([], 0)


def _block_origins(nblocks, kept_refs):
    """Assign each block an origin: fresh part-1/2 element or a kept
    constant, constants injectively."""
    options = [("n1",), ("n2",)] + list(kept_refs)
    for combo in itertools.product(options, repeat=nblocks):
        refs = [o for o in combo if o[0] not in ("n1", "n2")]
        if len(refs) != len(set(refs)):
            continue
        yield combo


def _build_config(eq_vars, origins_blocks, scheme, k1, k2, k, r):
    """Resolve a variable partition plus block origins into result-diagram
    bookkeeping: eq over r+k slots, per-class origin, and per-class slot
    indices into the part projections."""
    entities = []
    for s in range(r):
        block = eq_vars[s]
        orig = origins_blocks[block]
        entities.append(orig if orig[0] not in ("n1", "n2") else ("b", block, orig[0]))
    for ref in scheme.result_refs:
        entities.append(ref)
    res_eq = canonical_eq(entities)
    nclasses = max(res_eq) + 1 if res_eq else 0
    class_entity = [None] * nclasses
    for pos, cls in enumerate(res_eq):
        if class_entity[cls] is None:
            class_entity[cls] = entities[pos]

    # variable slots of the part projections, in block order
    v1_blocks = [b for b in range(len(origins_blocks)) if origins_blocks[b] == ("n1",)]
    v2_blocks = [b for b in range(len(origins_blocks)) if origins_blocks[b] == ("n2",)]
    v1, v2 = len(v1_blocks), len(v2_blocks)

    class_origin = []
    d1slot = []
    d2slot = []
    for cls in range(nclasses):
        ent = class_entity[cls]
        if ent[0] == "b":
            block, partname = ent[1], ent[2]
            if partname == "n1":
                class_origin.append(("n1",))
                d1slot.append(v1_blocks.index(block))
                d2slot.append(None)
            else:
                class_origin.append(("n2",))
                d1slot.append(None)
                d2slot.append(v2_blocks.index(block))
        elif ent[0] == REF_SHARED:
            class_origin.append(ent)
            d1slot.append(v1 + ent[1])
            d2slot.append(v2 + ent[2])
        elif ent[0] == REF_P1:
            class_origin.append(ent)
            d1slot.append(v1 + ent[1])
            d2slot.append(None)
        else:
            class_origin.append(ent)
            d1slot.append(None)
            d2slot.append(v2 + ent[1])
    return (res_eq, tuple(class_origin), tuple(d1slot), tuple(d2slot), v1, v2)


def _const_restriction(diag, r, k, arities):
    return subdiagram(diag, list(range(r, r + k)), arities, new_v=0)


# ---------------------------------------------------------------------------
# Pattern enumeration and scheme enumeration
# ---------------------------------------------------------------------------

def _all_var_diagrams(nvars, preds, arities, m):
    """Every complete diagram over nvars pairwise-distinct variables."""
    eq = tuple(range(nvars))
    rel_spaces = [
        list(itertools.product((False, True), repeat=nvars ** a)) for a in arities
    ]
    set_space = list(itertools.product((False, True), repeat=nvars))
    for rel in itertools.product(*rel_spaces):
        for sets in itertools.product(set_space, repeat=m):
            yield (nvars, eq, tuple(rel), tuple(sets))


def _pattern_bits(nvars, arities, m) -> int:
    return sum(nvars ** a for a in arities) + nvars * m


def enumerate_patterns(vocab: Vocabulary, scheme: Scheme, pred_name: str):
    """All formally possible tuple patterns for one predicate under the
    scheme's identification/keep configuration."""
    preds = vocab.predicates
    arities = tuple(a for _, a in preds)
    m = vocab.num_sets
    if pred_name.startswith("P") and pred_name[1:].isdigit():
        arity = 1
    else:
        arity = dict(preds)[pred_name]
    kept = scheme.kept_refs()
    for eq in _partitions(arity):
        nclasses = max(eq) + 1 if eq else 0
        for origins in _block_origins(nclasses, kept):
            c1 = sum(1 for o in origins if o[0] in ("n1", REF_SHARED, REF_P1))
            c2 = sum(1 for o in origins if o[0] in ("n2", REF_SHARED, REF_P2))
            for p1 in _all_var_diagrams(c1, preds, arities, m):
                for p2 in _all_var_diagrams(c2, preds, arities, m):
                    yield (pred_name, eq, tuple(origins), p1, p2)


def count_patterns(vocab: Vocabulary, scheme: Scheme, pred_name: str) -> int:
    preds = vocab.predicates
    arities = tuple(a for _, a in preds)
    m = vocab.num_sets
    if pred_name.startswith("P") and pred_name[1:].isdigit():
        arity = 1
    else:
        arity = dict(preds)[pred_name]
    kept = scheme.kept_refs()
    total = 0
    for eq in _partitions(arity):
        nclasses = max(eq) + 1 if eq else 0
        for origins in _block_origins(nclasses, kept):
            c1 = sum(1 for o in origins if o[0] in ("n1", REF_SHARED, REF_P1))
            c2 = sum(1 for o in origins if o[0] in ("n2", REF_SHARED, REF_P2))
            total += 2 ** (_pattern_bits(c1, arities, m) + _pattern_bits(c2, arities, m))
    return total


def pattern_union_value(pattern, vocab: Vocabulary) -> bool:
    """The plain-union membership the pattern implies."""
    pred, eq, origins, p1, p2 = pattern
    preds = vocab.predicates
    if pred.startswith("P") and pred[1:].isdigit():
        pred_idx = None
        set_idx = int(pred[1:])
    else:
        pred_idx = [n for n, _ in preds].index(pred)
        set_idx = None
    in1 = all(origins[c][0] in ("n1", REF_SHARED, REF_P1) for c in eq)
    in2 = all(origins[c][0] in ("n2", REF_SHARED, REF_P2) for c in eq)
    nclasses = max(eq) + 1 if eq else 0
    slot1 = {}
    slot2 = {}
    for c in range(nclasses):
        o = origins[c]
        if o[0] in ("n1", REF_SHARED, REF_P1):
            slot1[c] = len(slot1)
        if o[0] in ("n2", REF_SHARED, REF_P2):
            slot2[c] = len(slot2)
    value = False
    if in1:
        ct = tuple(slot1[c] for c in eq)
        if set_idx is None:
            value = p1[2][pred_idx][rel_index(ct, max(len(slot1), 1))]
        else:
            value = p1[3][set_idx][ct[0]]
    if not value and in2:
        ct = tuple(slot2[c] for c in eq)
        if set_idx is None:
            value = p2[2][pred_idx][rel_index(ct, max(len(slot2), 1))]
        else:
            value = p2[3][set_idx][ct[0]]
    return value


def table_extension(scheme: Scheme, vocab: Vocabulary) -> dict:
    """The scheme's tables as explicit pattern-key -> value maps."""
    out = {}
    names = [n for n, _ in vocab.predicates] + [f"P{j}" for j in range(vocab.num_sets)]
    for name in names:
        values = {}
        for pattern in enumerate_patterns(vocab, scheme, name):
            union = pattern_union_value(pattern, vocab)
            values[pattern_key(pattern)] = _table_value(scheme, name,
                                                        lambda p=pattern: p, union)
        out[name] = values
    return out


def _iter_configs(k1: int, k2: int, k: int):
    """(ident, keep1, keep2, result_refs) combinations, canonically ordered."""
    for t in range(0, min(k1, k2) + 1):
        for left in itertools.combinations(range(k1), t):
            for right in itertools.permutations(range(k2), t):
                ident = tuple(sorted(zip(left, right)))
                probe = Scheme(k1, k2, 0, ident)
                ents = probe.entities()
                for flags in itertools.product((True, False), repeat=len(ents)):
                    keep1 = [True] * k1
                    keep2 = [True] * k2
                    for (ref, _), kept in zip(ents, flags):
                        if ref[0] == REF_SHARED:
                            keep1[ref[1]] = keep2[ref[2]] = kept
                        elif ref[0] == REF_P1:
                            keep1[ref[1]] = kept
                        else:
                            keep2[ref[1]] = kept
                    flagged = Scheme(k1, k2, 0, ident, tuple(keep1), tuple(keep2))
                    for result in itertools.permutations(flagged.kept_refs(), k):
                        yield ident, tuple(keep1), tuple(keep2), tuple(result)


def count_schemes(vocab: Vocabulary, k1: int, k2: int, k: int) -> int:
    names = [n for n, _ in vocab.predicates] + [f"P{j}" for j in range(vocab.num_sets)]
    total = 0
    for ident, keep1, keep2, result in _iter_configs(k1, k2, k):
        probe = Scheme(k1, k2, k, ident, keep1, keep2, result)
        bits = sum(count_patterns(vocab, probe, n) for n in names)
        if bits > 64:
            return 2 ** bits  # certainly over any realistic budget
        total += 2 ** bits
    return total


def enumerate_schemes(vocab: Vocabulary, k1: int, k2: int, k: int,
                      k_star: int, budget: int = None,
                      config: Config = DEFAULT):
    """Every scheme at the given constant signature: all identifications,
    keep flags, result selections, and total relation tables. Refuses when
    the count exceeds the budget (tables are exponential in the pattern
    space); callers then fall back to explicit scheme files."""
    budget = config.scheme_budget if budget is None else budget
    for v, label in ((k1, "k1"), (k2, "k2"), (k, "k")):
        if v > k_star:
            raise SignatureError(f"{label}={v} exceeds k*={k_star}")
    total = count_schemes(vocab, k1, k2, k)
    if total > budget:
        raise BudgetError("scheme_budget", total, budget)

    names = [n for n, _ in vocab.predicates] + [f"P{j}" for j in range(vocab.num_sets)]
    out = []
    for ident, keep1, keep2, result in _iter_configs(k1, k2, k):
        probe = Scheme(k1, k2, k, ident, keep1, keep2, result)
        pattern_keys = {
            n: [pattern_key(p) for p in enumerate_patterns(vocab, probe, n)]
            for n in names
        }
        flat = [(n, key) for n in names for key in pattern_keys[n]]
        for bits in itertools.product((False, True), repeat=len(flat)):
            overrides = {}
            for (n, key), val in zip(flat, bits):
                overrides.setdefault(n, []).append((key, val))
            tables = tuple(
                (n, ("map", False, tuple(sorted(overrides.get(n, ())))))
                for n in names
            )
            out.append(Scheme(k1, k2, k, ident, keep1, keep2, result, tables))
    return tuple(out)


# ---------------------------------------------------------------------------
# Scheme files
# ---------------------------------------------------------------------------

def serialize_scheme(scheme: Scheme) -> str:
    lines = [f"scheme k1={scheme.k1} k2={scheme.k2} k={scheme.k}"]
    if scheme.ident:
        lines.append("ident " + " ".join(f"{i}~{j}" for i, j in scheme.ident))
    drop1 = [str(i) for i in range(scheme.k1) if not scheme.keep1[i]]
    drop2 = [str(j) for j in range(scheme.k2) if not scheme.keep2[j]]
    if drop1:
        lines.append("drop1 " + " ".join(drop1))
    if drop2:
        lines.append("drop2 " + " ".join(drop2))
    if scheme.result_refs:
        parts = []
        for c, ref in enumerate(scheme.result_refs):
            parts.append(f"{c}={_ref_str(ref)}")
        lines.append("result " + " ".join(parts))
    for name, spec in scheme.tables:
        if spec[0] == "union":
            lines.append(f"table {name} default=union")
        elif spec[0] == "const":
            lines.append(f"table {name} default={'true' if spec[1] else 'false'}")
        elif spec[0] == "random":
            lines.append(f"table {name} random={spec[1]}")
        else:
            default = spec[1] if spec[1] == "union" else ("true" if spec[1] else "false")
            lines.append(f"table {name} default={default}")
            for key, val in spec[2]:
                lines.append(f'table {name} pattern "{key}" = {1 if val else 0}')
    return "\n".join(lines) + "\n"


def parse_scheme(text: str) -> Scheme:
    import re as _re

    header = None
    ident = []
    drop1, drop2 = set(), set()
    result = {}
    defaults = {}
    randoms = {}
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        stripped = line.split("#", 1)[0].strip() if '"' not in line else line.strip()
        if not stripped:
            continue
        parts = stripped.split()
        try:
            if parts[0] == "scheme":
                fields = dict(p.split("=", 1) for p in parts[1:])
                header = (int(fields["k1"]), int(fields["k2"]), int(fields["k"]))
            elif parts[0] == "ident":
                for item in parts[1:]:
                    i, j = item.split("~")
                    ident.append((int(i), int(j)))
            elif parts[0] == "drop1":
                drop1.update(int(x) for x in parts[1:])
            elif parts[0] == "drop2":
                drop2.update(int(x) for x in parts[1:])
            elif parts[0] == "result":
                for item in parts[1:]:
                    c, ref = item.split("=", 1)
                    part, idx = ref.split(".")
                    result[int(c)] = (part, int(idx))
            elif parts[0] == "table":
                name = parts[1]
                rest = stripped.split(None, 2)[2]
                if rest.startswith("default="):
                    val = rest.split("=", 1)[1].strip()
                    defaults[name] = val
                elif rest.startswith("random="):
                    randoms[name] = int(rest.split("=", 1)[1])
                elif rest.startswith("pattern"):
                    match = _re.match(r'pattern\s+"(.*)"\s*=\s*([01])\s*$', rest)
                    if not match:
                        raise ParseError(f"malformed table override: {line!r}", lineno)
                    overrides.setdefault(name, []).append(
                        (match.group(1), match.group(2) == "1"))
                else:
                    raise ParseError(f"malformed table line: {line!r}", lineno)
            else:
                raise ParseError(f"unknown keyword {parts[0]!r}", lineno)
        except (ValueError, IndexError, KeyError):
            raise ParseError(f"malformed line: {line!r}", lineno)
    if header is None:
        raise ParseError("missing 'scheme' header line")
    k1, k2, k = header
    keep1 = tuple(i not in drop1 for i in range(k1))
    keep2 = tuple(j not in drop2 for j in range(k2))
    matched1 = dict(ident)
    matched2 = {j: i for i, j in ident}
    # identified pairs dropped jointly if either side is dropped
    keep1 = tuple(
        keep1[i] and (i not in matched1 or matched1[i] not in drop2)
        for i in range(k1))
    keep2 = tuple(
        keep2[j] and (j not in matched2 or matched2[j] not in drop1)
        for j in range(k2))

    refs = []
    for c in range(len(result)):
        if c not in result:
            raise ParseError(f"missing result constant {c}")
        part, idx = result[c]
        if part == "1":
            refs.append((REF_SHARED, idx, matched1[idx]) if idx in matched1
                        else (REF_P1, idx))
        elif part == "2":
            refs.append((REF_SHARED, matched2[idx], idx) if idx in matched2
                        else (REF_P2, idx))
        else:
            raise ParseError(f"result reference must be 1.<i> or 2.<j>")
    if len(refs) != k:
        raise ParseError(f"expected {k} result constants, got {len(refs)}")

    tables = []
    names = set(defaults) | set(randoms) | set(overrides)
    for name in sorted(names):
        if name in randoms:
            tables.append((name, ("random", randoms[name])))
            continue
        default = defaults.get(name, "union")
        over = tuple(sorted(overrides.get(name, ())))
        if not over:
            if default == "union":
                tables.append((name, ("union",)))
            else:
                tables.append((name, ("const", default == "true")))
        else:
            dval = "union" if default == "union" else (default == "true")
            tables.append((name, ("map", dval, over)))
    return Scheme(k1, k2, k, tuple(ident), keep1, keep2, tuple(refs), tuple(tables))

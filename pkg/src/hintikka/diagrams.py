"""Canonical quantifier-free diagrams and fast per-structure extraction.

A diagram is a plain nested tuple (v, eq, rel, sets):

  v     number of variable slots; slots v.. are constant slots
  eq    class index per slot, numbered by first occurrence
  rel   per predicate (vocabulary order), a flat bool tuple indexed by
        class-index tuples in lexicographic order
  sets  per set column, a bool tuple indexed by class

Completeness: every atomic formula over the slot terms has a value; equal
terms share a class, so atoms are stored once per class tuple. Reindexing
operations need the predicate arities, which diagrams do not carry.
"""

from __future__ import annotations

import itertools

from .structures import Structure


def canonical_eq(classes_by_slot) -> tuple:
    """Renumber arbitrary class labels by first occurrence."""
    seen = {}
    out = []
    for c in classes_by_slot:
        if c not in seen:
            seen[c] = len(seen)
        out.append(seen[c])
    return tuple(out)


def num_classes(diag) -> int:
    eq = diag[1]
    return max(eq) + 1 if eq else 0


def rel_index(class_tuple, nclasses: int) -> int:
    idx = 0
    for c in class_tuple:
        idx = idx * nclasses + c
    return idx


def rel_value(diag, pred_idx: int, class_tuple) -> bool:
    return diag[2][pred_idx][rel_index(class_tuple, num_classes(diag))]


def diagram_of(m: Structure, elements, extra_sets=()) -> tuple:
    """Diagram realized by the given variable elements together with m's constants.

    ``extra_sets`` are additional set columns (iterables of elements) beyond
    m.sets; both contribute set atoms in order.
    """
    elems = tuple(elements) + m.consts
    eq = canonical_eq(elems)
    nclasses = max(eq) + 1 if eq else 0
    reps = [None] * nclasses
    for slot, cls in enumerate(eq):
        if reps[cls] is None:
            reps[cls] = elems[slot]
    rel = []
    for (_, arity), tuples in zip(m.vocab.predicates, m.relations):
        rel.append(tuple(
            tuple(reps[c] for c in ct) in tuples
            for ct in itertools.product(range(nclasses), repeat=arity)
        ))
    cols = list(m.sets) + [frozenset(s) for s in extra_sets]
    sets = tuple(tuple(r in col for r in reps) for col in cols)
    return (len(elements), eq, tuple(rel), sets)


def subdiagram(diag, slots, arities, new_v=None, keep_consts=0) -> tuple:
    """Diagram over an arbitrary slot list of ``diag``.

    The first ``new_v`` positions of ``slots`` become variable slots (all of
    them by default); ``keep_consts`` only documents intent via new_v.
    ``arities`` are the predicate arities, in diagram order.
    """
    v, eq, rel, sets = diag
    if new_v is None:
        new_v = len(slots)
    old_classes = [eq[s] for s in slots]
    new_eq = canonical_eq(old_classes)
    n_new = max(new_eq) + 1 if new_eq else 0
    rep_old = [None] * n_new
    for pos, nc in enumerate(new_eq):
        if rep_old[nc] is None:
            rep_old[nc] = old_classes[pos]
    n_old = max(eq) + 1 if eq else 0
    new_rel = tuple(
        tuple(
            atoms[rel_index(tuple(rep_old[c] for c in ct), n_old)]
            for ct in itertools.product(range(n_new), repeat=arity)
        )
        for atoms, arity in zip(rel, arities)
    )
    new_sets = tuple(tuple(col[rep_old[c]] for c in range(n_new)) for col in sets)
    return (new_v, new_eq, new_rel, new_sets)


def project_vars(diag, keep_vars, arities) -> tuple:
    """Restrict to a subset of variable slots; constant slots are kept."""
    v, eq, _, _ = diag
    k = len(eq) - v
    slots = list(keep_vars) + list(range(v, v + k))
    return subdiagram(diag, slots, arities, new_v=len(keep_vars))


def vars_distinct_nonconst(diag) -> bool:
    """True when every variable slot is a singleton class distinct from constants."""
    v, eq, _, _ = diag
    return len(set(eq[:v])) == v and not (set(eq[:v]) & set(eq[v:]))


def diag_key(diag) -> str:
    v, eq, rel, sets = diag
    rels = ",".join("".join("1" if b else "0" for b in r) for r in rel)
    ss = ",".join("".join("1" if b else "0" for b in s) for s in sets)
    return f"v{v};eq:{','.join(map(str, eq))};r:{rels};s:{ss}"


class DiagramEngine:
    """Precomputes the set-independent part of every r-tuple diagram of a
    structure so that Th^0 under varying set expansions is cheap.

    Set columns are passed as bitmasks over the universe.
    """

    def __init__(self, m: Structure, r: int):
        self.m = m
        self.r = r
        self.base_masks = tuple(_mask(s) for s in m.sets)
        self.cores = []          # (eq, rel, reps) per r-tuple
        for elems in itertools.product(range(m.size), repeat=r):
            all_elems = elems + m.consts
            eq = canonical_eq(all_elems)
            nclasses = max(eq) + 1 if eq else 0
            reps = [None] * nclasses
            for slot, cls in enumerate(eq):
                if reps[cls] is None:
                    reps[cls] = all_elems[slot]
            rel = tuple(
                tuple(
                    tuple(reps[c] for c in ct) in tuples
                    for ct in itertools.product(range(nclasses), repeat=arity)
                )
                for (_, arity), tuples in zip(m.vocab.predicates, m.relations)
            )
            self.cores.append((eq, rel, tuple(reps)))
        eq0 = canonical_eq(m.consts)
        n0 = max(eq0) + 1 if eq0 else 0
        reps0 = [None] * n0
        for slot, cls in enumerate(eq0):
            if reps0[cls] is None:
                reps0[cls] = m.consts[slot]
        rel0 = tuple(
            tuple(
                tuple(reps0[c] for c in ct) in tuples
                for ct in itertools.product(range(n0), repeat=arity)
            )
            for (_, arity), tuples in zip(m.vocab.predicates, m.relations)
        )
        self.const_core = (eq0, rel0, tuple(reps0))

    def th0(self, extra_masks: tuple):
        """Realized r-diagram set and constant diagram under the given extra sets."""
        masks = self.base_masks + extra_masks
        r = self.r
        realized = set()
        add = realized.add
        for eq, rel, reps in self.cores:
            sets_part = tuple(tuple(mask >> e & 1 == 1 for e in reps) for mask in masks)
            add((r, eq, rel, sets_part))
        eq0, rel0, reps0 = self.const_core
        const_diag = (0, eq0, rel0, tuple(tuple(mask >> e & 1 == 1 for e in reps0) for mask in masks))
        return frozenset(realized), const_diag

    # -- packed fast path (used by compute_theory's subset recursion) -------

    def _prepare_packed(self):
        """Per core and per subset mask, the class-membership bits packed
        into one int; feasible only for small universes."""
        nmasks = 2 ** self.m.size
        table_ok = nmasks <= 4096
        shapes = {}
        core_shape = []
        base_sig = []
        packed = []
        for eq, rel, reps in self.cores:
            shape = (eq, rel)
            sid = shapes.setdefault(shape, len(shapes))
            core_shape.append(sid)
            base_sig.append(tuple(_pack(mask, reps) for mask in self.base_masks))
            packed.append([_pack(u, reps) for u in range(nmasks)] if table_ok else None)
        self._shapes = {v: k for k, v in shapes.items()}
        self._core_shape = core_shape
        self._core_reps = [reps for _, _, reps in self.cores]
        self._base_sig = base_sig
        self._packed = packed if table_ok else None
        eq0, rel0, reps0 = self.const_core
        self._const_base = tuple(_pack(mask, reps0) for mask in self.base_masks)
        self._const_packed = [_pack(u, reps0) for u in range(nmasks)] if table_ok else None
        self._local = {}
        self._local_list = []

    def th0_local(self, extra_masks: tuple):
        """Like th0 but returns engine-local diagram ids (cheap to hash).

        Use resolve_local / resolve_const to convert back into canonical
        diagram tuples when interning.
        """
        if not hasattr(self, "_core_shape"):
            self._prepare_packed()
        local = self._local
        local_list = self._local_list
        realized = set()
        add = realized.add
        packed = self._packed
        for idx, sid in enumerate(self._core_shape):
            if packed is not None:
                row = packed[idx]
                key = (sid, self._base_sig[idx] + tuple(row[u] for u in extra_masks))
            else:
                reps = self._core_reps[idx]
                key = (sid, self._base_sig[idx] + tuple(_pack(u, reps) for u in extra_masks))
            lid = local.get(key)
            if lid is None:
                lid = len(local_list)
                local[key] = lid
                local_list.append(key)
            add(lid)
        if self._const_packed is not None:
            csig = tuple(self._const_packed[u] for u in extra_masks)
        else:
            csig = tuple(_pack(u, self.const_core[2]) for u in extra_masks)
        const_key = ("c", self._const_base + csig)
        cid = local.get(const_key)
        if cid is None:
            cid = len(local_list)
            local[const_key] = cid
            local_list.append(const_key)
        return frozenset(realized), cid

    def resolve_local(self, lid: int):
        key = self._local_list[lid]
        if key[0] == "c":
            eq0, rel0, reps0 = self.const_core
            return (0, eq0, rel0, tuple(_unpack(sig, len(reps0)) for sig in key[1]))
        eq, rel = self._shapes[key[0]]
        nclasses = max(eq) + 1 if eq else 0
        return (self.r, eq, rel, tuple(_unpack(sig, nclasses) for sig in key[1]))


def _pack(mask: int, reps) -> int:
    sig = 0
    for i, e in enumerate(reps):
        sig |= ((mask >> e) & 1) << i
    return sig


def _unpack(sig: int, width: int) -> tuple:
    return tuple(sig >> i & 1 == 1 for i in range(width))


def _mask(elems) -> int:
    mask = 0
    for e in elems:
        mask |= 1 << e
    return mask

"""Spectra of reachable theories: closure output -> quadruple system ->
per-theory size sets with periodicity certificates, plus the gap auditor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .closure import ClosureState
from .config import DEFAULT, Config
from .errors import HintikkaError
from .numbersets import (
    PeriodicityCertificate,
    QuadrupleSystem,
    find_period,
    reach,
    witness_tree,
)


def induce_system(state: ClosureState):
    """One label per reachable theory (sorted by digest), one rule per
    composition fact, base sets from base model sizes."""
    digests = sorted(state.digest_of(tid) for tid in state.reachable())
    label_of_digest = {d: i for i, d in enumerate(digests)}
    label_of = {tid: label_of_digest[state.digest_of(tid)] for tid in state.reachable()}
    rules = set()
    for fact in state.facts:
        rules.add((label_of[fact.t1], label_of[fact.t2], label_of[fact.t], fact.j))
    base = [set() for _ in digests]
    for tid, sizes in state.base_sizes.items():
        base[label_of[tid]].update(sizes)
    sys = QuadrupleSystem(len(digests), tuple(sorted(rules)),
                          tuple(frozenset(b) for b in base))
    return sys, tuple(digests)


def induce_system_from_facts(base, facts):
    """Same construction from parsed facts-file content (digest level)."""
    digests = set(base)
    for t1, t2, _, t, _ in facts:
        digests.update((t1, t2, t))
    digests = tuple(sorted(digests))
    label = {d: i for i, d in enumerate(digests)}
    rules = {(label[t1], label[t2], label[t], j) for t1, t2, _, t, j in facts}
    base_sets = [set() for _ in digests]
    for d, sizes in base.items():
        base_sets[label[d]].update(sizes)
    sys = QuadrupleSystem(len(digests), tuple(sorted(rules)),
                          tuple(frozenset(b) for b in base_sets))
    return sys, digests


@dataclass(frozen=True)
class SpectrumReport:
    digest: str
    bound: int
    sizes: tuple
    certificate: PeriodicityCertificate = None
    witness_trees: dict = field(default=None, compare=False)

    def describe(self) -> str:
        head = (f"spectrum t={self.digest} bound={self.bound} "
                f"sizes={','.join(map(str, self.sizes)) or '-'}")
        if self.certificate is None:
            return head + "\ninconclusive"
        return head + "\n" + self.certificate.describe()


def spectrum(state: ClosureState, digest: str, bound: int,
             config: Config = DEFAULT, with_witnesses: bool = False) -> SpectrumReport:
    """Sizes realized by a reachable theory, with a periodicity certificate
    scanned beyond the bound; finite spectra are reported as such instead of
    being given an artificial period."""
    sys, digests = induce_system(state)
    if digest not in digests:
        raise HintikkaError(f"unknown theory digest {digest}")
    label = digests.index(digest)
    return _spectrum_of_label(sys, label, digest, bound, config, with_witnesses)


def spectrum_from_facts(base, facts, digest: str, bound: int,
                        config: Config = DEFAULT) -> SpectrumReport:
    sys, digests = induce_system_from_facts(base, facts)
    if digest not in digests:
        raise HintikkaError(f"unknown theory digest {digest}")
    return _spectrum_of_label(sys, digests.index(digest), digest, bound, config)


def _spectrum_of_label(sys, label, digest, bound, config, with_witnesses=False):
    scan = max(config.spectrum_scan, bound, 2 * config.spectrum_window)
    sizes = reach(sys, bound, config=config).values(label)
    cert = find_period(sys, label, scan, config.spectrum_window, config)
    if cert is not None:
        tail = [v for v in reach(sys, scan, config=config).values(label)
                if v >= cert.threshold]
        if not tail:
            cert = PeriodicityCertificate(cert.label, cert.threshold, cert.period,
                                          cert.verified_to, "finite", cert.pump)
    witnesses = None
    if with_witnesses:
        witnesses = {
            size: witness_tree(sys, label, size, bound, config=config)
            for size in sizes
        }
    return SpectrumReport(digest, bound, sizes, cert, witnesses)


def class_spectrum(state: ClosureState, bound: int, config: Config = DEFAULT) -> tuple:
    """Union of the per-theory spectra: every size realized by the class."""
    sys, _ = induce_system(state)
    rr = reach(sys, bound, config=config)
    out = set()
    for label in range(sys.m):
        out.update(rr.values(label))
    return tuple(sorted(out))


def sentence_spectrum(state: ClosureState, phi, bound: int,
                      config: Config = DEFAULT) -> tuple:
    """Sp(phi): union of Sp_t over reachable theories whose witness satisfies
    phi. Requires the closure depth to decide phi (fragment check)."""
    from .closure import replay_witness
    from .oracle import eval_formula, fragment_depth

    some_tid = min(state.reachable())
    vocab_key = state.interner.rec(some_tid).vocab_key
    r = max([1] + [a for _, a in vocab_key]) + 1
    d = fragment_depth(phi, r)
    if d is None:
        raise HintikkaError("sentence is outside the fragment decided by theories")
    if d > state.depth:
        raise HintikkaError(
            f"sentence needs depth {d} but the closure was computed at depth {state.depth}")
    sys, digests = induce_system(state)
    rr = reach(sys, bound, config=config)
    out = set()
    for tid in sorted(state.reachable()):
        witness = replay_witness(state, tid, config)
        if eval_formula(witness, phi, config=config):
            label = digests.index(state.digest_of(tid))
            out.update(rr.values(label))
    return tuple(sorted(out))


# ---------------------------------------------------------------------------
# Gap auditor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapAuditResult:
    ratio: Fraction
    threshold: int
    violations: tuple            # successive pairs (n1, n2) with n2 >= ratio*n1
    least_passing_threshold: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        if self.ok:
            return (f"gaps ratio={self.ratio} threshold={self.threshold} "
                    f"violations=0 least_passing_threshold={self.least_passing_threshold}")
        pairs = " ".join(f"({a},{b})" for a, b in self.violations)
        return (f"gaps ratio={self.ratio} threshold={self.threshold} "
                f"violations={len(self.violations)} pairs={pairs} "
                f"least_passing_threshold={self.least_passing_threshold}")


def audit_gaps(sizes, ratio, threshold: int = 0) -> GapAuditResult:
    """Report successive members n1 < n2 with n1 > threshold and
    n2 >= ratio * n1; arithmetic is exact (Fraction)."""
    ratio = Fraction(str(ratio)) if not isinstance(ratio, Fraction) else ratio
    if ratio <= 1:
        raise HintikkaError("gap ratio must exceed 1")
    ordered = sorted(set(int(s) for s in sizes))
    all_violations = [
        (n1, n2) for n1, n2 in zip(ordered, ordered[1:]) if n2 >= ratio * n1
    ]
    violations = tuple((n1, n2) for n1, n2 in all_violations if n1 > threshold)
    least = max((n1 for n1, _ in all_violations), default=0)
    return GapAuditResult(ratio, threshold, violations, least)

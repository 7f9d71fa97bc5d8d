"""Reachable number sets under rules n = n1 + n2 - j, with derivation-tree
witnesses, pumping, and eventual-periodicity certificates.

A quadruple system has labels 0..m-1, rules (l1, l2, l3, j) producing
n1 + n2 - j at label l3 from values at labels l1, l2, and finite base sets.
Values can locally decrease when j exceeds a child value, so reachability
saturates over an enlarged window [0, bound + slack] before filtering; the
computation retries once with doubled slack and reports whether the answer
below the bound changed. Certificates record exactly what was verified;
periodicity beyond the scan bound is never claimed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .config import DEFAULT, Config
from .errors import HintikkaError, ParseError


@dataclass(frozen=True)
class QuadrupleSystem:
    m: int
    rules: tuple        # (l1, l2, l3, j)
    base: tuple         # per label, frozenset of naturals

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(sorted(tuple(map(int, r)) for r in self.rules)))
        object.__setattr__(self, "base", tuple(frozenset(map(int, b)) for b in self.base))
        if len(self.base) != self.m:
            raise HintikkaError("base sets do not match label count")
        for l1, l2, l3, j in self.rules:
            if not (0 <= l1 < self.m and 0 <= l2 < self.m and 0 <= l3 < self.m):
                raise HintikkaError(f"rule label out of range: {(l1, l2, l3, j)}")
            if j < 0:
                raise HintikkaError("rule deficit must be a natural number")
        if any(v < 0 for b in self.base for v in b):
            raise HintikkaError("base values must be naturals")

    @property
    def max_base(self) -> int:
        return max((v for b in self.base for v in b), default=0)

    @property
    def max_j(self) -> int:
        return max((r[3] for r in self.rules), default=0)

    def default_slack(self) -> int:
        return (self.max_j + 1) * self.m * self.max_j


@dataclass(frozen=True)
class ReachResult:
    sets: tuple          # per label, sorted tuple of values <= bound
    bound: int
    slack: int
    slack_stable: bool   # doubling the slack did not change the answer

    def values(self, label: int) -> tuple:
        return self.sets[label]


def _saturate(sys: QuadrupleSystem, limit: int):
    """Least fixpoint of the rules restricted to values <= limit; also
    returns one first derivation per (label, value) for witness trees."""
    members = [set(v for v in b if v <= limit) for b in sys.base]
    origin = {(l, v): None for l in range(sys.m) for v in members[l]}
    queue = [(l, v) for l in range(sys.m) for v in sorted(members[l])]
    by_first = {}
    for idx, (l1, l2, l3, j) in enumerate(sys.rules):
        by_first.setdefault(l1, []).append(idx)
        by_first.setdefault(l2, []).append(idx)
    qi = 0
    while qi < len(queue):
        label, value = queue[qi]
        qi += 1
        for idx in by_first.get(label, ()):
            l1, l2, l3, j = sys.rules[idx]
            partners = []
            if l1 == label:
                partners.extend((value, v2) for v2 in sorted(members[l2]))
            if l2 == label:
                partners.extend((v1, value) for v1 in sorted(members[l1]))
            for n1, n2 in partners:
                n = n1 + n2 - j
                if n < 0 or n > limit or n in members[l3]:
                    continue
                members[l3].add(n)
                origin[(l3, n)] = (idx, n1, n2)
                queue.append((l3, n))
    return members, origin


def reach(sys: QuadrupleSystem, bound: int, slack: int = None,
          config: Config = DEFAULT) -> ReachResult:
    """Values <= bound reachable at each label (deterministic).

    Saturates over [0, bound + slack]; retries once with doubled slack and
    records whether that changed anything at or below the bound.
    """
    if bound < 0:
        raise HintikkaError("bound must be a natural number")
    slack = sys.default_slack() if slack is None else slack
    members, _ = _saturate(sys, bound + slack)
    first = tuple(tuple(sorted(v for v in ms if v <= bound)) for ms in members)
    members2, _ = _saturate(sys, bound + 2 * slack)
    second = tuple(tuple(sorted(v for v in ms if v <= bound)) for ms in members2)
    return ReachResult(second, bound, slack, first == second)


# ---------------------------------------------------------------------------
# Derivation trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Node:
    label: int
    value: int
    rule: int = None          # index into sys.rules; None for leaves
    left: "Node" = None
    right: "Node" = None

    @property
    def is_leaf(self) -> bool:
        return self.rule is None


DerivationTree = Node       # public name for a whole witness tree


@dataclass(frozen=True)
class Violation:
    clause: str
    path: str
    detail: str


def _path_str(path) -> str:
    return "".join(map(str, path)) or "e"


def iter_nodes(tree: Node, path=()):
    yield path, tree
    if not tree.is_leaf:
        yield from iter_nodes(tree.left, path + (0,))
        yield from iter_nodes(tree.right, path + (1,))


def node_at(tree: Node, path) -> Node:
    cur = tree
    for step in path:
        cur = cur.left if step == 0 else cur.right
        if cur is None:
            raise HintikkaError(f"no node at path {_path_str(path)}")
    return cur


def validate_tree(sys: QuadrupleSystem, tree: Node):
    """Check every witness clause; None when valid, else the first violation
    (leaf values in base, rule labels/arithmetic at internal nodes)."""
    for path, node in iter_nodes(tree):
        p = _path_str(path)
        if not (0 <= node.label < sys.m):
            return Violation("b", p, f"label {node.label} out of range")
        if node.value < 0:
            return Violation("c", p, f"value {node.value} is not a natural number")
        if node.is_leaf:
            if node.left is not None or node.right is not None:
                return Violation("d", p, "leaf with children")
            if node.value not in sys.base[node.label]:
                return Violation("e", p,
                                 f"leaf value {node.value} not in base of label {node.label}")
        else:
            if node.left is None or node.right is None:
                return Violation("f", p, "internal node missing a child")
            if not (0 <= node.rule < len(sys.rules)):
                return Violation("d", p, f"rule index {node.rule} out of range")
            l1, l2, l3, j = sys.rules[node.rule]
            if (node.left.label, node.right.label, node.label) != (l1, l2, l3):
                return Violation("f", p, "rule labels do not match children")
            if node.value != node.left.value + node.right.value - j:
                return Violation(
                    "f", p,
                    f"value {node.value} != {node.left.value}+{node.right.value}-{j}")
    return None


def witness_tree(sys: QuadrupleSystem, label: int, value: int,
                 bound: int, slack: int = None, config: Config = DEFAULT) -> Node:
    """Reconstruct a derivation tree for a reachable value."""
    slack = sys.default_slack() if slack is None else slack
    members, origin = _saturate(sys, bound + 2 * slack)
    if value not in members[label]:
        raise HintikkaError(f"value {value} not reachable at label {label}")

    def build(l, v):
        how = origin[(l, v)]
        if how is None:
            return Node(l, v)
        idx, n1, n2 = how
        l1, l2, _, _ = sys.rules[idx]
        return Node(l, v, idx, build(l1, n1), build(l2, n2))

    return build(label, value)


# ---------------------------------------------------------------------------
# Pumping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PumpPair:
    """A repeatable context: ``low`` is a strict descendant of ``high`` with
    the same label and strictly smaller value; replicating the context
    between them adds delta to the root value each time."""

    low: tuple     # path of the smaller-valued (deeper) node
    high: tuple    # path of the larger-valued ancestor
    delta: int


def peak_nodes(tree: Node) -> set:
    """Paths of nodes all of whose proper descendants carry strictly
    smaller values (the proof's chain set; leaves qualify vacuously)."""
    out = set()

    def rec(node, path):
        best = node.value
        if not node.is_leaf:
            sub0 = rec(node.left, path + (0,))
            sub1 = rec(node.right, path + (1,))
            best = max(best, sub0, sub1)
            if max(sub0, sub1) < node.value:
                out.add(path)
        else:
            out.add(path)
        return best

    rec(tree, ())
    return out


def chain_rank(tree: Node, path=None) -> dict:
    """t(nu): the maximum count of peak nodes on a descending chain from nu
    (inclusive) to a strict descendant. Leaves rank 0."""
    peaks = peak_nodes(tree)
    ranks = {}

    def rec(node, p):
        # s(nu): best peak count over maximal chains from nu, counting nu
        if node.is_leaf:
            s = 1 if p in peaks else 0
            ranks[p] = 0
            return s
        s0 = rec(node.left, p + (0,))
        s1 = rec(node.right, p + (1,))
        s = (1 if p in peaks else 0) + max(s0, s1)
        ranks[p] = s
        return s

    rec(tree, ())
    return ranks


def find_pump(tree: Node):
    """A pump pair, or None: both endpoints are peak nodes with equal
    labels, the high node a proper ancestor of the low one. Peakness of the
    ancestor forces n_low < n_high. Deeper candidates are tried first,
    nearest ancestors first, so output is canonical.
    """
    peaks = peak_nodes(tree)
    nodes = {path: node for path, node in iter_nodes(tree)}
    candidates = sorted(peaks, key=lambda p: (-len(p), p))
    for low in candidates:
        if not low:
            continue
        anc = low[:-1]
        while True:
            if anc in peaks and nodes[anc].label == nodes[low].label:
                delta = nodes[anc].value - nodes[low].value
                if delta > 0:
                    return PumpPair(low, anc, delta)
            if not anc:
                break
            anc = anc[:-1]
    return None


def pump(tree: Node, pair: PumpPair, i: int) -> Node:
    """Replicate the context between the pair i extra times.

    Root value grows by i * delta; the result validates against the same
    system (values inside inserted copies only increase).
    """
    if i < 0:
        raise HintikkaError("repetition count must be a natural number")
    high = node_at(tree, pair.high)
    low = node_at(tree, pair.low)
    if len(pair.low) <= len(pair.high) or pair.low[:len(pair.high)] != pair.high:
        raise HintikkaError("pump pair nodes are not ancestor-descendant")
    if high.label != low.label:
        raise HintikkaError("pump pair labels differ")
    rel_path = pair.low[len(pair.high):]
    return _replace(tree, pair.high, _stack(high, rel_path, low, i))


def _stack(high: Node, rel_path, low: Node, i: int) -> Node:
    """high with the context high->low inserted i extra times above low."""
    def graft(node, path, plug):
        if not path:
            return plug
        step, rest = path[0], path[1:]
        if step == 0:
            left = graft(node.left, rest, plug)
            right = node.right
        else:
            left = node.left
            right = graft(node.right, rest, plug)
        value = left.value + right.value - (node.left.value + node.right.value - node.value)
        return Node(node.label, value, node.rule, left, right)

    plug = low
    for _ in range(i + 1):
        plug = graft(high, rel_path, plug)
    return plug


def _replace(tree: Node, path, new_sub: Node) -> Node:
    if not path:
        return new_sub
    step, rest = path[0], path[1:]
    if step == 0:
        left = _replace(tree.left, rest, new_sub)
        right = tree.right
    else:
        left = tree.left
        right = _replace(tree.right, rest, new_sub)
    value = left.value + right.value - (tree.left.value + tree.right.value - tree.value)
    return Node(tree.label, value, tree.rule, left, right)


# ---------------------------------------------------------------------------
# Periodicity certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PumpWitness:
    tree: Node
    pair: PumpPair


@dataclass(frozen=True)
class PeriodicityCertificate:
    label: int
    threshold: int
    period: int
    verified_to: int
    status: str                       # certified-progression | empirical | finite
    pump: PumpWitness = None

    def describe(self) -> str:
        line = (f"periodicity label={self.label} threshold={self.threshold} "
                f"period={self.period} verified_to={self.verified_to} status={self.status}")
        if self.pump is not None:
            line += (f" pump_low={_path_str(self.pump.pair.low)}"
                     f" pump_high={_path_str(self.pump.pair.high)}"
                     f" pump_delta={self.pump.pair.delta}")
        return line


def find_period(sys: QuadrupleSystem, label: int, scan_bound: int = None,
                window: int = None, config: Config = DEFAULT):
    """Smallest (period, threshold) making membership periodic on the scan
    range, or None when inconclusive.

    The threshold is normalized to the first member at or past the point
    where periodicity starts (or just past the last member for finite sets),
    and at least three full periods must fit below the scan bound. Status is
    certified-progression when a derivation-tree pump with increment a
    multiple of the period exists within budget, else empirical.
    """
    scan_bound = config.scan_default if scan_bound is None else scan_bound
    window = config.window_default if window is None else window
    if scan_bound < 2 * window:
        raise HintikkaError("scan bound must be at least twice the window")
    rr = reach(sys, scan_bound, config=config)
    vals = set(rr.values(label))
    max_member = max(vals) if vals else None

    for period in range(1, window + 1):
        t0 = 0
        for x in range(scan_bound - period, -1, -1):
            if (x in vals) != (x + period in vals):
                t0 = x + 1
                break
        threshold = _normalize_threshold(t0, vals, max_member)
        if threshold + 3 * period > scan_bound:
            continue
        status = "empirical"
        pumpw = _search_pump(sys, label, period, scan_bound, config)
        if pumpw is not None:
            status = "certified-progression"
        return PeriodicityCertificate(label, threshold, period, scan_bound,
                                      status, pumpw)
    return None


def _normalize_threshold(t0: int, vals: set, max_member) -> int:
    if max_member is None or t0 > max_member:
        return t0
    t = t0
    while t not in vals:
        t += 1
    return t


def _search_pump(sys: QuadrupleSystem, label: int, period: int,
                 scan_bound: int, config: Config):
    """Breadth-first over derivation trees by node count, looking for a pump
    whose increment the period divides."""
    budget = [config.pump_tree_cap]

    def trees(lab, max_nodes):
        if budget[0] <= 0:
            return
        for v in sorted(sys.base[lab]):
            budget[0] -= 1
            yield Node(lab, v)
        if max_nodes < 3:
            return
        for idx, (l1, l2, l3, j) in enumerate(sys.rules):
            if l3 != lab:
                continue
            for left_nodes in range(1, max_nodes - 1, 2):
                right_nodes = max_nodes - 1 - left_nodes
                for lt in trees(l1, left_nodes):
                    for rt in trees(l2, right_nodes):
                        if budget[0] <= 0:
                            return
                        value = lt.value + rt.value - j
                        if value < 0:
                            continue
                        budget[0] -= 1
                        yield Node(lab, value, idx, lt, rt)

    value_cap = (2 ** sys.m) * sys.max_base + sys.max_j
    for max_nodes in (1, 3, 5, 7, 9, 11):
        for tree in trees(label, max_nodes):
            if tree.value > max(value_cap, scan_bound):
                continue
            pair = find_pump(tree)
            if pair is not None and pair.delta % period == 0:
                return PumpWitness(tree, pair)
        if budget[0] <= 0:
            break
    return None


def verify_certificate(sys: QuadrupleSystem, cert: PeriodicityCertificate,
                       config: Config = DEFAULT) -> bool:
    """Independent re-check: fresh reach, exact periodicity on the verified
    range, and (when present) pump validity, increment divisibility, and a
    few pumped members landing back in the reach set."""
    rr = reach(sys, cert.verified_to, config=config)
    vals = set(rr.values(cert.label))
    for x in range(cert.threshold, cert.verified_to - cert.period + 1):
        if (x in vals) != (x + cert.period in vals):
            return False
    if cert.pump is not None:
        tree, pair = cert.pump.tree, cert.pump.pair
        if validate_tree(sys, tree) is not None:
            return False
        if tree.label != cert.label:
            return False
        if pair.delta <= 0 or pair.delta % cert.period != 0:
            return False
        for i in range(1, 4):
            pumped = pump(tree, pair, i)
            if validate_tree(sys, pumped) is not None:
                return False
            if pumped.value != tree.value + i * pair.delta:
                return False
            if pumped.value <= cert.verified_to and pumped.value not in vals:
                return False
    return True


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def parse_system(text: str) -> QuadrupleSystem:
    m = None
    rules = []
    base = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "labels":
                m = int(parts[1])
            elif parts[0] == "rule":
                rules.append(tuple(int(x) for x in parts[1:5]))
            elif parts[0] == "base":
                label = int(parts[1].rstrip(":"))
                base.setdefault(label, set()).update(int(x) for x in parts[2:])
            else:
                raise ParseError(f"unknown keyword {parts[0]!r}", lineno)
        except (ValueError, IndexError):
            raise ParseError(f"malformed line: {line!r}", lineno)
    if m is None:
        raise ParseError("missing 'labels' line")
    return QuadrupleSystem(m, tuple(rules),
                           tuple(frozenset(base.get(l, ())) for l in range(m)))


def serialize_system(sys: QuadrupleSystem) -> str:
    lines = [f"labels {sys.m}"]
    for l1, l2, l3, j in sys.rules:
        lines.append(f"rule {l1} {l2} {l3} {j}")
    for label, b in enumerate(sys.base):
        if b:
            lines.append(f"base {label}: {' '.join(map(str, sorted(b)))}")
    return "\n".join(lines) + "\n"


def dump_tree(tree: Node) -> str:
    lines = []
    for path, node in iter_nodes(tree):
        indent = "  " * len(path)
        rule = "" if node.is_leaf else f" rule={node.rule}"
        lines.append(f"{indent}node {_path_str(path)} label={node.label} "
                     f"value={node.value}{rule}")
    return "\n".join(lines) + "\n"

"""
I-tree module
Tree-shaped set constraints with cardinality intervals: polynomial-time
satisfiability, interval tightening and entailment
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .formula import (
    Card, Const, Empty, Formula, IntLe, Inter, Problem, SetCardError, SetEq, SetVar,
    Subset, Union, conjoin,
)
from .logger import get_logger
from .oracle import IntervalSet, Model, eval_formula

# None stands for an unbounded upper end
Bound = Optional[int]

LAYOUTS = ("spread", "overlap")


class MalformedTree(SetCardError):
    """The forest violates an i-tree invariant"""
    pass


class UnsatisfiableTree(SetCardError):
    """An operation needing a satisfiable tree got an unsatisfiable one"""
    pass


@dataclass(frozen=True)
class ITreeNode:
    var: str
    lo: int = 0
    hi: Bound = None
    children: Tuple["ITreeNode", ...] = ()
    disjoint: bool = False
    exhaustive: bool = False


@dataclass(frozen=True)
class ITree:
    roots: Tuple[ITreeNode, ...] = ()


@dataclass
class ITreeSatResult:
    """Sat carries one chosen cardinality per variable; Unsat names the first conflicting node"""
    sat: bool
    witness: Optional[Dict[str, int]] = None
    conflict: Optional[str] = None

    @property
    def verdict(self) -> str:
        return "sat" if self.sat else "unsat"


@dataclass
class ITreeEntailment:
    verdict: str  # yes, no or unknown
    counter_model: Optional[Model] = None
    failed: Optional[str] = None


def _min_bound(a: Bound, b: Bound) -> Bound:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _sum_bounds(values: Iterable[Bound]) -> Bound:
    total = 0
    for value in values:
        if value is None:
            return None
        total += value
    return total


def _fits(value: int, upper: Bound) -> bool:
    return upper is None or value <= upper


def format_interval(lo: int, hi: Bound) -> str:
    return f"[{lo}, {'inf' if hi is None else hi}]"


class _Flat:
    """Preorder index of a forest; built without recursion"""

    def __init__(self, tree: ITree):
        self.nodes: List[ITreeNode] = []
        self.parent: List[int] = []
        self.children: List[List[int]] = []

        stack: List[Tuple[ITreeNode, int]] = [(r, -1) for r in reversed(tree.roots)]
        while stack:
            node, parent = stack.pop()
            index = len(self.nodes)
            self.nodes.append(node)
            self.parent.append(parent)
            self.children.append([])
            if parent >= 0:
                self.children[parent].append(index)
            stack.extend((c, index) for c in reversed(node.children))

        # subtree of i occupies preorder indexes [i, end[i])
        self.end = list(range(1, len(self.nodes) + 1))
        for i in reversed(range(len(self.nodes))):
            if self.children[i]:
                self.end[i] = self.end[self.children[i][-1]]

        self.index = {node.var: i for i, node in enumerate(self.nodes)}

    def __len__(self) -> int:
        return len(self.nodes)

    def is_ancestor(self, a: int, x: int) -> bool:
        """True when a is a proper ancestor of x"""
        return a < x < self.end[a]

    def roots(self) -> List[int]:
        return [i for i, p in enumerate(self.parent) if p < 0]


def validate_itree(tree: ITree) -> ITree:
    """Check the i-tree invariants

    Raises:
        MalformedTree: On a duplicate variable, an empty interval, a negative
            bound or a decomposition flag on a leaf
    """
    seen = set()
    stack = list(tree.roots)
    while stack:
        node = stack.pop()
        if node.var in seen:
            raise MalformedTree(f"variable '{node.var}' occurs more than once")
        seen.add(node.var)
        if node.lo < 0 or (node.hi is not None and node.hi < 0):
            raise MalformedTree(f"node '{node.var}' has a negative bound")
        if node.hi is not None and node.lo > node.hi:
            raise MalformedTree(f"node '{node.var}' has empty interval {format_interval(node.lo, node.hi)}")
        if not node.children and (node.disjoint or node.exhaustive):
            raise MalformedTree(f"leaf '{node.var}' carries a decomposition flag")
        stack.extend(node.children)
    return tree


def tree_vars(tree: ITree) -> List[str]:
    """Variables in preorder"""
    return [node.var for node in _Flat(tree).nodes]


def tree_size(tree: ITree) -> int:
    return len(_Flat(tree))


# ---------------------------------------------------------------------------
# Meaning as general constraints

def _fold_union(names: Sequence[str]):
    term = SetVar(names[0])
    for name in names[1:]:
        term = Union(term, SetVar(name))
    return term


def itree_semantics(tree: ITree) -> Formula:
    """Translate a forest into a conjunction of general constraints

    Per node in preorder: its interval (a zero lower bound is omitted), then
    child-subset edges, then pairwise disjointness, then the exhaustive
    equation. The empty forest means True.
    """
    flat = _Flat(tree)
    parts: List[Formula] = []
    for i, node in enumerate(flat.nodes):
        card = Card(SetVar(node.var))
        if node.lo > 0:
            parts.append(IntLe(Const(node.lo), card))
        if node.hi is not None:
            parts.append(IntLe(card, Const(node.hi)))
        names = [flat.nodes[k].var for k in flat.children[i]]
        for name in names:
            parts.append(Subset(SetVar(name), SetVar(node.var)))
        if node.disjoint:
            for a in range(len(names)):
                for b in range(a + 1, len(names)):
                    parts.append(SetEq(Inter(SetVar(names[a]), SetVar(names[b])), Empty()))
        if node.exhaustive:
            parts.append(SetEq(SetVar(node.var), _fold_union(names)))
    return conjoin(parts)


def itree_problem(tree: ITree) -> Problem:
    """itree_semantics with the forest's variables declared in preorder"""
    return Problem(tuple(tree_vars(tree)), (), itree_semantics(tree))


# ---------------------------------------------------------------------------
# Interval propagation

def _derive(flat: _Flat, pins: Optional[Dict[int, int]] = None) -> Tuple[List[int], List[Bound]]:
    """Bottom-up intervals; pins narrow a node's own interval to one value"""
    pins = pins or {}
    n = len(flat)
    lo: List[int] = [0] * n
    hi: List[Bound] = [None] * n
    for i in reversed(range(n)):
        node = flat.nodes[i]
        own_lo, own_hi = node.lo, node.hi
        if i in pins:
            own_lo = max(own_lo, pins[i])
            own_hi = _min_bound(own_hi, pins[i])
        kids = flat.children[i]
        below = 0
        if kids:
            below = sum(lo[k] for k in kids) if node.disjoint else max(lo[k] for k in kids)
        lo[i] = max(own_lo, below)
        upper = own_hi
        if node.exhaustive:
            upper = _min_bound(upper, _sum_bounds(hi[k] for k in kids))
        hi[i] = upper
    return lo, hi


def _first_conflict(lo: List[int], hi: List[Bound]) -> int:
    for i in range(len(lo)):
        if not _fits(lo[i], hi[i]):
            return i
    return -1


def _pin(flat: _Flat, lo: List[int], hi: List[Bound]) -> List[int]:
    """Top-down greedy choice of the smallest consistent cardinality per node"""
    value = [0] * len(flat)
    for i, node in enumerate(flat.nodes):
        if flat.parent[i] < 0:
            value[i] = lo[i]
        kids = flat.children[i]
        if not kids:
            continue
        for k in kids:
            value[k] = lo[k]
        if node.exhaustive:
            v = value[i]
            deficit = v - sum(value[k] for k in kids)
            for k in kids:
                if deficit <= 0:
                    break
                cap = hi[k] if node.disjoint else _min_bound(hi[k], v)
                room = deficit if cap is None else min(deficit, cap - value[k])
                value[k] += room
                deficit -= room
    return value


def _tighten(flat: _Flat, lo: List[int], hi: List[Bound]) -> Tuple[List[int], List[Bound]]:
    lo_t = list(lo)
    hi_t = list(hi)
    for i, node in enumerate(flat.nodes):
        kids = flat.children[i]
        if not kids:
            continue
        total_lo = sum(lo[k] for k in kids)
        cover_total = sum(_min_bound(hi[k], lo_t[i]) for k in kids)
        for k in kids:
            cap = _min_bound(hi[k], hi_t[i])
            if node.disjoint and hi_t[i] is not None:
                cap = min(cap, hi_t[i] - (total_lo - lo[k]))
            hi_t[k] = cap
            if node.exhaustive:
                cover = cover_total - _min_bound(hi[k], lo_t[i])
                lo_t[k] = max(lo[k], lo_t[i] - cover)
    return lo_t, hi_t


def itree_sat(tree: ITree) -> ITreeSatResult:
    """Decide satisfiability of a forest in one bottom-up and one top-down pass

    Args:
        tree: Well-formed forest

    Returns:
        ITreeSatResult with a per-variable cardinality witness when satisfiable

    Raises:
        MalformedTree: If the forest is not well-formed
    """
    validate_itree(tree)
    flat = _Flat(tree)
    lo, hi = _derive(flat)
    conflict = _first_conflict(lo, hi)
    if conflict >= 0:
        var = flat.nodes[conflict].var
        get_logger().debug(f"itree: {var} derived {format_interval(lo[conflict], hi[conflict])}")
        return ITreeSatResult(False, conflict=var)
    value = _pin(flat, lo, hi)
    return ITreeSatResult(True, {node.var: value[i] for i, node in enumerate(flat.nodes)})


def tighten(tree: ITree) -> Dict[str, Tuple[int, Bound]]:
    """Strongest intervals implied by the whole forest

    Args:
        tree: Satisfiable forest

    Returns:
        Map from variable to (LO*, HI*), HI* None when unbounded

    Raises:
        UnsatisfiableTree: If the forest has no model
    """
    validate_itree(tree)
    flat = _Flat(tree)
    lo, hi = _derive(flat)
    conflict = _first_conflict(lo, hi)
    if conflict >= 0:
        raise UnsatisfiableTree(f"node '{flat.nodes[conflict].var}' has no consistent cardinality")
    lo_t, hi_t = _tighten(flat, lo, hi)
    return {node.var: (lo_t[i], hi_t[i]) for i, node in enumerate(flat.nodes)}


# ---------------------------------------------------------------------------
# Realisation as concrete sets

def _take(s: IntervalSet, start: int, count: int) -> IntervalSet:
    """Elements of s whose rank lies in [start, start + count)"""
    out = []
    skipped = 0
    stop = start + count
    for a, b in s.ranges:
        size = b - a
        first = max(start - skipped, 0)
        last = min(stop - skipped, size)
        if first < last:
            out.append((a + first, a + last))
        skipped += size
        if skipped >= stop:
            break
    return IntervalSet(out)


def _take_wrapped(s: IntervalSet, size: int, start: int, count: int) -> IntervalSet:
    if size == 0:
        return IntervalSet()
    start %= size
    head = min(count, size - start)
    return _take(s, start, head).union(_take(s, 0, count - head))


def _realize(flat: _Flat, value: List[int], layout: str) -> Model:
    sets: List[IntervalSet] = [IntervalSet()] * len(flat)
    universe = 0
    for r in flat.roots():
        if layout == "spread":
            sets[r] = IntervalSet.span(universe, universe + value[r])
            universe += value[r]
        else:
            sets[r] = IntervalSet.span(0, value[r])
            universe = max(universe, value[r])

    for i, node in enumerate(flat.nodes):
        kids = flat.children[i]
        if not kids:
            continue
        parent_set, v = sets[i], value[i]
        if node.disjoint:
            cursor = 0
            for k in kids:
                sets[k] = _take(parent_set, cursor, value[k])
                cursor += value[k]
        elif node.exhaustive:
            cursor = 0
            for k in (kids if layout == "spread" else reversed(kids)):
                start = min(cursor, v - value[k])
                sets[k] = _take(parent_set, start, value[k])
                cursor = start + value[k]
        elif layout == "spread":
            cursor = 0
            for k in kids:
                sets[k] = _take_wrapped(parent_set, v, cursor, value[k])
                cursor += value[k]
        else:
            for k in kids:
                sets[k] = _take(parent_set, 0, value[k])

    return Model(universe, {node.var: sets[i] for i, node in enumerate(flat.nodes)}, {})


def witness_model(tree: ITree, witness: Dict[str, int], layout: str = "spread") -> Model:
    """Lay out concrete sets realising a cardinality witness

    Roots get separate blocks (spread) or share a prefix (overlap); each child
    is carved out of its parent's elements so every edge and flag holds.

    Args:
        tree: Forest the witness was computed for
        witness: Cardinality per variable, as returned by itree_sat
        layout: "spread" or "overlap"

    Returns:
        Model over all variables of the forest
    """
    if layout not in LAYOUTS:
        raise ValueError(f"unknown layout '{layout}'")
    flat = _Flat(tree)
    return _realize(flat, [witness[node.var] for node in flat.nodes], layout)


# ---------------------------------------------------------------------------
# Entailment

class _Closure:
    """Constraints every model of a satisfiable forest obeys"""

    def __init__(self, flat: _Flat, lo_t: List[int], hi_t: List[Bound]):
        self.flat = flat
        self.lo_t = lo_t
        self.hi_t = hi_t
        n = len(flat)
        self.empty = [hi_t[i] == 0 for i in range(n)]
        self.eff_disjoint = [False] * n
        self.eff_exhaustive = [False] * n
        for i, node in enumerate(flat.nodes):
            kids = flat.children[i]
            if not kids:
                continue
            kids_hi = _sum_bounds(hi_t[k] for k in kids)
            # exhaustive children whose sizes can never exceed the parent never overlap
            self.eff_disjoint[i] = node.disjoint or (
                node.exhaustive and kids_hi is not None and kids_hi <= lo_t[i])
            full = hi_t[i] is not None and (
                max(lo_t[k] for k in kids) >= hi_t[i]
                or (node.disjoint and sum(lo_t[k] for k in kids) >= hi_t[i]))
            self.eff_exhaustive[i] = node.exhaustive or full

    def _close(self, base: List[bool]) -> List[bool]:
        flat = self.flat
        ok = list(base)
        for x in reversed(range(len(flat))):
            if not ok[x] and self.eff_exhaustive[x] and all(ok[k] for k in flat.children[x]):
                ok[x] = True
        for x in range(len(flat)):
            p = flat.parent[x]
            if p >= 0 and ok[p]:
                ok[x] = True
        return ok

    def subset_of(self, p: int) -> List[bool]:
        """For every node x, whether x is a subset of p in all models"""
        flat, n = self.flat, len(self.flat)
        base = [False] * n
        for x in range(n):
            base[x] = (x == p or self.empty[x] or flat.is_ancestor(p, x)
                       or (flat.is_ancestor(x, p) and self.hi_t[x] is not None
                           and self.lo_t[p] >= self.hi_t[x]))
        return self._close(base)

    def disjoint(self, x: int, y: int) -> bool:
        if self.empty[x] or self.empty[y]:
            return True
        if x == y or self.flat.is_ancestor(x, y) or self.flat.is_ancestor(y, x):
            return False
        path_x = self._path(x)
        path_y = self._path(y)
        common = -1
        for a, b in zip(path_x, path_y):
            if a != b:
                break
            common = a
        return common >= 0 and self.eff_disjoint[common]

    def covered(self, p: int, parts: Sequence[int]) -> bool:
        """Whether p is a subset of the union of parts in all models"""
        subsets = [self.subset_of(q) for q in parts]
        base = [any(s[x] for s in subsets) for x in range(len(self.flat))]
        return self._close(base)[p]

    def _path(self, x: int) -> List[int]:
        path = []
        while x >= 0:
            path.append(x)
            x = self.flat.parent[x]
        path.reverse()
        return path


def _with_extra_roots(t1: ITree, t2: ITree) -> ITree:
    known = set(tree_vars(t1))
    extra = [ITreeNode(v) for v in tree_vars(t2) if v not in known]
    return ITree(t1.roots + tuple(extra)) if extra else t1


def _failures(flat1: _Flat, closure: _Closure, flat2: _Flat) -> Iterable[Tuple]:
    idx = flat1.index
    for j, node in enumerate(flat2.nodes):
        x = idx[node.var]
        lo_t, hi_t = closure.lo_t[x], closure.hi_t[x]
        if lo_t < node.lo or (node.hi is not None and (hi_t is None or hi_t > node.hi)):
            yield ("interval", x, node.lo, node.hi)
        kids = [idx[flat2.nodes[k].var] for k in flat2.children[j]]
        if kids:
            inside = closure.subset_of(x)
            for c in kids:
                if not inside[c]:
                    yield ("subset", c, x)
        if node.disjoint:
            for a in range(len(kids)):
                for b in range(a + 1, len(kids)):
                    if not closure.disjoint(kids[a], kids[b]):
                        yield ("disjoint", kids[a], kids[b])
        if node.exhaustive and not closure.covered(x, kids):
            yield ("exhaustive", x, tuple(kids))


def _describe(flat: _Flat, failure: Tuple) -> str:
    kind = failure[0]
    name = lambda i: flat.nodes[i].var
    if kind == "interval":
        return f"|{name(failure[1])}| in {format_interval(failure[2], failure[3])}"
    if kind == "subset":
        return f"{name(failure[1])} subset {name(failure[2])}"
    if kind == "disjoint":
        return f"{name(failure[1])} disjoint {name(failure[2])}"
    return f"{name(failure[1])} = union of {', '.join(name(q) for q in failure[2])}"


def _narrowings(closure: _Closure, failure: Tuple, slack: int) -> List[Dict[int, int]]:
    lo_t, hi_t = closure.lo_t, closure.hi_t

    def high(x: int) -> int:
        return hi_t[x] if hi_t[x] is not None else lo_t[x] + slack

    def nonempty(x: int) -> int:
        return max(lo_t[x], 1)

    kind = failure[0]
    candidates: List[Dict[int, int]] = [{}]
    if kind == "interval":
        _, x, lo2, hi2 = failure
        if lo_t[x] < lo2:
            candidates.append({x: lo_t[x]})
        if hi2 is not None and (hi_t[x] is None or hi_t[x] > hi2):
            candidates.append({x: max(hi2 + 1, lo_t[x])})
    elif kind == "subset":
        _, c, p = failure
        candidates += [{c: nonempty(c)}, {c: high(c)}, {c: high(c), p: lo_t[p]},
                       {c: nonempty(c), p: lo_t[p]}]
    elif kind == "disjoint":
        _, x, y = failure
        candidates += [{x: nonempty(x), y: nonempty(y)}, {x: high(x), y: high(y)}]
    else:
        _, p, parts = failure
        low_parts = {q: lo_t[q] for q in parts}
        candidates += [{p: high(p)}, {p: nonempty(p)}, {**low_parts, p: high(p)}]
    return candidates


def _counter_model(flat1: _Flat, closure: _Closure, failure: Tuple, slack: int,
                   semantics1: Formula, semantics2: Formula) -> Optional[Model]:
    for pins in _narrowings(closure, failure, slack):
        lo, hi = _derive(flat1, pins)
        if _first_conflict(lo, hi) >= 0:
            continue
        value = _pin(flat1, lo, hi)
        for layout in LAYOUTS:
            model = _realize(flat1, value, layout)
            if eval_formula(semantics1, model) and not eval_formula(semantics2, model):
                return model
    return None


def _largest_bound(*trees: ITree) -> int:
    largest = 0
    for tree in trees:
        for node in _Flat(tree).nodes:
            largest = max(largest, node.lo, node.hi or 0)
    return largest


def itree_entails(t1: ITree, t2: ITree) -> ITreeEntailment:
    """Decide whether every model of t1 is a model of t2

    Each primitive constraint of t2 (interval, child edge, disjoint pair,
    exhaustive decomposition) is checked against the closure of t1. A failed
    check is answered no only with a counter-model that was evaluated against
    both forests; otherwise the answer is unknown. Variables of t2 missing
    from t1 are unconstrained by t1 and join it as free roots.

    Args:
        t1: Premise forest
        t2: Conclusion forest

    Returns:
        ITreeEntailment with verdict yes, no (with counter-model) or unknown

    Raises:
        MalformedTree: If either forest is not well-formed
    """
    validate_itree(t1)
    validate_itree(t2)
    logger = get_logger()

    premise = _with_extra_roots(t1, t2)
    flat1 = _Flat(premise)
    lo, hi = _derive(flat1)
    if _first_conflict(lo, hi) >= 0:
        logger.debug("itree entailment: premise unsatisfiable")
        return ITreeEntailment("yes")

    closure = _Closure(flat1, *_tighten(flat1, lo, hi))
    flat2 = _Flat(t2)
    slack = 1 + _largest_bound(premise, t2)
    semantics1 = itree_semantics(premise)
    semantics2 = itree_semantics(t2)

    first_failed = None
    for failure in _failures(flat1, closure, flat2):
        description = _describe(flat1, failure)
        first_failed = first_failed or description
        model = _counter_model(flat1, closure, failure, slack, semantics1, semantics2)
        if model is not None:
            logger.debug(f"itree entailment: counter-model for {description}")
            return ITreeEntailment("no", model, description)
        logger.debug(f"itree entailment: no counter-model found for {description}")

    if first_failed is None:
        return ITreeEntailment("yes")
    return ITreeEntailment("unknown", None, first_failed)

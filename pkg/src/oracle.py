"""
Semantics oracle module
Evaluates formulas in explicit models and decides satisfiability by bounded
enumeration of Venn-region count vectors
"""

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .formula import (
    Add, And, Card, Compl, Const, Dvd, Empty, FalseFormula, Formula, IntEq, IntLe,
    IntLt, IntTerm, IntVar, Inter, MaxC, Minus, MulConst, Not, Or, Problem, SetCardError,
    SetEq, SetTerm, SetVar, Subset, TrueFormula, Union, Univ, free_vars,
)
from .logger import get_logger


class UnassignedVariable(SetCardError):
    """A formula mentions a variable the model does not assign"""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"variable '{name}' is not assigned by the model")


class BudgetExceeded(SetCardError):
    """The oracle hit its enumeration ceiling"""

    def __init__(self, candidates: int):
        self.candidates = candidates
        super().__init__(f"enumeration ceiling reached after {candidates} candidates")


class IntervalSet:
    """Finite set of naturals stored as sorted, disjoint, non-adjacent [start, end) ranges"""

    __slots__ = ("ranges",)

    def __init__(self, ranges: Iterable[Tuple[int, int]] = ()):
        merged: List[Tuple[int, int]] = []
        for start, end in sorted(r for r in ranges if r[0] < r[1]):
            if merged and start <= merged[-1][1]:
                if end > merged[-1][1]:
                    merged[-1] = (merged[-1][0], end)
            else:
                merged.append((start, end))
        self.ranges: Tuple[Tuple[int, int], ...] = tuple(merged)

    @classmethod
    def of(cls, elements: Iterable[int]) -> "IntervalSet":
        return cls((e, e + 1) for e in elements)

    @classmethod
    def span(cls, start: int, end: int) -> "IntervalSet":
        return cls([(start, end)])

    @property
    def size(self) -> int:
        """Cardinality as an unbounded int (len() would cap it at sys.maxsize)"""
        return sum(end - start for start, end in self.ranges)

    def __bool__(self) -> bool:
        return bool(self.ranges)

    def __iter__(self) -> Iterator[int]:
        for start, end in self.ranges:
            yield from range(start, end)

    def __contains__(self, element: int) -> bool:
        return any(start <= element < end for start, end in self.ranges)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self.ranges == other.ranges

    def __hash__(self) -> int:
        return hash(self.ranges)

    def __repr__(self) -> str:
        return f"IntervalSet({list(self.ranges)})"

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.ranges + other.ranges)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        result = []
        i = j = 0
        a, b = self.ranges, other.ranges
        while i < len(a) and j < len(b):
            start = max(a[i][0], b[j][0])
            end = min(a[i][1], b[j][1])
            if start < end:
                result.append((start, end))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(result)

    def complement(self, universe_size: int) -> "IntervalSet":
        result = []
        cursor = 0
        for start, end in self.ranges:
            if start > cursor:
                result.append((cursor, min(start, universe_size)))
            cursor = max(cursor, end)
        if cursor < universe_size:
            result.append((cursor, universe_size))
        return IntervalSet(result)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        upper = self.ranges[-1][1] if self.ranges else 0
        return self.intersection(other.complement(upper))

    def issubset(self, other: "IntervalSet") -> bool:
        return self.intersection(other) == self


@dataclass(frozen=True)
class RegionVector:
    """Venn-region counts; bit i of a signature is membership in var_order[i]"""
    var_order: Tuple[str, ...]
    counts: Tuple[int, ...]

    def __post_init__(self):
        if len(self.counts) != 1 << len(self.var_order):
            raise ValueError("region vector needs exactly 2^n counts")
        if any(c < 0 for c in self.counts):
            raise ValueError("region counts must be non-negative")

    @property
    def universe_size(self) -> int:
        return sum(self.counts)


@dataclass
class Model:
    """Finite universe {0..N-1} with set and integer assignments"""
    universe_size: int
    sets: Dict[str, IntervalSet] = field(default_factory=dict)
    ints: Dict[str, int] = field(default_factory=dict)

    def region_vector(self, var_order: Sequence[str]) -> RegionVector:
        """Recompute region counts of this model under a variable order"""
        n = len(var_order)
        counts = []
        for beta in range(1 << n):
            region = IntervalSet.span(0, self.universe_size)
            for i, name in enumerate(var_order):
                member = self.sets.get(name, IntervalSet())
                if beta >> i & 1:
                    region = region.intersection(member)
                else:
                    region = region.intersection(member.complement(self.universe_size))
            counts.append(region.size)
        return RegionVector(tuple(var_order), tuple(counts))


# ---------------------------------------------------------------------------
# Evaluation in explicit models

def eval_set(s: SetTerm, m: Model) -> IntervalSet:
    if isinstance(s, SetVar):
        if s.name not in m.sets:
            raise UnassignedVariable(s.name)
        return m.sets[s.name]
    if isinstance(s, Empty):
        return IntervalSet()
    if isinstance(s, Univ):
        return IntervalSet.span(0, m.universe_size)
    if isinstance(s, Union):
        return eval_set(s.left, m).union(eval_set(s.right, m))
    if isinstance(s, Inter):
        return eval_set(s.left, m).intersection(eval_set(s.right, m))
    if isinstance(s, Minus):
        return eval_set(s.left, m).intersection(eval_set(s.right, m).complement(m.universe_size))
    if isinstance(s, Compl):
        return eval_set(s.inner, m).complement(m.universe_size)
    raise TypeError(f"not a set term: {s!r}")


def eval_int(t: IntTerm, m: Model) -> int:
    if isinstance(t, Const):
        return t.value
    if isinstance(t, IntVar):
        if t.name not in m.ints:
            raise UnassignedVariable(t.name)
        return m.ints[t.name]
    if isinstance(t, Add):
        return eval_int(t.left, m) + eval_int(t.right, m)
    if isinstance(t, MulConst):
        return t.coeff * eval_int(t.inner, m)
    if isinstance(t, Card):
        return eval_set(t.inner, m).size
    if isinstance(t, MaxC):
        return m.universe_size
    raise TypeError(f"not an integer term: {t!r}")


def eval_formula(f: Formula, m: Model) -> bool:
    """Evaluate a formula in an explicit model

    Args:
        f: Formula to evaluate
        m: Model assigning every free variable of f

    Returns:
        Truth value of f in m

    Raises:
        UnassignedVariable: If f mentions a variable m does not assign
    """
    if isinstance(f, TrueFormula):
        return True
    if isinstance(f, FalseFormula):
        return False
    if isinstance(f, And):
        return all(eval_formula(g, m) for g in f.args)
    if isinstance(f, Or):
        return any(eval_formula(g, m) for g in f.args)
    if isinstance(f, Not):
        return not eval_formula(f.inner, m)
    if isinstance(f, SetEq):
        return eval_set(f.left, m) == eval_set(f.right, m)
    if isinstance(f, Subset):
        return eval_set(f.left, m).issubset(eval_set(f.right, m))
    if isinstance(f, IntEq):
        return eval_int(f.left, m) == eval_int(f.right, m)
    if isinstance(f, IntLe):
        return eval_int(f.left, m) <= eval_int(f.right, m)
    if isinstance(f, IntLt):
        return eval_int(f.left, m) < eval_int(f.right, m)
    if isinstance(f, Dvd):
        return eval_int(f.term, m) % f.divisor == 0
    raise TypeError(f"not a formula: {f!r}")


def model_from_regions(rv: RegionVector, int_assign: Optional[Dict[str, int]] = None) -> Model:
    """Lay out one contiguous block of fresh elements per region, in signature order

    Args:
        rv: Region counts
        int_assign: Integer variable values

    Returns:
        Model whose region vector under rv.var_order equals rv
    """
    blocks: Dict[str, List[Tuple[int, int]]] = {name: [] for name in rv.var_order}
    cursor = 0
    for beta, count in enumerate(rv.counts):
        if count:
            for i, name in enumerate(rv.var_order):
                if beta >> i & 1:
                    blocks[name].append((cursor, cursor + count))
            cursor += count
    sets = {name: IntervalSet(ranges) for name, ranges in blocks.items()}
    return Model(cursor, sets, dict(int_assign or {}))


# ---------------------------------------------------------------------------
# Region-level evaluation used by the enumeration

RegionPredicate = Callable[[Tuple[int, ...], Tuple[int, ...]], bool]
RegionIntFn = Callable[[Tuple[int, ...], Tuple[int, ...]], int]


def _member(s: SetTerm, beta: int, index: Dict[str, int]) -> bool:
    if isinstance(s, SetVar):
        return bool(beta >> index[s.name] & 1)
    if isinstance(s, Empty):
        return False
    if isinstance(s, Univ):
        return True
    if isinstance(s, Union):
        return _member(s.left, beta, index) or _member(s.right, beta, index)
    if isinstance(s, Inter):
        return _member(s.left, beta, index) and _member(s.right, beta, index)
    if isinstance(s, Minus):
        return _member(s.left, beta, index) and not _member(s.right, beta, index)
    return not _member(s.inner, beta, index)


class _RegionCompiler:
    """Compiles a formula into closures over (region counts, integer values)"""

    def __init__(self, var_order: Sequence[str], int_order: Sequence[str]):
        self.set_index = {name: i for i, name in enumerate(var_order)}
        self.int_index = {name: i for i, name in enumerate(int_order)}
        self.regions = range(1 << len(var_order))

    def regions_of(self, s: SetTerm) -> Tuple[int, ...]:
        return tuple(b for b in self.regions if _member(s, b, self.set_index))

    def int_fn(self, t: IntTerm) -> RegionIntFn:
        if isinstance(t, Const):
            value = t.value
            return lambda c, v: value
        if isinstance(t, IntVar):
            if t.name not in self.int_index:
                raise UnassignedVariable(t.name)
            k = self.int_index[t.name]
            return lambda c, v: v[k]
        if isinstance(t, Add):
            left, right = self.int_fn(t.left), self.int_fn(t.right)
            return lambda c, v: left(c, v) + right(c, v)
        if isinstance(t, MulConst):
            coeff, inner = t.coeff, self.int_fn(t.inner)
            return lambda c, v: coeff * inner(c, v)
        if isinstance(t, Card):
            for name in _set_names(t.inner):
                if name not in self.set_index:
                    raise UnassignedVariable(name)
            idx = self.regions_of(t.inner)
            return lambda c, v: sum(c[b] for b in idx)
        return lambda c, v: sum(c)

    def set_regions_pair(self, a: SetTerm, b: SetTerm) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        for name in _set_names(a) + _set_names(b):
            if name not in self.set_index:
                raise UnassignedVariable(name)
        return self.regions_of(a), self.regions_of(b)

    def predicate(self, f: Formula) -> RegionPredicate:
        if isinstance(f, TrueFormula):
            return lambda c, v: True
        if isinstance(f, FalseFormula):
            return lambda c, v: False
        if isinstance(f, And):
            parts = [self.predicate(g) for g in f.args]
            return lambda c, v: all(p(c, v) for p in parts)
        if isinstance(f, Or):
            parts = [self.predicate(g) for g in f.args]
            return lambda c, v: any(p(c, v) for p in parts)
        if isinstance(f, Not):
            inner = self.predicate(f.inner)
            return lambda c, v: not inner(c, v)
        if isinstance(f, (SetEq, Subset)):
            left, right = self.set_regions_pair(f.left, f.right)
            if isinstance(f, SetEq):
                outside = tuple(sorted(set(left) ^ set(right)))
            else:
                outside = tuple(sorted(set(left) - set(right)))
            return lambda c, v: all(c[b] == 0 for b in outside)
        if isinstance(f, Dvd):
            divisor, term = f.divisor, self.int_fn(f.term)
            return lambda c, v: term(c, v) % divisor == 0
        left, right = self.int_fn(f.left), self.int_fn(f.right)
        if isinstance(f, IntEq):
            return lambda c, v: left(c, v) == right(c, v)
        if isinstance(f, IntLe):
            return lambda c, v: left(c, v) <= right(c, v)
        return lambda c, v: left(c, v) < right(c, v)


def _set_names(s: SetTerm) -> List[str]:
    if isinstance(s, SetVar):
        return [s.name]
    if isinstance(s, (Union, Inter, Minus)):
        return _set_names(s.left) + _set_names(s.right)
    if isinstance(s, Compl):
        return _set_names(s.inner)
    return []


def _used_ints(f: Formula, declared: Sequence[str]) -> List[str]:
    _, used = free_vars(f)
    return [name for name in declared if name in used]


# ---------------------------------------------------------------------------
# Bounded satisfiability

@dataclass
class OracleResult:
    """SatWithin (model set) or UnsatWithin (model None) at the given bounds"""
    sat: bool
    model: Optional[Model]
    region_bound: int
    int_bound: int
    candidates: int

    @property
    def verdict(self) -> str:
        return "sat" if self.sat else "unsat"


def oracle_sat(p: Problem, region_bound: int, int_bound: int,
               ceiling: int = 100_000_000) -> OracleResult:
    """Exhaustively search region vectors and integer values within bounds

    Region vectors are enumerated lexicographically with each count in
    0..region_bound; for each, integer assignments with values in
    -int_bound..int_bound. Integer variables the formula never mentions
    cannot change the verdict; they are not enumerated and take -int_bound,
    their value in the lexicographically first full assignment. Candidate
    counts cover the enumerated variables only.

    Args:
        p: Problem to decide
        region_bound: Largest count tried for any region
        int_bound: Largest magnitude tried for any integer variable
        ceiling: Maximum number of candidates examined

    Returns:
        OracleResult; sat results carry the lexicographically first model

    Raises:
        BudgetExceeded: If the ceiling is reached before a verdict
    """
    logger = get_logger()
    var_order = tuple(p.set_vars)
    enumerated_ints = _used_ints(p.formula, p.int_vars)
    predicate = _RegionCompiler(var_order, enumerated_ints).predicate(p.formula)

    count_range = range(region_bound + 1)
    int_range = range(-int_bound, int_bound + 1)
    int_vectors = list(itertools.product(int_range, repeat=len(enumerated_ints)))

    candidates = 0
    for counts in itertools.product(count_range, repeat=1 << len(var_order)):
        for values in int_vectors:
            candidates += 1
            if candidates > ceiling:
                raise BudgetExceeded(ceiling)
            if predicate(counts, values):
                ints = {name: -int_bound for name in p.int_vars}
                ints.update(zip(enumerated_ints, values))
                model = model_from_regions(RegionVector(var_order, counts), ints)
                if not eval_formula(p.formula, model):
                    raise AssertionError("region evaluation disagrees with explicit evaluation")
                logger.debug(f"oracle: sat after {candidates} candidates")
                return OracleResult(True, model, region_bound, int_bound, candidates)

    logger.debug(f"oracle: unsat within bounds after {candidates} candidates")
    return OracleResult(False, None, region_bound, int_bound, candidates)

"""
Solver module
Reduces formulas to integer feasibility over Venn-region counts and decides
satisfiability and entailment
"""

import itertools
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from .config_manager import SolverLimits
from .formula import (
    Add, And, Card, Compl, Const, Dvd, Empty, FalseFormula, Formula, IntEq, IntLe,
    IntLt, IntTerm, IntVar, Inter, MaxC, Minus, MulConst, Not, Or, Problem, SetCardError,
    SetEq, SetTerm, SetVar, Subset, TrueFormula, Union, Univ, check_problem, iter_nodes,
    merge_declarations, to_nnf,
)
from .ilp import Domain, IlpResult, LinearRow, LinearSystem, Relation, integer_feasible
from .logger import get_logger
from .oracle import Model, RegionVector, eval_formula, model_from_regions


class SoundnessError(SetCardError):
    """A model produced by the solver failed re-evaluation"""
    pass


# ---------------------------------------------------------------------------
# Regions

def region_label(beta: int, n: int) -> str:
    """Membership bits in variable order, left to right"""
    return "".join("1" if beta >> i & 1 else "0" for i in range(n))


def region_unknown(beta: int, n: int) -> str:
    return f"#l_{region_label(beta, n)}"


@dataclass(frozen=True)
class RegionSet:
    """Set of region signatures as a bitmask over 2^n positions"""
    var_order: Tuple[str, ...]
    mask: int

    def __contains__(self, beta: int) -> bool:
        return bool(self.mask >> beta & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def signatures(self) -> List[int]:
        return [b for b in range(1 << len(self.var_order)) if self.mask >> b & 1]

    def labels(self) -> List[str]:
        return [region_label(b, len(self.var_order)) for b in self.signatures()]


def _mask(s: SetTerm, index: Dict[str, int], n: int) -> int:
    full = (1 << (1 << n)) - 1
    if isinstance(s, SetVar):
        i = index[s.name]
        mask = 0
        for beta in range(1 << n):
            if beta >> i & 1:
                mask |= 1 << beta
        return mask
    if isinstance(s, Empty):
        return 0
    if isinstance(s, Univ):
        return full
    if isinstance(s, Union):
        return _mask(s.left, index, n) | _mask(s.right, index, n)
    if isinstance(s, Inter):
        return _mask(s.left, index, n) & _mask(s.right, index, n)
    if isinstance(s, Minus):
        return _mask(s.left, index, n) & ~_mask(s.right, index, n) & full
    if isinstance(s, Compl):
        return ~_mask(s.inner, index, n) & full
    raise TypeError(f"not a set term: {s!r}")


def region_set(s: SetTerm, var_order: Sequence[str]) -> RegionSet:
    """Regions whose boolean evaluation of s is true

    Args:
        s: Set term over variables of var_order
        var_order: Variable order fixing bit positions

    Returns:
        RegionSet of the term
    """
    order = tuple(var_order)
    index = {name: i for i, name in enumerate(order)}
    return RegionSet(order, _mask(s, index, len(order)))


# ---------------------------------------------------------------------------
# Atom reduction

@dataclass
class LinearTerm:
    constant: int = 0
    coeffs: Dict[str, int] = field(default_factory=dict)

    def add(self, other: "LinearTerm", scale: int = 1) -> "LinearTerm":
        coeffs = dict(self.coeffs)
        for name, c in other.coeffs.items():
            coeffs[name] = coeffs.get(name, 0) + scale * c
        return LinearTerm(self.constant + scale * other.constant,
                          {k: v for k, v in coeffs.items() if v})

    def scaled(self, factor: int) -> "LinearTerm":
        return LinearTerm(0).add(self, factor)


@dataclass
class LinearCondition:
    """Rows a literal reduces to, plus the fresh unknowns they introduce"""
    rows: List[LinearRow]
    fresh: List[Tuple[str, Domain]] = field(default_factory=list)


class FreshNames:
    """Per-solve counter for divisibility witnesses, skipping declared names"""

    def __init__(self, taken: Sequence[str] = ()):
        self.taken = set(taken)
        self.counter = 0

    def next_pair(self) -> Tuple[str, str]:
        while f"__q{self.counter}" in self.taken or f"__r{self.counter}" in self.taken:
            self.counter += 1
        pair = (f"__q{self.counter}", f"__r{self.counter}")
        self.counter += 1
        return pair


def linearize(t: IntTerm, var_order: Sequence[str]) -> LinearTerm:
    """Integer term as a linear combination of region counts and integer variables"""
    n = len(var_order)
    if isinstance(t, Const):
        return LinearTerm(t.value)
    if isinstance(t, IntVar):
        return LinearTerm(0, {t.name: 1})
    if isinstance(t, Add):
        return linearize(t.left, var_order).add(linearize(t.right, var_order))
    if isinstance(t, MulConst):
        return linearize(t.inner, var_order).scaled(t.coeff)
    if isinstance(t, Card):
        regions = region_set(t.inner, var_order).signatures()
        return LinearTerm(0, {region_unknown(b, n): 1 for b in regions})
    if isinstance(t, MaxC):
        return LinearTerm(0, {region_unknown(b, n): 1 for b in range(1 << n)})
    raise TypeError(f"not an integer term: {t!r}")


def _difference(left: LinearTerm, right: LinearTerm) -> Tuple[Dict[str, int], int]:
    diff = left.add(right, -1)
    return diff.coeffs, -diff.constant


def reduce_atom(a: Formula, var_order: Sequence[str],
                fresh: Optional[FreshNames] = None) -> LinearCondition:
    """Reduce a literal to linear rows over region counts

    Args:
        a: Atom or negated divisibility atom
        var_order: Set variable order
        fresh: Name source for divisibility witnesses

    Returns:
        LinearCondition equivalent to the literal
    """
    fresh = fresh or FreshNames()
    n = len(var_order)
    if isinstance(a, (SetEq, Subset)):
        left = region_set(a.left, var_order).mask
        right = region_set(a.right, var_order).mask
        outside = (left ^ right) if isinstance(a, SetEq) else (left & ~right)
        return LinearCondition([LinearRow({region_unknown(b, n): 1}, Relation.EQ, 0)
                                for b in range(1 << n) if outside >> b & 1])
    if isinstance(a, (IntEq, IntLe, IntLt)):
        coeffs, rhs = _difference(linearize(a.left, var_order), linearize(a.right, var_order))
        if isinstance(a, IntEq):
            return LinearCondition([LinearRow(coeffs, Relation.EQ, rhs)])
        if isinstance(a, IntLt):
            rhs -= 1
        return LinearCondition([LinearRow(coeffs, Relation.LE, rhs)])

    negated = isinstance(a, Not)
    atom = a.inner if negated else a
    if not isinstance(atom, Dvd):
        raise TypeError(f"not a literal: {a!r}")
    term = linearize(atom.term, var_order)
    q, r = fresh.next_pair()
    coeffs = dict(term.coeffs)
    coeffs[q] = coeffs.get(q, 0) - atom.divisor
    if not negated:
        return LinearCondition([LinearRow(coeffs, Relation.EQ, -term.constant)],
                               [(q, Domain.INTEGER)])
    coeffs[r] = -1
    return LinearCondition(
        [LinearRow(coeffs, Relation.EQ, -term.constant),
         LinearRow({r: -1}, Relation.LE, -1),
         LinearRow({r: 1}, Relation.LE, atom.divisor - 1)],
        [(q, Domain.INTEGER), (r, Domain.INTEGER)])


# ---------------------------------------------------------------------------
# Venn systems

@dataclass
class VennSystem:
    """One branch: region counts, integer variables and linear rows"""
    var_order: Tuple[str, ...]
    int_vars: Tuple[str, ...]
    rows: List[LinearRow] = field(default_factory=list)
    fresh: List[Tuple[str, Domain]] = field(default_factory=list)
    zero_regions: Set[int] = field(default_factory=set)

    @classmethod
    def from_conditions(cls, var_order: Sequence[str], int_vars: Sequence[str],
                        conditions: Sequence[LinearCondition]) -> "VennSystem":
        system = cls(tuple(var_order), tuple(int_vars))
        seen = set()
        for condition in conditions:
            system.rows.extend(condition.rows)
            for name, domain in condition.fresh:
                if name not in seen:
                    seen.add(name)
                    system.fresh.append((name, domain))
        system._presolve()
        return system

    def _presolve(self):
        """Regions forced empty by a single-unknown equation are removed"""
        n = len(self.var_order)
        names = {region_unknown(b, n): b for b in range(1 << n)}
        for row in self.rows:
            if row.relation is Relation.EQ and row.rhs == 0 and len(row.coeffs) == 1:
                (name, coeff), = row.coeffs.items()
                if name in names and coeff:
                    self.zero_regions.add(names[name])

    @property
    def admitted(self) -> List[int]:
        return [b for b in range(1 << len(self.var_order)) if b not in self.zero_regions]

    def linear_system(self, nonzero: Optional[Sequence[int]] = None) -> LinearSystem:
        """Linear system with only the given regions (default: all admitted) left free"""
        n = len(self.var_order)
        keep = self.admitted if nonzero is None else list(nonzero)
        kept = {region_unknown(b, n) for b in keep}
        dropped = {region_unknown(b, n) for b in range(1 << n)} - kept

        sys = LinearSystem()
        for b in keep:
            sys.add_unknown(region_unknown(b, n), Domain.NATURAL)
        for name in self.int_vars:
            sys.add_unknown(name, Domain.INTEGER)
        for name, domain in self.fresh:
            sys.add_unknown(name, domain)
        for row in self.rows:
            coeffs = {x: c for x, c in row.coeffs.items() if x not in dropped}
            if not coeffs and row.relation is Relation.EQ and row.rhs == 0:
                continue
            sys.add_row(coeffs, row.relation, row.rhs)
        return sys

    def model(self, assignment: Dict[str, int]) -> Model:
        n = len(self.var_order)
        counts = tuple(assignment.get(region_unknown(b, n), 0) for b in range(1 << n))
        ints = {name: assignment.get(name, 0) for name in self.int_vars}
        return model_from_regions(RegionVector(self.var_order, counts), ints)


# ---------------------------------------------------------------------------
# Strategy and verdicts

@dataclass(frozen=True)
class Strategy:
    kind: str = "explicit"
    sparse_k: Optional[int] = None

    @classmethod
    def explicit(cls) -> "Strategy":
        return cls("explicit")

    @classmethod
    def sparse(cls, k: Optional[int] = None) -> "Strategy":
        return cls("sparse", k)

    @staticmethod
    def default_sparse_k(f: Formula) -> int:
        """Distinct literals plus distinct integer terms plus one"""
        nnf = to_nnf(f)
        literals = set()
        stack = [nnf]
        while stack:
            g = stack.pop()
            if isinstance(g, (And, Or)):
                stack.extend(g.args)
            elif not isinstance(g, (TrueFormula, FalseFormula)):
                literals.add(g)
        int_terms = {node for node in iter_nodes(nnf) if isinstance(node, IntTerm)}
        return len(literals) + len(int_terms) + 1

    def describe(self) -> str:
        return self.kind if self.kind == "explicit" else f"sparse({self.sparse_k})"


class VerdictKind(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass
class SolveStats:
    branches: int = 0
    ilp_nodes: int = 0


@dataclass
class Verdict:
    kind: VerdictKind
    model: Optional[Model] = None
    reason: Optional[str] = None
    stats: SolveStats = field(default_factory=SolveStats)
    strategy: str = "explicit"

    @property
    def token(self) -> str:
        return self.kind.value


class _ResourceLimit(Exception):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class _Search:
    """Depth-first walk over the DNF branches of a negation normal form"""

    def __init__(self, p: Problem, strategy: Strategy, limits: SolverLimits, k: int):
        self.p = p
        self.var_order = tuple(p.set_vars)
        self.strategy = strategy
        self.limits = limits
        self.k = k
        self.fresh = FreshNames(p.int_vars)
        self.memo: Dict[Formula, LinearCondition] = {}
        self.prefix_cache: Dict[FrozenSet[Formula], bool] = {}
        self.stats = SolveStats()
        self.deadline = time.monotonic() + limits.time_limit_s
        self.incomplete: Optional[str] = None

    # -- literal bookkeeping ------------------------------------------------

    def _condition(self, literal: Formula) -> LinearCondition:
        if literal not in self.memo:
            self.memo[literal] = reduce_atom(literal, self.var_order, self.fresh)
        return self.memo[literal]

    def _system(self, literals: Sequence[Formula]) -> VennSystem:
        return VennSystem.from_conditions(self.var_order, self.p.int_vars,
                                          [self._condition(l) for l in literals])

    def _feasible(self, sys: LinearSystem) -> IlpResult:
        if time.monotonic() > self.deadline:
            raise _ResourceLimit("time")
        budget = self.limits.ilp_nodes - self.stats.ilp_nodes
        if budget <= 0:
            raise _ResourceLimit("ilp-nodes")
        result = integer_feasible(sys, node_budget=budget, deadline=self.deadline)
        self.stats.ilp_nodes += result.nodes
        if result.status == "unknown" and result.reason == "time":
            raise _ResourceLimit("time")
        return result

    def _count_branch(self):
        self.stats.branches += 1
        if self.stats.branches > self.limits.max_branches:
            raise _ResourceLimit("branch-count")

    # -- search --------------------------------------------------------------

    def _prefix_feasible(self, literals: Tuple[Formula, ...]) -> bool:
        key = frozenset(literals)
        if key not in self.prefix_cache:
            result = self._feasible(self._system(literals).linear_system())
            # unknown keeps the branch alive
            self.prefix_cache[key] = result.status != "infeasible"
        return self.prefix_cache[key]

    def run(self, nnf: Formula) -> Optional[Model]:
        stack: List[Tuple[Tuple[Formula, ...], Tuple[Formula, ...]]] = [((nnf,), ())]
        while stack:
            agenda, literals = stack.pop()
            while agenda:
                head, agenda = agenda[0], agenda[1:]
                if isinstance(head, TrueFormula):
                    continue
                if isinstance(head, FalseFormula):
                    break
                if isinstance(head, And):
                    agenda = head.args + agenda
                    continue
                if isinstance(head, Or):
                    if literals and not self._prefix_feasible(literals):
                        break
                    for disjunct in reversed(head.args):
                        stack.append(((disjunct,) + agenda, literals))
                    break
                if head not in literals:
                    literals = literals + (head,)
            else:
                model = self._leaf(literals)
                if model is not None:
                    return model
        return None

    def _leaf(self, literals: Tuple[Formula, ...]) -> Optional[Model]:
        venn = self._system(literals)
        if self.strategy.kind == "explicit" or len(venn.admitted) <= self.k:
            self._count_branch()
            result = self._feasible(venn.linear_system())
            if result.feasible:
                return venn.model(result.assignment)
            if result.status == "unknown":
                self.incomplete = result.reason
            return None

        # sparse: probe k-subsets of admitted regions in lexicographic order
        for chosen in itertools.combinations(venn.admitted, self.k):
            self._count_branch()
            result = self._feasible(venn.linear_system(chosen))
            if result.feasible:
                return venn.model(result.assignment)
            if result.status == "unknown":
                self.incomplete = result.reason
        self.incomplete = self.incomplete or "sparse-incomplete"
        return None


def solve(p: Problem, strategy: Optional[Strategy] = None,
          limits: Optional[SolverLimits] = None) -> Verdict:
    """Decide satisfiability of a problem

    Args:
        p: Problem to decide
        strategy: explicit (default) or sparse(k); sparse without k uses default_sparse_k
        limits: Resource limits

    Returns:
        Verdict; Sat models are re-checked against the original formula

    Raises:
        ProblemTypeError: If the problem is not well-typed
        SoundnessError: If a reconstructed model fails evaluation
    """
    logger = get_logger()
    strategy = strategy or Strategy.explicit()
    limits = limits or SolverLimits()
    check_problem(p)

    n = len(p.set_vars)
    k = strategy.sparse_k
    if strategy.kind == "sparse" and not k:
        k = Strategy.default_sparse_k(p.formula)
    resolved = Strategy(strategy.kind, k if strategy.kind == "sparse" else None)

    nnf = to_nnf(p.formula)
    if isinstance(nnf, FalseFormula):
        return Verdict(VerdictKind.UNSAT, strategy=resolved.describe())
    if isinstance(nnf, TrueFormula):
        model = model_from_regions(RegionVector(tuple(p.set_vars), (0,) * (1 << n)),
                                   {name: 0 for name in p.int_vars})
        return Verdict(VerdictKind.SAT, model, strategy=resolved.describe())

    if strategy.kind == "explicit" and n > limits.explicit_max_set_vars:
        logger.warning(f"{n} set variables exceed the explicit limit of {limits.explicit_max_set_vars}")
        return Verdict(VerdictKind.UNKNOWN, reason="memory", strategy=resolved.describe())

    search = _Search(p, resolved, limits, k or 0)
    try:
        model = search.run(nnf)
    except _ResourceLimit as limit:
        logger.debug(f"solve: resource limit {limit.reason}")
        return Verdict(VerdictKind.UNKNOWN, reason=limit.reason, stats=search.stats,
                       strategy=resolved.describe())

    logger.debug(f"solve: {search.stats.branches} branches, {search.stats.ilp_nodes} ilp nodes")
    if model is not None:
        if not eval_formula(p.formula, model):
            raise SoundnessError("solver model does not satisfy the formula")
        return Verdict(VerdictKind.SAT, model, stats=search.stats, strategy=resolved.describe())

    if search.incomplete:
        return Verdict(VerdictKind.UNKNOWN, reason=search.incomplete, stats=search.stats,
                       strategy=resolved.describe())
    return Verdict(VerdictKind.UNSAT, stats=search.stats, strategy=resolved.describe())


# ---------------------------------------------------------------------------
# Entailment

@dataclass
class EntailmentResult:
    verdict: str  # yes, no or unknown
    counter_model: Optional[Model] = None
    reason: Optional[str] = None
    stats: SolveStats = field(default_factory=SolveStats)


def entails(p1: Problem, p2: Problem, limits: Optional[SolverLimits] = None) -> EntailmentResult:
    """Decide p1 |= p2 by refuting p1 and not p2 with the explicit strategy

    Args:
        p1: Premise problem
        p2: Conclusion problem

    Returns:
        EntailmentResult; no carries a model of p1 falsifying p2

    Raises:
        ProblemTypeError: On a set/integer clash between the declarations
    """
    set_vars, int_vars = merge_declarations(p1, p2)
    refutation = Problem(set_vars, int_vars, And((p1.formula, Not(p2.formula))))
    verdict = solve(refutation, Strategy.explicit(), limits)
    if verdict.kind is VerdictKind.UNSAT:
        return EntailmentResult("yes", stats=verdict.stats)
    if verdict.kind is VerdictKind.SAT:
        model = verdict.model
        if not eval_formula(p1.formula, model) or eval_formula(p2.formula, model):
            raise SoundnessError("counter-model does not separate premise and conclusion")
        return EntailmentResult("no", model, stats=verdict.stats)
    return EntailmentResult("unknown", reason=verdict.reason, stats=verdict.stats)

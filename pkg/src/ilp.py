"""
Integer linear feasibility module
Exact rational simplex plus branch-and-bound over natural and integer unknowns
"""

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .formula import SetCardError
from .logger import get_logger

DEFAULT_NODE_BUDGET = 10 ** 6


class Domain(Enum):
    NATURAL = "natural"
    INTEGER = "integer"


class Relation(Enum):
    EQ = "="
    LE = "<="


class CertificateError(SetCardError):
    """A feasible assignment failed substitution into the original rows"""
    pass


@dataclass
class LinearRow:
    """sum(coeffs[x] * x) relation rhs, all coefficients integers"""
    coeffs: Dict[str, int]
    relation: Relation
    rhs: int

    def holds(self, assignment: Dict[str, int]) -> bool:
        total = sum(c * assignment.get(x, 0) for x, c in self.coeffs.items())
        return total == self.rhs if self.relation is Relation.EQ else total <= self.rhs

    def __str__(self):
        terms = " + ".join(f"{c}*{x}" for x, c in self.coeffs.items()) or "0"
        return f"{terms} {self.relation.value} {self.rhs}"


@dataclass
class LinearSystem:
    unknowns: List[Tuple[str, Domain]] = field(default_factory=list)
    rows: List[LinearRow] = field(default_factory=list)

    def add_unknown(self, name: str, domain: Domain):
        if name not in self.domains():
            self.unknowns.append((name, domain))

    def domains(self) -> Dict[str, Domain]:
        return dict(self.unknowns)

    def add_row(self, coeffs: Dict[str, int], relation: Relation, rhs: int):
        self.rows.append(LinearRow({x: c for x, c in coeffs.items() if c}, relation, rhs))

    def add_less_than(self, coeffs: Dict[str, int], rhs: int):
        """Strict sum < rhs, exact for integer unknowns as sum <= rhs - 1"""
        self.add_row(coeffs, Relation.LE, rhs - 1)

    def check(self, assignment: Dict[str, int]) -> bool:
        for name, domain in self.unknowns:
            value = assignment.get(name, 0)
            if not isinstance(value, int) or (domain is Domain.NATURAL and value < 0):
                return False
        return all(row.holds(assignment) for row in self.rows)


@dataclass
class RationalResult:
    feasible: bool
    point: Optional[Dict[str, Fraction]] = None


@dataclass
class IlpResult:
    status: str  # feasible, infeasible or unknown
    assignment: Optional[Dict[str, int]] = None
    reason: Optional[str] = None
    nodes: int = 0

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


# ---------------------------------------------------------------------------
# Rational relaxation

def _phase_one(matrix: List[List[Fraction]], rhs: List[Fraction], width: int) -> Optional[List[Fraction]]:
    """Phase-one simplex on A x = b, x >= 0 with one artificial per row and Bland's rule

    Returns:
        A feasible basic point for the first `width` columns, or None
    """
    m = len(matrix)
    if m == 0:
        return [Fraction(0)] * width

    total = width + m
    tableau: List[List[Fraction]] = []
    for i in range(m):
        row = list(matrix[i]) + [Fraction(0)] * m + [rhs[i]]
        if row[-1] < 0:
            row = [-v for v in row]
        row[width + i] = Fraction(1)
        tableau.append(row)
    basis = [width + i for i in range(m)]

    # reduced costs of sum(artificials); last entry is minus the objective
    objective = [Fraction(0)] * (total + 1)
    for j in list(range(width)) + [total]:
        objective[j] = -sum(tableau[i][j] for i in range(m))

    while True:
        enter = next((j for j in range(total) if objective[j] < 0), None)
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            a = tableau[i][enter]
            if a > 0:
                ratio = tableau[i][total] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            break
        _pivot(tableau, objective, leave, enter)
        basis[leave] = enter

    if objective[total] < 0:
        return None
    point = [Fraction(0)] * total
    for i, column in enumerate(basis):
        point[column] = tableau[i][total]
    return point[:width]


def _pivot(tableau: List[List[Fraction]], objective: List[Fraction], r: int, c: int):
    pivot_row = tableau[r]
    inv = 1 / pivot_row[c]
    pivot_row[:] = [v * inv for v in pivot_row]
    nonzero = [j for j, v in enumerate(pivot_row) if v]
    for row in tableau + [objective]:
        if row is pivot_row:
            continue
        factor = row[c]
        if factor:
            for j in nonzero:
                row[j] -= factor * pivot_row[j]


def _relax(names: List[str], domains: Dict[str, Domain], rows: List[LinearRow]) -> Optional[Dict[str, Fraction]]:
    """Rational point of rows; natural unknowns get one column, integer unknowns x+ and x-"""
    columns: Dict[str, Tuple[int, Optional[int]]] = {}
    width = 0
    for name in names:
        if domains[name] is Domain.NATURAL:
            columns[name] = (width, None)
            width += 1
        else:
            columns[name] = (width, width + 1)
            width += 2
    slack_rows = [i for i, row in enumerate(rows) if row.relation is Relation.LE]
    slack_of = {i: width + k for k, i in enumerate(slack_rows)}
    width += len(slack_rows)

    matrix = []
    rhs = []
    for i, row in enumerate(rows):
        line = [Fraction(0)] * width
        for name, coeff in row.coeffs.items():
            plus, minus = columns[name]
            line[plus] += coeff
            if minus is not None:
                line[minus] -= coeff
        if i in slack_of:
            line[slack_of[i]] = Fraction(1)
        matrix.append(line)
        rhs.append(Fraction(row.rhs))

    point = _phase_one(matrix, rhs, width)
    if point is None:
        return None
    values = {}
    for name in names:
        plus, minus = columns[name]
        values[name] = point[plus] - (point[minus] if minus is not None else 0)
    return values


def rational_feasible(sys: LinearSystem) -> RationalResult:
    """Exact rational feasibility of a linear system

    Args:
        sys: System whose natural unknowns are non-negative and integer unknowns free

    Returns:
        RationalResult with a point from deterministic pivoting when feasible
    """
    names = [name for name, _ in sys.unknowns]
    point = _relax(names, sys.domains(), sys.rows)
    if point is None:
        return RationalResult(False)
    return RationalResult(True, point)


# ---------------------------------------------------------------------------
# Integer preprocessing

Expr = Tuple[int, Dict[str, int]]  # constant, coefficients


def _substitute(row: LinearRow, name: str, expr: Expr) -> LinearRow:
    a = row.coeffs.get(name, 0)
    if not a:
        return row
    const, coeffs = expr
    new = {x: c for x, c in row.coeffs.items() if x != name}
    for x, c in coeffs.items():
        new[x] = new.get(x, 0) + a * c
    return LinearRow({x: c for x, c in new.items() if c}, row.relation, row.rhs - a * const)


def _nonnegative(expr: Expr) -> LinearRow:
    """Row stating expr >= 0"""
    const, coeffs = expr
    return LinearRow({x: -c for x, c in coeffs.items() if c}, Relation.LE, const)


class _Infeasible(Exception):
    pass


class _Eliminator:
    """Removes equalities by unimodular substitution, keeping integer solutions in bijection"""

    def __init__(self, names: List[str], domains: Dict[str, Domain], rows: List[LinearRow]):
        self.order = list(names)
        self.domains = dict(domains)
        self.equalities = [r for r in rows if r.relation is Relation.EQ]
        self.inequalities = [r for r in rows if r.relation is Relation.LE]
        self.substitutions: List[Tuple[str, Expr]] = []
        self.fresh = 0

    def run(self):
        while self.equalities:
            row = self.equalities[0]
            if not row.coeffs:
                if row.rhs != 0:
                    raise _Infeasible()
                self.equalities.pop(0)
                continue
            g = math.gcd(*row.coeffs.values())
            if row.rhs % g:
                raise _Infeasible()
            if g > 1:
                row = LinearRow({x: c // g for x, c in row.coeffs.items()}, Relation.EQ, row.rhs // g)
                self.equalities[0] = row

            ranked = sorted(row.coeffs, key=lambda x: (abs(row.coeffs[x]), self.order.index(x)))
            pick = ranked[0]
            a = row.coeffs[pick]
            if abs(a) == 1:
                expr = (row.rhs * a, {x: -c * a for x, c in row.coeffs.items() if x != pick})
                self.equalities.pop(0)
            else:
                sigma = self._fresh_name()
                self.order.append(sigma)
                self.domains[sigma] = Domain.INTEGER
                coeffs = {x: -(c // a) for x, c in row.coeffs.items() if x != pick}
                coeffs[sigma] = 1
                expr = (0, coeffs)
            self._eliminate(pick, expr)
        self.inequalities = [self._tightened(r) for r in self.inequalities]

    def _fresh_name(self) -> str:
        while f"__e{self.fresh}" in self.domains:
            self.fresh += 1
        name = f"__e{self.fresh}"
        self.fresh += 1
        return name

    def _eliminate(self, name: str, expr: Expr):
        self.substitutions.append((name, expr))
        self.equalities = [_substitute(r, name, expr) for r in self.equalities]
        self.inequalities = [_substitute(r, name, expr) for r in self.inequalities]
        if self.domains[name] is Domain.NATURAL:
            self.inequalities.append(_nonnegative(expr))
        self.order.remove(name)

    @staticmethod
    def _tightened(row: LinearRow) -> LinearRow:
        if not row.coeffs:
            if row.rhs < 0:
                raise _Infeasible()
            return row
        g = math.gcd(*row.coeffs.values())
        if g == 1:
            return row
        return LinearRow({x: c // g for x, c in row.coeffs.items()}, Relation.LE, row.rhs // g)

    def back_substitute(self, values: Dict[str, int]) -> Dict[str, int]:
        values = dict(values)
        for name, (const, coeffs) in reversed(self.substitutions):
            values[name] = const + sum(c * values.get(x, 0) for x, c in coeffs.items())
        return values


def small_solution_bound(rows: List[LinearRow]) -> int:
    """(m * a_max + 1) ** (3m) with m rows and a_max the largest absolute coefficient or rhs"""
    m = max(len(rows), 1)
    a_max = 1
    for row in rows:
        a_max = max(a_max, abs(row.rhs), *(abs(c) for c in row.coeffs.values()))
    return (m * a_max + 1) ** (3 * m)


# ---------------------------------------------------------------------------
# Branch and bound

class _Search:
    def __init__(self, names: List[str], domains: Dict[str, Domain], rows: List[LinearRow],
                 node_budget: int, deadline: Optional[float]):
        self.names = names
        self.domains = domains
        self.rows = rows
        self.node_budget = node_budget
        self.deadline = deadline
        self.nodes = 0
        self.pruned = False
        natural_rows = sum(1 for n in names if domains[n] is Domain.NATURAL)
        self.bound = small_solution_bound(rows + [LinearRow({}, Relation.LE, 0)] * natural_rows)

    def run(self) -> Tuple[str, Optional[Dict[str, int]]]:
        # each stack entry is a map unknown -> (lower, upper), None meaning unbounded
        stack: List[Dict[str, Tuple[Optional[int], Optional[int]]]] = [{}]
        while stack:
            if self.nodes >= self.node_budget:
                return "ilp-nodes", None
            if self.deadline is not None and time.monotonic() > self.deadline:
                return "time", None
            bounds = stack.pop()
            self.nodes += 1

            point = _relax(self.names, self.domains, self.rows + self._bound_rows(bounds))
            if point is None:
                continue
            fractional = next((n for n in self.names if point[n].denominator != 1), None)
            if fractional is None:
                return "feasible", {n: int(point[n]) for n in self.names}

            floor = math.floor(point[fractional])
            lower, upper = bounds.get(fractional, (None, None))
            branches = []
            if floor >= -self.bound:
                branches.append({**bounds, fractional: (lower, floor)})
            else:
                self.pruned = True
            if floor + 1 <= self.bound:
                branches.append({**bounds, fractional: (floor + 1, upper)})
            else:
                self.pruned = True
            # lower branch is explored first
            stack.extend(reversed(branches))
        return "infeasible", None

    @staticmethod
    def _bound_rows(bounds) -> List[LinearRow]:
        rows = []
        for name, (lower, upper) in bounds.items():
            if lower is not None:
                rows.append(LinearRow({name: -1}, Relation.LE, -lower))
            if upper is not None:
                rows.append(LinearRow({name: 1}, Relation.LE, upper))
        return rows


def integer_feasible(sys: LinearSystem, node_budget: int = DEFAULT_NODE_BUDGET,
                     deadline: Optional[float] = None) -> IlpResult:
    """Decide integer feasibility exactly

    Equalities are eliminated first (gcd test, unit substitution, Euclid
    steps through fresh integer unknowns), inequalities are gcd-tightened,
    and the remainder is searched depth-first by branch-and-bound on the
    lowest-index fractional unknown, lower branch first. Branches beyond the
    small-solution bound are pruned.

    Args:
        sys: Linear system
        node_budget: Maximum number of branch-and-bound nodes
        deadline: time.monotonic() value after which the search gives up

    Returns:
        IlpResult; feasible results carry an assignment verified against every row

    Raises:
        CertificateError: If a found assignment does not satisfy the system
    """
    logger = get_logger()
    names = [name for name, _ in sys.unknowns]
    domains = sys.domains()
    for row in sys.rows:
        for name in row.coeffs:
            if name not in domains:
                raise ValueError(f"row mentions undeclared unknown '{name}'")

    eliminator = _Eliminator(names, domains, sys.rows)
    try:
        eliminator.run()
    except _Infeasible:
        logger.debug("ilp: infeasible during equality elimination")
        return IlpResult("infeasible")

    search = _Search(eliminator.order, eliminator.domains, eliminator.inequalities,
                     node_budget, deadline)
    status, values = search.run()
    logger.debug(f"ilp: {status} after {search.nodes} nodes"
                 + (" (bound pruning used)" if search.pruned else ""))
    if status == "infeasible":
        return IlpResult("infeasible", nodes=search.nodes)
    if status != "feasible":
        return IlpResult("unknown", reason=status, nodes=search.nodes)

    full = eliminator.back_substitute(values)
    assignment = {name: full.get(name, 0) for name in names}
    if not sys.check(assignment):
        raise CertificateError("assignment does not satisfy the original system")
    return IlpResult("feasible", assignment, nodes=search.nodes)

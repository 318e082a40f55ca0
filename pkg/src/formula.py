"""
Constraint language module
Abstract syntax, type checking and negation normal form for set/cardinality formulas
"""

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple, Union as TypingUnion


class SetCardError(Exception):
    """Base class for all setcard errors"""
    pass


# ---------------------------------------------------------------------------
# Set terms

class SetTerm:
    """Base class for set-valued terms"""
    __slots__ = ()


@dataclass(frozen=True)
class SetVar(SetTerm):
    name: str


@dataclass(frozen=True)
class Empty(SetTerm):
    pass


@dataclass(frozen=True)
class Univ(SetTerm):
    pass


@dataclass(frozen=True)
class Union(SetTerm):
    left: SetTerm
    right: SetTerm


@dataclass(frozen=True)
class Inter(SetTerm):
    left: SetTerm
    right: SetTerm


@dataclass(frozen=True)
class Compl(SetTerm):
    inner: SetTerm


@dataclass(frozen=True)
class Minus(SetTerm):
    left: SetTerm
    right: SetTerm


# ---------------------------------------------------------------------------
# Integer terms

class IntTerm:
    """Base class for integer-valued terms"""
    __slots__ = ()


@dataclass(frozen=True)
class Const(IntTerm):
    value: int


@dataclass(frozen=True)
class IntVar(IntTerm):
    name: str


@dataclass(frozen=True)
class Add(IntTerm):
    left: IntTerm
    right: IntTerm


@dataclass(frozen=True)
class MulConst(IntTerm):
    coeff: int
    inner: IntTerm


@dataclass(frozen=True)
class Card(IntTerm):
    inner: SetTerm


@dataclass(frozen=True)
class MaxC(IntTerm):
    pass


# ---------------------------------------------------------------------------
# Formulas

class Formula:
    """Base class for formulas"""
    __slots__ = ()


class Atom(Formula):
    """Base class for atomic formulas"""
    __slots__ = ()


@dataclass(frozen=True)
class SetEq(Atom):
    left: SetTerm
    right: SetTerm


@dataclass(frozen=True)
class Subset(Atom):
    left: SetTerm
    right: SetTerm


@dataclass(frozen=True)
class IntEq(Atom):
    left: IntTerm
    right: IntTerm


@dataclass(frozen=True)
class IntLe(Atom):
    left: IntTerm
    right: IntTerm


@dataclass(frozen=True)
class IntLt(Atom):
    left: IntTerm
    right: IntTerm


@dataclass(frozen=True)
class Dvd(Atom):
    divisor: int
    term: IntTerm


@dataclass(frozen=True)
class And(Formula):
    args: Tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: Tuple[Formula, ...]


@dataclass(frozen=True)
class Not(Formula):
    inner: Formula


@dataclass(frozen=True)
class TrueFormula(Formula):
    pass


@dataclass(frozen=True)
class FalseFormula(Formula):
    pass


TRUE = TrueFormula()
FALSE = FalseFormula()

Term = TypingUnion[SetTerm, IntTerm]


@dataclass(frozen=True)
class Problem:
    """Declared variables plus a quantifier-free formula"""
    set_vars: Tuple[str, ...]
    int_vars: Tuple[str, ...]
    formula: Formula


def conjoin(parts: List[Formula]) -> Formula:
    """Build a conjunction, collapsing the empty and singleton cases"""
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(tuple(parts))


def symmetric_difference(left: SetTerm, right: SetTerm) -> SetTerm:
    return Union(Inter(left, Compl(right)), Inter(right, Compl(left)))


# ---------------------------------------------------------------------------
# Type errors

@dataclass(frozen=True)
class UndeclaredVariable:
    name: str
    sort: str
    span: Optional[object] = field(default=None, compare=False)

    def __str__(self):
        return f"undeclared {self.sort} variable '{self.name}'"


@dataclass(frozen=True)
class SortClash:
    name: str
    span: Optional[object] = field(default=None, compare=False)

    def __str__(self):
        return f"variable '{self.name}' used with both set and integer sort"


@dataclass(frozen=True)
class BadDivisor:
    position: str
    span: Optional[object] = field(default=None, compare=False)

    def __str__(self):
        return f"divisibility atom at {self.position} needs a divisor >= 1"


TypeIssue = TypingUnion[UndeclaredVariable, SortClash, BadDivisor]


class ProblemTypeError(SetCardError):
    """Raised when a problem fails type checking"""

    def __init__(self, issues: List[TypeIssue]):
        self.issues = list(issues)
        lines = []
        for issue in self.issues:
            span = getattr(issue, "span", None)
            prefix = f"{span}: " if span is not None else ""
            lines.append(f"{prefix}{issue}")
        super().__init__("; ".join(lines))


# ---------------------------------------------------------------------------
# Traversal

def _children(node) -> Tuple:
    if isinstance(node, (And, Or)):
        return node.args
    if isinstance(node, Not):
        return (node.inner,)
    if isinstance(node, (SetEq, Subset, IntEq, IntLe, IntLt, Union, Inter, Minus, Add)):
        return (node.left, node.right)
    if isinstance(node, Dvd):
        return (node.term,)
    if isinstance(node, (Compl, Card)):
        return (node.inner,)
    if isinstance(node, MulConst):
        return (node.inner,)
    return ()


def iter_nodes(node) -> Iterator:
    """Pre-order, left-to-right traversal of formulas and terms"""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(_children(current)))


def free_vars(f: Formula) -> Tuple[List[str], List[str]]:
    """Collect set and integer variable names in first-occurrence order

    Args:
        f: Any formula

    Returns:
        (set variable names, integer variable names)
    """
    set_names: List[str] = []
    int_names: List[str] = []
    for node in iter_nodes(f):
        if isinstance(node, SetVar) and node.name not in set_names:
            set_names.append(node.name)
        elif isinstance(node, IntVar) and node.name not in int_names:
            int_names.append(node.name)
    return set_names, int_names


def _positioned(node, path: str = "0") -> Iterator[Tuple[object, str]]:
    yield node, path
    for i, child in enumerate(_children(node)):
        yield from _positioned(child, f"{path}.{i}")


def type_check(p: Problem) -> List[TypeIssue]:
    """Check declarations, sorts and divisors of a problem

    Args:
        p: Problem to check

    Returns:
        List of issues; empty means the problem is well-typed
    """
    issues: List[TypeIssue] = []
    set_decl = set(p.set_vars)
    int_decl = set(p.int_vars)

    for name in p.set_vars:
        if name in int_decl:
            issues.append(SortClash(name))

    for node, path in _positioned(p.formula):
        if isinstance(node, SetVar):
            if node.name in set_decl:
                continue
            issues.append(SortClash(node.name) if node.name in int_decl
                          else UndeclaredVariable(node.name, "set"))
        elif isinstance(node, IntVar):
            if node.name in int_decl:
                continue
            issues.append(SortClash(node.name) if node.name in set_decl
                          else UndeclaredVariable(node.name, "int"))
        elif isinstance(node, Dvd):
            if not isinstance(node.divisor, int) or node.divisor < 1:
                issues.append(BadDivisor(path))

    unique: List[TypeIssue] = []
    for issue in issues:
        if issue not in unique:
            unique.append(issue)
    return unique


def check_problem(p: Problem) -> Problem:
    """Type check a problem, raising ProblemTypeError on failure"""
    issues = type_check(p)
    if issues:
        raise ProblemTypeError(issues)
    return p


def merge_declarations(p1: Problem, p2: Problem) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    """Union of the declarations of two problems, p1's order first

    Raises:
        ProblemTypeError: If a name is a set in one problem and an integer in the other
    """
    set_vars = list(p1.set_vars) + [v for v in p2.set_vars if v not in p1.set_vars]
    int_vars = list(p1.int_vars) + [v for v in p2.int_vars if v not in p1.int_vars]
    clashes = [SortClash(name) for name in set_vars if name in int_vars]
    if clashes:
        raise ProblemTypeError(clashes)
    return tuple(set_vars), tuple(int_vars)


# ---------------------------------------------------------------------------
# Negation normal form

def remove_minus(s: SetTerm) -> SetTerm:
    if isinstance(s, Minus):
        return Inter(remove_minus(s.left), Compl(remove_minus(s.right)))
    if isinstance(s, Union):
        return Union(remove_minus(s.left), remove_minus(s.right))
    if isinstance(s, Inter):
        return Inter(remove_minus(s.left), remove_minus(s.right))
    if isinstance(s, Compl):
        return Compl(remove_minus(s.inner))
    return s


def _normalize_int(t: IntTerm) -> IntTerm:
    if isinstance(t, Card):
        return Card(remove_minus(t.inner))
    if isinstance(t, Add):
        return Add(_normalize_int(t.left), _normalize_int(t.right))
    if isinstance(t, MulConst):
        return MulConst(t.coeff, _normalize_int(t.inner))
    return t


def _normalize_atom(a: Atom) -> Atom:
    if isinstance(a, SetEq):
        return SetEq(remove_minus(a.left), remove_minus(a.right))
    if isinstance(a, Subset):
        return Subset(remove_minus(a.left), remove_minus(a.right))
    if isinstance(a, Dvd):
        return Dvd(a.divisor, _normalize_int(a.term))
    return type(a)(_normalize_int(a.left), _normalize_int(a.right))


def _negate_atom(a: Atom) -> Formula:
    if isinstance(a, IntLe):
        return IntLt(a.right, a.left)
    if isinstance(a, IntLt):
        return IntLe(a.right, a.left)
    if isinstance(a, IntEq):
        return Or((IntLt(a.left, a.right), IntLt(a.right, a.left)))
    if isinstance(a, SetEq):
        return IntLe(Const(1), Card(symmetric_difference(a.left, a.right)))
    if isinstance(a, Subset):
        return IntLe(Const(1), Card(Inter(a.left, Compl(a.right))))
    # negated divisibility stays a marked negative literal
    return Not(a)


def to_nnf(f: Formula) -> Formula:
    """Push negations down to atoms and remove set difference

    Args:
        f: Type-checked formula

    Returns:
        Equivalent formula in which Not only wraps Dvd atoms
    """
    return _nnf(f, positive=True)


def _nnf(f: Formula, positive: bool) -> Formula:
    if isinstance(f, TrueFormula):
        return TRUE if positive else FALSE
    if isinstance(f, FalseFormula):
        return FALSE if positive else TRUE
    if isinstance(f, Not):
        return _nnf(f.inner, not positive)
    if isinstance(f, And):
        parts = tuple(_nnf(g, positive) for g in f.args)
        return And(parts) if positive else Or(parts)
    if isinstance(f, Or):
        parts = tuple(_nnf(g, positive) for g in f.args)
        return Or(parts) if positive else And(parts)
    atom = _normalize_atom(f)
    return atom if positive else _negate_atom(atom)


def is_literal(f: Formula) -> bool:
    """True for atoms and negated divisibility atoms"""
    return isinstance(f, Atom) or (isinstance(f, Not) and isinstance(f.inner, Dvd))

"""
S-expression parser
Reads and prints .cbs problem files and i-tree files
"""

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union as TypingUnion

from .formula import (
    Add, And, BadDivisor, Card, Compl, Const, Dvd, Empty, FALSE, Formula, IntEq,
    IntLe, IntLt, IntTerm, IntVar, Inter, MaxC, Minus, MulConst, Not, Or, Problem,
    ProblemTypeError, SetCardError, SetEq, SetTerm, SetVar, SortClash, Subset, TRUE,
    TrueFormula, FalseFormula, UndeclaredVariable, Union, Univ, check_problem,
)
from .itree import ITree, ITreeNode, validate_itree


KEYWORDS = frozenset({
    "declare-set", "declare-int", "assert", "true", "false", "and", "or", "not",
    "subset", "dvd", "empty", "univ", "union", "inter", "compl", "minus",
    "maxc", "card",
})

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
NAT_RE = re.compile(r"[0-9]+\Z")

SET_HEADS = {"union": 2, "inter": 2, "minus": 2, "compl": 1}
INT_HEADS = {"+": 2, "*": 2, "card": 1}


@dataclass(frozen=True)
class SourceSpan:
    """Byte offsets plus 1-based line/column of a piece of input"""
    start: int
    end: int
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


class ParseError(SetCardError):
    """Malformed input text"""

    def __init__(self, message: str, span: SourceSpan):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}")


@dataclass(frozen=True)
class SAtom:
    text: str
    span: SourceSpan


@dataclass(frozen=True)
class SList:
    items: Tuple["SNode", ...]
    span: SourceSpan


SNode = TypingUnion[SAtom, SList]


def is_identifier(name: str) -> bool:
    return bool(IDENT_RE.match(name)) and name not in KEYWORDS


def numeral(atom: SAtom) -> int:
    """Decimal value of a NAT token of any length"""
    return int(atom.text)


class SExprReader:
    """Reader for parenthesised token trees with source positions"""

    def __init__(self, text: str):
        """Initialize reader

        Args:
            text: Input text
        """
        self.text = text
        self.position = 0
        self.byte_position = 0
        self.line = 1
        self.column = 1

    def read_all(self) -> List[SNode]:
        """Read every top-level s-expression

        Returns:
            List of parsed nodes

        Raises:
            ParseError: On unbalanced parentheses
        """
        nodes = []
        while True:
            self._skip_whitespace()
            if self.position >= len(self.text):
                return nodes
            nodes.append(self._read())

    def _here(self) -> SourceSpan:
        return SourceSpan(self.byte_position, self.byte_position, self.line, self.column)

    def _advance(self):
        ch = self.text[self.position]
        self.position += 1
        self.byte_position += len(ch.encode("utf-8"))
        if ch == "\n":
            self.line += 1
            self.column = 1
        else:
            self.column += 1

    def _skip_whitespace(self):
        while self.position < len(self.text):
            ch = self.text[self.position]
            if ch == ";":
                while self.position < len(self.text) and self.text[self.position] != "\n":
                    self._advance()
            elif ch.isspace():
                self._advance()
            else:
                return

    def _read(self) -> SNode:
        start = self._here()
        ch = self.text[self.position]
        if ch == "(":
            return self._read_list(start)
        if ch == ")":
            self._advance()
            raise ParseError("unexpected ')'", self._span_from(start))
        return self._read_token(start)

    def _span_from(self, start: SourceSpan) -> SourceSpan:
        return SourceSpan(start.start, self.byte_position, start.line, start.column)

    def _read_token(self, start: SourceSpan) -> SAtom:
        begin = self.position
        while self.position < len(self.text):
            ch = self.text[self.position]
            if ch.isspace() or ch in "();":
                break
            self._advance()
        return SAtom(self.text[begin:self.position], self._span_from(start))

    def _read_list(self, start: SourceSpan) -> SList:
        self._advance()  # (
        items = []
        while True:
            self._skip_whitespace()
            if self.position >= len(self.text):
                raise ParseError("expected ')' before end of input", self._span_from(start))
            if self.text[self.position] == ")":
                self._advance()
                return SList(tuple(items), self._span_from(start))
            items.append(self._read())


# ---------------------------------------------------------------------------
# Problems

class ProblemBuilder:
    """Turns s-expressions into a typed Problem"""

    def __init__(self):
        self.set_vars: List[str] = []
        self.int_vars: List[str] = []

    def build(self, nodes: List[SNode], end: SourceSpan) -> Problem:
        asserts: List[Formula] = []
        for node in nodes:
            head, args = self._split(node, "a declaration or assert")
            if head.text in ("declare-set", "declare-int"):
                if asserts:
                    raise ParseError("declarations must precede asserts", node.span)
                self._declare(head.text, args, node)
            elif head.text == "assert":
                if len(args) != 1:
                    raise ParseError("expected exactly one formula in assert", node.span)
                asserts.append(self.formula(args[0]))
            else:
                raise ParseError(f"expected 'declare-set', 'declare-int' or 'assert', got '{head.text}'",
                                 head.span)
        if not asserts:
            raise ParseError("expected at least one assert", end)
        formula = asserts[0] if len(asserts) == 1 else And(tuple(asserts))
        return Problem(tuple(self.set_vars), tuple(self.int_vars), formula)

    def _split(self, node: SNode, expected: str) -> Tuple[SAtom, Tuple[SNode, ...]]:
        if not isinstance(node, SList) or not node.items or not isinstance(node.items[0], SAtom):
            raise ParseError(f"expected {expected}", node.span)
        return node.items[0], node.items[1:]

    def _declare(self, kind: str, args: Tuple[SNode, ...], node: SList):
        if len(args) != 1 or not isinstance(args[0], SAtom):
            raise ParseError(f"expected one identifier in {kind}", node.span)
        name = args[0].text
        if not is_identifier(name):
            raise ParseError(f"expected identifier, got '{name}'", args[0].span)
        mine, other = ((self.set_vars, self.int_vars) if kind == "declare-set"
                       else (self.int_vars, self.set_vars))
        if name in other:
            raise ProblemTypeError([SortClash(name, args[0].span)])
        if name in mine:
            raise ParseError(f"duplicate declaration of '{name}'", args[0].span)
        mine.append(name)

    def _arity(self, node: SList, head: SAtom, count: int):
        if len(node.items) - 1 != count:
            raise ParseError(f"'{head.text}' expects {count} argument(s), got {len(node.items) - 1}",
                             node.span)

    def formula(self, node: SNode) -> Formula:
        if isinstance(node, SAtom):
            if node.text == "true":
                return TRUE
            if node.text == "false":
                return FALSE
            raise ParseError(f"expected formula, got '{node.text}'", node.span)

        head, args = self._split(node, "formula")
        op = head.text
        if op in ("and", "or"):
            if not args:
                raise ParseError(f"'{op}' expects at least one formula", node.span)
            parts = tuple(self.formula(a) for a in args)
            return And(parts) if op == "and" else Or(parts)
        if op == "not":
            self._arity(node, head, 1)
            return Not(self.formula(args[0]))
        if op == "=":
            self._arity(node, head, 2)
            left_sort = self.sort_of(args[0])
            right_sort = self.sort_of(args[1])
            if left_sort != right_sort:
                raise ProblemTypeError([SortClash(self._describe(args[1]), node.span)])
            if left_sort == "set":
                return SetEq(self.set_term(args[0]), self.set_term(args[1]))
            return IntEq(self.int_term(args[0]), self.int_term(args[1]))
        if op == "subset":
            self._arity(node, head, 2)
            return Subset(self.set_term(args[0]), self.set_term(args[1]))
        if op in ("<=", "<"):
            self._arity(node, head, 2)
            cls = IntLe if op == "<=" else IntLt
            return cls(self.int_term(args[0]), self.int_term(args[1]))
        if op == "dvd":
            self._arity(node, head, 2)
            divisor = args[0]
            if not isinstance(divisor, SAtom) or not NAT_RE.match(divisor.text):
                raise ParseError("expected numeral divisor", divisor.span)
            value = numeral(divisor)
            if value < 1:
                raise ProblemTypeError([BadDivisor(str(divisor.span), divisor.span)])
            return Dvd(value, self.int_term(args[1]))
        raise ParseError(f"unknown formula operator '{op}'", head.span)

    @staticmethod
    def _describe(node: SNode) -> str:
        if isinstance(node, SAtom):
            return node.text
        head = node.items[0] if node.items else None
        return head.text if isinstance(head, SAtom) else "(...)"

    def sort_of(self, node: SNode) -> str:
        """Sort ('set' or 'int') of a term, from its head symbol or declaration"""
        if isinstance(node, SAtom):
            text = node.text
            if NAT_RE.match(text) or text == "maxc":
                return "int"
            if text in ("empty", "univ"):
                return "set"
            if text in self.set_vars:
                return "set"
            if text in self.int_vars:
                return "int"
            if is_identifier(text):
                raise ProblemTypeError([UndeclaredVariable(text, "variable", node.span)])
            raise ParseError(f"expected term, got '{text}'", node.span)
        if not node.items or not isinstance(node.items[0], SAtom):
            raise ParseError("expected term", node.span)
        head = node.items[0].text
        if head in SET_HEADS:
            return "set"
        if head in INT_HEADS:
            return "int"
        raise ParseError(f"unknown term operator '{head}'", node.items[0].span)

    def set_term(self, node: SNode) -> SetTerm:
        if isinstance(node, SAtom):
            text = node.text
            if text == "empty":
                return Empty()
            if text == "univ":
                return Univ()
            if text in self.set_vars:
                return SetVar(text)
            if text in self.int_vars:
                raise ProblemTypeError([SortClash(text, node.span)])
            if is_identifier(text):
                raise ProblemTypeError([UndeclaredVariable(text, "set", node.span)])
            raise ParseError(f"expected set term, got '{text}'", node.span)

        head, args = self._split(node, "set term")
        op = head.text
        if op not in SET_HEADS:
            if op in INT_HEADS:
                raise ProblemTypeError([SortClash(op, head.span)])
            raise ParseError(f"unknown set operator '{op}'", head.span)
        self._arity(node, head, SET_HEADS[op])
        if op == "compl":
            return Compl(self.set_term(args[0]))
        left, right = self.set_term(args[0]), self.set_term(args[1])
        return {"union": Union, "inter": Inter, "minus": Minus}[op](left, right)

    def int_term(self, node: SNode) -> IntTerm:
        if isinstance(node, SAtom):
            text = node.text
            if NAT_RE.match(text):
                return Const(numeral(node))
            if text == "maxc":
                return MaxC()
            if text in self.int_vars:
                return IntVar(text)
            if text in self.set_vars:
                raise ProblemTypeError([SortClash(text, node.span)])
            if is_identifier(text):
                raise ProblemTypeError([UndeclaredVariable(text, "int", node.span)])
            raise ParseError(f"expected integer term, got '{text}'", node.span)

        head, args = self._split(node, "integer term")
        op = head.text
        if op not in INT_HEADS:
            if op in SET_HEADS:
                raise ProblemTypeError([SortClash(op, head.span)])
            raise ParseError(f"unknown integer operator '{op}'", head.span)
        self._arity(node, head, INT_HEADS[op])
        if op == "card":
            return Card(self.set_term(args[0]))
        if op == "+":
            return Add(self.int_term(args[0]), self.int_term(args[1]))
        coeff = args[0]
        if not isinstance(coeff, SAtom) or not NAT_RE.match(coeff.text):
            raise ParseError("expected numeral coefficient", coeff.span)
        return MulConst(numeral(coeff), self.int_term(args[1]))


def _end_span(reader: SExprReader) -> SourceSpan:
    return reader._here()


def parse_problem(text: str) -> Problem:
    """Parse a .cbs problem

    Args:
        text: Problem text

    Returns:
        Type-checked Problem

    Raises:
        ParseError: On malformed syntax
        ProblemTypeError: On undeclared variables, sort clashes or bad divisors
    """
    reader = SExprReader(text)
    try:
        nodes = reader.read_all()
        problem = ProblemBuilder().build(nodes, _end_span(reader))
    except RecursionError:
        raise ParseError("expression nesting too deep", SourceSpan(0, 0, 1, 1))
    return check_problem(problem)


def print_set(s: SetTerm) -> str:
    if isinstance(s, SetVar):
        return s.name
    if isinstance(s, Empty):
        return "empty"
    if isinstance(s, Univ):
        return "univ"
    if isinstance(s, Compl):
        return f"(compl {print_set(s.inner)})"
    op = {Union: "union", Inter: "inter", Minus: "minus"}[type(s)]
    return f"({op} {print_set(s.left)} {print_set(s.right)})"


def print_int(t: IntTerm) -> str:
    if isinstance(t, Const):
        return str(t.value)
    if isinstance(t, IntVar):
        return t.name
    if isinstance(t, MaxC):
        return "maxc"
    if isinstance(t, Card):
        return f"(card {print_set(t.inner)})"
    if isinstance(t, Add):
        return f"(+ {print_int(t.left)} {print_int(t.right)})"
    return f"(* {t.coeff} {print_int(t.inner)})"


def print_formula(f: Formula) -> str:
    if isinstance(f, TrueFormula):
        return "true"
    if isinstance(f, FalseFormula):
        return "false"
    if isinstance(f, (And, Or)):
        op = "and" if isinstance(f, And) else "or"
        return f"({op} " + " ".join(print_formula(g) for g in f.args) + ")"
    if isinstance(f, Not):
        return f"(not {print_formula(f.inner)})"
    if isinstance(f, SetEq):
        return f"(= {print_set(f.left)} {print_set(f.right)})"
    if isinstance(f, Subset):
        return f"(subset {print_set(f.left)} {print_set(f.right)})"
    if isinstance(f, Dvd):
        return f"(dvd {f.divisor} {print_int(f.term)})"
    op = {IntEq: "=", IntLe: "<=", IntLt: "<"}[type(f)]
    return f"({op} {print_int(f.left)} {print_int(f.right)})"


def print_problem(p: Problem) -> str:
    """Canonical text of a problem; parse_problem reproduces the same AST"""
    lines = [f"(declare-set {name})" for name in p.set_vars]
    lines += [f"(declare-int {name})" for name in p.int_vars]
    lines.append(f"(assert {print_formula(p.formula)})")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# I-trees

def _parse_bound(atom: SNode, allow_inf: bool) -> Optional[int]:
    if isinstance(atom, SAtom):
        if NAT_RE.match(atom.text):
            return numeral(atom)
        if allow_inf and atom.text == "inf":
            return None
    raise ParseError("expected numeral" + (" or 'inf'" if allow_inf else ""), atom.span)


def _parse_flag(atom: SNode) -> bool:
    if isinstance(atom, SAtom) and atom.text in ("true", "false"):
        return atom.text == "true"
    raise ParseError("expected 'true' or 'false'", atom.span)


def _parse_node(node: SNode) -> ITreeNode:
    if (not isinstance(node, SList) or len(node.items) < 2
            or not isinstance(node.items[0], SAtom) or node.items[0].text != "node"):
        raise ParseError("expected (node NAME ...)", node.span)
    name_atom = node.items[1]
    if not isinstance(name_atom, SAtom) or not is_identifier(name_atom.text):
        raise ParseError("expected node variable name", name_atom.span)

    lo, hi, disjoint, exhaustive = 0, None, False, False
    children = []
    items = node.items[2:]
    i = 0
    while i < len(items):
        item = items[i]
        if isinstance(item, SAtom) and item.text.startswith(":"):
            if i + 1 >= len(items):
                raise ParseError(f"missing value for {item.text}", item.span)
            value = items[i + 1]
            if item.text == ":lo":
                lo = _parse_bound(value, allow_inf=False)
            elif item.text == ":hi":
                hi = _parse_bound(value, allow_inf=True)
            elif item.text == ":disjoint":
                disjoint = _parse_flag(value)
            elif item.text == ":exhaustive":
                exhaustive = _parse_flag(value)
            else:
                raise ParseError(f"unknown node attribute '{item.text}'", item.span)
            i += 2
        else:
            children.append(_parse_node(item))
            i += 1
    return ITreeNode(name_atom.text, lo, hi, tuple(children), disjoint, exhaustive)


def parse_itree(text: str) -> ITree:
    """Parse an i-tree file of the form (itree (node A ...) ...)

    Raises:
        ParseError: On malformed syntax
        MalformedTree: If the forest violates the i-tree invariants
    """
    reader = SExprReader(text)
    try:
        nodes = reader.read_all()
        if len(nodes) != 1:
            span = nodes[1].span if len(nodes) > 1 else _end_span(reader)
            raise ParseError("expected exactly one (itree ...) form", span)
        top = nodes[0]
        if (not isinstance(top, SList) or not top.items or not isinstance(top.items[0], SAtom)
                or top.items[0].text != "itree"):
            raise ParseError("expected (itree ...)", top.span)
        tree = ITree(tuple(_parse_node(n) for n in top.items[1:]))
    except RecursionError:
        raise ParseError("expression nesting too deep", SourceSpan(0, 0, 1, 1))
    validate_itree(tree)
    return tree


def _print_node(node: ITreeNode) -> str:
    parts = [f"node {node.var}"]
    if node.lo:
        parts.append(f":lo {node.lo}")
    if node.hi is not None:
        parts.append(f":hi {node.hi}")
    if node.disjoint:
        parts.append(":disjoint true")
    if node.exhaustive:
        parts.append(":exhaustive true")
    parts.extend(_print_node(c) for c in node.children)
    return "(" + " ".join(parts) + ")"


def print_itree(tree: ITree) -> str:
    return "(itree" + "".join(" " + _print_node(r) for r in tree.roots) + ")\n"

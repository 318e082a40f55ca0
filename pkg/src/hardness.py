"""
Hardness instances module
Encoders from 3-SAT and subset-sum, their input readers, and seeded random
problem and i-tree generators
"""

import itertools
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .formula import (
    Add, And, Card, Compl, Const, Dvd, Empty, Formula, IntEq, IntLe, IntLt, IntTerm, IntVar,
    Inter, MaxC, Minus, MulConst, Not, Or, Problem, SetCardError, SetEq, SetTerm, SetVar,
    Subset, Union, Univ, conjoin,
)
from .itree import ITree, ITreeNode
from .oracle import Model

Literal = Tuple[int, bool]


class MalformedCnf(SetCardError):
    """Invalid 3-CNF instance or DIMACS text"""
    pass


class MalformedInstance(SetCardError):
    """Invalid subset-sum instance or input text"""
    pass


# ---------------------------------------------------------------------------
# 3-SAT

@dataclass(frozen=True)
class Cnf3:
    num_vars: int
    clauses: Tuple[Tuple[Literal, Literal, Literal], ...]

    def validate(self) -> "Cnf3":
        if self.num_vars < 0:
            raise MalformedCnf("negative variable count")
        for n, clause in enumerate(self.clauses):
            if len(clause) != 3:
                raise MalformedCnf(f"clause {n + 1} has {len(clause)} literals, expected 3")
            for var, _ in clause:
                if not 0 <= var < self.num_vars:
                    raise MalformedCnf(f"clause {n + 1} mentions variable {var + 1} out of range")
        return self


def _cnf_var(i: int) -> str:
    return f"X{i}"


def encode_3sat(c: Cnf3) -> Problem:
    """One set variable per propositional variable in a one-element universe

    Args:
        c: 3-CNF instance

    Returns:
        Problem satisfiable iff c is; X_i nonempty reads as variable i true

    Raises:
        MalformedCnf: If c is not well-formed
    """
    c.validate()
    parts: List[Formula] = [IntEq(MaxC(), Const(1))]
    for clause in c.clauses:
        literals = [SetVar(_cnf_var(v)) if positive else Compl(SetVar(_cnf_var(v)))
                    for v, positive in clause]
        union = Union(Union(literals[0], literals[1]), literals[2])
        parts.append(IntLe(Const(1), Card(union)))
    return Problem(tuple(_cnf_var(i) for i in range(c.num_vars)), (), conjoin(parts))


def decode_3sat(c: Cnf3, model: Model) -> List[bool]:
    return [model.sets[_cnf_var(i)].size > 0 for i in range(c.num_vars)]


def clause_satisfied(clause, assignment: List[bool]) -> bool:
    return any(assignment[v] == positive for v, positive in clause)


def cnf_satisfiable(c: Cnf3) -> Optional[List[bool]]:
    """First satisfying assignment by brute force, or None"""
    for values in itertools.product((False, True), repeat=c.num_vars):
        assignment = list(values)
        if all(clause_satisfied(cl, assignment) for cl in c.clauses):
            return assignment
    return None


def parse_dimacs(text: str) -> Cnf3:
    """Read DIMACS CNF with exactly three literals per clause

    Raises:
        MalformedCnf: On a bad header, bad literal, clause width other than 3,
            or a clause count differing from the header
    """
    header = None
    clauses = []
    current: List[int] = []
    for number, line in enumerate(text.splitlines(), 1):
        tokens = line.split()
        if not tokens or tokens[0] == "c" or tokens[0] == "%":
            continue
        if tokens[0] == "p":
            if header is not None or len(tokens) != 4 or tokens[1] != "cnf":
                raise MalformedCnf(f"line {number}: expected 'p cnf VARS CLAUSES'")
            try:
                header = (int(tokens[2]), int(tokens[3]))
            except ValueError:
                raise MalformedCnf(f"line {number}: header counts must be integers")
            continue
        if header is None:
            raise MalformedCnf(f"line {number}: clause before 'p cnf' header")
        for token in tokens:
            try:
                lit = int(token)
            except ValueError:
                raise MalformedCnf(f"line {number}: bad literal '{token}'")
            if lit == 0:
                if len(current) != 3:
                    raise MalformedCnf(f"line {number}: clause has {len(current)} literals, expected 3")
                clauses.append(tuple((abs(l) - 1, l > 0) for l in current))
                current = []
            else:
                if abs(lit) > header[0]:
                    raise MalformedCnf(f"line {number}: variable {abs(lit)} exceeds header count")
                current.append(lit)
    if header is None:
        raise MalformedCnf("missing 'p cnf' header")
    if current:
        raise MalformedCnf("last clause is not terminated by 0")
    if len(clauses) != header[1]:
        raise MalformedCnf(f"header declares {header[1]} clauses, found {len(clauses)}")
    return Cnf3(header[0], tuple(clauses)).validate()


# ---------------------------------------------------------------------------
# Subset-sum

@dataclass(frozen=True)
class SubsetSumInstance:
    items: Tuple[int, ...]
    target: int

    def validate(self) -> "SubsetSumInstance":
        if not self.items:
            raise MalformedInstance("subset-sum instance needs at least one item")
        if self.target < 0 or any(a < 0 for a in self.items):
            raise MalformedInstance("items and target must be natural numbers")
        return self


def _item_var(i: int) -> str:
    return f"X{i + 1}"


def encode_subset_sum(s: SubsetSumInstance) -> Problem:
    """Pairwise-disjoint sets X1..Xm of size 0 or a_i whose union S has the target size

    Raises:
        MalformedInstance: If s is not well-formed
    """
    s.validate()
    names = [_item_var(i) for i in range(len(s.items))]
    parts: List[Formula] = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            parts.append(SetEq(Inter(SetVar(names[i]), SetVar(names[j])), Empty()))
    union: SetTerm = SetVar(names[0])
    for name in names[1:]:
        union = Union(union, SetVar(name))
    parts.append(SetEq(SetVar("S"), union))
    for name, a in zip(names, s.items):
        card = Card(SetVar(name))
        parts.append(Or((IntEq(card, Const(0)), IntEq(card, Const(a)))))
    parts.append(IntEq(Card(SetVar("S")), Const(s.target)))
    return Problem(tuple(names) + ("S",), (), conjoin(parts))


def decode_subset_sum(s: SubsetSumInstance, model: Model) -> List[int]:
    """Indexes of chosen items"""
    return [i for i, a in enumerate(s.items)
            if a > 0 and model.sets[_item_var(i)].size == a]


def subset_sum_choice(s: SubsetSumInstance) -> Optional[List[int]]:
    """Smallest-first brute-force choice of item indexes summing to the target"""
    for size in range(len(s.items) + 1):
        for chosen in itertools.combinations(range(len(s.items)), size):
            if sum(s.items[i] for i in chosen) == s.target:
                return list(chosen)
    return None


def parse_subset_sum(text: str) -> SubsetSumInstance:
    """One decimal number per line, target first; blank lines and # comments skipped

    Raises:
        MalformedInstance: On non-numeric lines or a missing item list
    """
    numbers = []
    for number, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if not stripped.isdigit():
            raise MalformedInstance(f"line {number}: expected a natural number, got '{stripped}'")
        numbers.append(int(stripped))
    if len(numbers) < 2:
        raise MalformedInstance("expected a target followed by at least one item")
    return SubsetSumInstance(tuple(numbers[1:]), numbers[0]).validate()


# ---------------------------------------------------------------------------
# Random problems

@dataclass(frozen=True)
class Profile:
    set_vars: int
    int_vars: int
    depth: int
    const_bits: int


PROFILES: Dict[str, Profile] = {
    "small": Profile(set_vars=2, int_vars=2, depth=3, const_bits=2),
}

SET_NAMES = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
INT_NAMES = "xyzuvw"


def set_var_names(count: int) -> List[str]:
    return [SET_NAMES[i] if i < len(SET_NAMES) else f"S{i}" for i in range(count)]


def int_var_names(count: int) -> List[str]:
    return [INT_NAMES[i] if i < len(INT_NAMES) else f"k{i}" for i in range(count)]


class ProblemGenerator:
    """Formula generator driven by a seeded Mersenne Twister (random.Random)"""

    def __init__(self, seed: int, profile: Profile):
        self.rng = random.Random(seed)
        self.profile = profile
        self.sets = set_var_names(profile.set_vars)
        self.ints = int_var_names(profile.int_vars)

    def constant(self) -> int:
        return self.rng.randrange(1 << self.profile.const_bits)

    def set_term(self) -> SetTerm:
        rng = self.rng
        roll = rng.randrange(10)
        if roll < 4 or not self.sets:
            return self._set_leaf()
        left, right = self._set_leaf(), self._set_leaf()
        if roll < 6:
            return Union(left, right)
        if roll < 8:
            return Inter(left, right)
        if roll < 9:
            return Minus(left, right)
        return Compl(left)

    def _set_leaf(self) -> SetTerm:
        if not self.sets or self.rng.randrange(10) == 0:
            return self.rng.choice((Empty(), Univ()))
        return SetVar(self.rng.choice(self.sets))

    def _int_leaf(self, allow_const: bool = True) -> IntTerm:
        choices = ["card", "maxc"]
        if allow_const:
            choices.append("const")
        if self.ints:
            choices.append("var")
        kind = self.rng.choice(choices)
        if kind == "const":
            return Const(self.constant())
        if kind == "var":
            return IntVar(self.rng.choice(self.ints))
        if kind == "maxc":
            return MaxC()
        return Card(self.set_term())

    def int_term(self) -> IntTerm:
        roll = self.rng.randrange(4)
        if roll == 0:
            return Add(self._int_leaf(), self._int_leaf())
        if roll == 1:
            return MulConst(self.constant(), self._int_leaf(allow_const=False))
        return self._int_leaf()

    def atom(self) -> Formula:
        kinds = ["int-eq", "int-le", "int-lt", "dvd"]
        if self.sets:
            kinds += ["set-eq", "subset"]
        kind = self.rng.choice(kinds)
        if kind == "set-eq":
            return SetEq(self.set_term(), self.set_term())
        if kind == "subset":
            return Subset(self.set_term(), self.set_term())
        if kind == "dvd":
            return Dvd(self.rng.randrange(1, max(2, 1 << self.profile.const_bits)), self.int_term())
        left, right = self.int_term(), self.int_term()
        if kind == "int-eq":
            return IntEq(left, right)
        if kind == "int-le":
            return IntLe(left, right)
        return IntLt(left, right)

    def formula(self, depth: int) -> Formula:
        if depth <= 1 or self.rng.randrange(10) < 3:
            return self.atom()
        roll = self.rng.randrange(5)
        if roll < 2:
            return And((self.formula(depth - 1), self.formula(depth - 1)))
        if roll < 4:
            return Or((self.formula(depth - 1), self.formula(depth - 1)))
        return Not(self.formula(depth - 1))

    def problem(self) -> Problem:
        return Problem(tuple(self.sets), tuple(self.ints), self.formula(self.profile.depth))


def gen_random(seed: int, profile: Profile) -> Problem:
    """Deterministic random problem; same seed and profile give the same problem

    Args:
        seed: Seed of the Mersenne Twister stream
        profile: Variable counts, formula depth and constant width

    Returns:
        Well-typed Problem declaring every profile variable
    """
    if profile.depth < 1 or profile.const_bits < 1 or profile.set_vars < 0 or profile.int_vars < 0:
        raise ValueError("profile depth and const_bits must be positive")
    return ProblemGenerator(seed, profile).problem()


# ---------------------------------------------------------------------------
# Random i-trees

def _random_bounds(rng: random.Random, max_bound: int, inf_rate: float) -> Tuple[int, Optional[int]]:
    lo = rng.randint(0, max_bound)
    if rng.random() < inf_rate:
        return lo, None
    return lo, rng.randint(lo, max_bound)


def build_forest(names: List[str], parents: List[int], attrs: List[Tuple[int, Optional[int], bool, bool]]) -> ITree:
    """Assemble a forest from parent indexes (each parent precedes its children)"""
    kids: List[List[int]] = [[] for _ in names]
    for i, p in enumerate(parents):
        if p >= 0:
            kids[p].append(i)
    built: List[Optional[ITreeNode]] = [None] * len(names)
    for i in reversed(range(len(names))):
        lo, hi, disjoint, exhaustive = attrs[i]
        has_kids = bool(kids[i])
        built[i] = ITreeNode(names[i], lo, hi, tuple(built[k] for k in kids[i]),
                             disjoint and has_kids, exhaustive and has_kids)
    return ITree(tuple(built[i] for i, p in enumerate(parents) if p < 0))


def gen_random_itree(seed: int, nodes: int, max_bound: int = 5, inf_rate: float = 0.2,
                     root_rate: float = 0.2, prefix: str = "T") -> ITree:
    """Random well-formed forest with exactly `nodes` nodes

    Args:
        seed: Seed of the Mersenne Twister stream
        nodes: Number of nodes
        max_bound: Largest finite interval bound
        inf_rate: Probability of an unbounded upper end
        root_rate: Probability that a node after the first starts a new root
        prefix: Variable name prefix
    """
    rng = random.Random(seed)
    return _random_forest(rng, [f"{prefix}{i}" for i in range(nodes)], max_bound, inf_rate, root_rate)


def _random_forest(rng: random.Random, names: List[str], max_bound: int,
                   inf_rate: float, root_rate: float) -> ITree:
    parents = []
    attrs = []
    for i in range(len(names)):
        if i == 0 or rng.random() < root_rate:
            parents.append(-1)
        else:
            parents.append(rng.randrange(i))
        lo, hi = _random_bounds(rng, max_bound, inf_rate)
        attrs.append((lo, hi, rng.random() < 0.5, rng.random() < 0.5))
    return build_forest(names, parents, attrs)


def _weaken(rng: random.Random, tree: ITree, max_bound: int) -> ITree:
    """Same shape with some flags cleared and intervals widened"""

    def widen(node: ITreeNode) -> ITreeNode:
        lo = rng.randint(0, node.lo)
        hi = node.hi
        if hi is not None and rng.random() < 0.5:
            hi = None if rng.random() < 0.3 else rng.randint(hi, max_bound + 1)
        return ITreeNode(node.var, lo, hi, tuple(widen(c) for c in node.children),
                         node.disjoint and rng.random() < 0.7,
                         node.exhaustive and rng.random() < 0.7)

    return ITree(tuple(widen(r) for r in tree.roots))


def gen_itree_pair(seed: int, max_nodes: int = 4, max_bound: int = 5) -> Tuple[ITree, ITree]:
    """Premise and conclusion forests over a shared variable pool

    Half of the conclusions weaken the premise, the rest are independent
    forests over a shuffled subset of the premise's variables.
    """
    rng = random.Random(seed)
    names = [f"T{i}" for i in range(rng.randint(1, max_nodes))]
    t1 = _random_forest(rng, names, max_bound, 0.2, 0.2)
    if rng.random() < 0.5:
        return t1, _weaken(rng, t1, max_bound)
    pool = list(names)
    rng.shuffle(pool)
    t2 = _random_forest(rng, pool[:rng.randint(1, len(pool))], max_bound, 0.3, 0.3)
    return t1, t2

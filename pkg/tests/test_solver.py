#!/usr/bin/env python3
"""
Test script for the Venn-region solver
"""

import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config_manager import SolverLimits
from src.formula import (
    Add, And, Card, Compl, Const, Dvd, Empty, FALSE, IntEq, IntLe, IntLt, IntVar, Inter, MaxC,
    MulConst, Not, Or, Problem, SetEq, SetVar, Subset, TRUE, Union, Univ,
)
from src.ilp import Relation
from src.oracle import eval_formula
from src.solver import (
    FreshNames, Strategy, VerdictKind, entails, linearize, reduce_atom, region_label,
    region_set, region_unknown, solve,
)

A, B, C = SetVar("A"), SetVar("B"), SetVar("C")
x, y = IntVar("x"), IntVar("y")


def test_region_naming():
    """Test region labels and unknown names"""
    print("Test 1: Region naming...")
    assert region_label(1, 2) == "10"
    assert region_label(2, 2) == "01"
    assert region_unknown(3, 2) == "#l_11"
    assert region_unknown(0, 0) == "#l_"
    regions = region_set(Union(A, Compl(B)), ("A", "B"))
    assert regions.signatures() == [0, 1, 3]
    assert regions.labels() == ["00", "10", "11"]
    assert len(region_set(Univ(), ("A", "B", "C"))) == 8
    assert len(region_set(Empty(), ("A",))) == 0
    print("✓ Bit i is membership in the i-th variable")
    return True


def test_linearize_and_reduce():
    """Test reduction of atoms to rows over region counts"""
    print("\nTest 2: Atom reduction...")
    order = ("A", "B")
    term = linearize(Add(MulConst(2, Card(A)), Const(3)), order)
    assert term.constant == 3
    assert term.coeffs == {"#l_10": 2, "#l_11": 2}
    assert linearize(MaxC(), ("A",)).coeffs == {"#l_0": 1, "#l_1": 1}

    subset = reduce_atom(Subset(A, B), order)
    assert len(subset.rows) == 1
    row = subset.rows[0]
    assert row.coeffs == {"#l_10": 1} and row.relation is Relation.EQ and row.rhs == 0

    lt = reduce_atom(IntLt(Card(A), x), order).rows[0]
    assert lt.coeffs == {"#l_10": 1, "#l_11": 1, "x": -1}
    assert lt.relation is Relation.LE and lt.rhs == -1

    fresh = FreshNames(["__q0"])
    dvd = reduce_atom(Not(Dvd(3, x)), order, fresh)
    assert [name for name, _ in dvd.fresh] == ["__q1", "__r1"]
    assert len(dvd.rows) == 3
    print("✓ Literals reduced to linear rows")
    return True


def test_sat_with_model():
    """Test a satisfiable problem and its checked model"""
    print("\nTest 3: Satisfiable problem...")
    p = Problem(("A", "B"), ("x",), And((
        Subset(A, B),
        IntEq(Card(B), Add(Card(A), Const(3))),
        IntLe(Const(2), Card(A)),
        IntEq(x, MaxC()),
    )))
    verdict = solve(p)
    assert verdict.kind is VerdictKind.SAT and verdict.token == "sat"
    assert eval_formula(p.formula, verdict.model)
    assert verdict.model.sets["B"].size == verdict.model.sets["A"].size + 3
    assert verdict.strategy == "explicit"
    print(f"✓ Model with universe {verdict.model.universe_size}")
    return True


def test_unsat():
    """Test unsatisfiable problems"""
    print("\nTest 4: Unsatisfiable problems...")
    contradiction = Problem(("A", "B"), (), And((Subset(A, B), IntLt(Card(B), Card(A)))))
    assert solve(contradiction).kind is VerdictKind.UNSAT

    parity = Problem(("A",), (), And((IntEq(MulConst(2, Card(A)), Const(7)),)))
    assert solve(parity).kind is VerdictKind.UNSAT

    assert solve(Problem((), (), FALSE)).kind is VerdictKind.UNSAT
    print("✓ Unsat decided")
    return True


def test_disjunction_and_negation():
    """Test branching over disjunctions and negated atoms"""
    print("\nTest 5: Disjunctions and negations...")
    p = Problem(("A", "B"), ("x",), And((
        Or((IntLt(Card(A), Const(0)), IntEq(Card(Inter(A, B)), Const(2)))),
        Not(SetEq(A, B)),
        Not(Dvd(2, x)),
        IntEq(x, Card(A)),
    )))
    verdict = solve(p)
    assert verdict.kind is VerdictKind.SAT
    m = verdict.model
    assert eval_formula(p.formula, m)
    assert m.ints["x"] % 2 == 1
    assert verdict.stats.branches >= 1
    print(f"✓ Sat after {verdict.stats.branches} branches")
    return True


def test_integer_variables_negative():
    """Test that integer variables may be negative"""
    print("\nTest 6: Negative integers...")
    p = Problem(("A",), ("x", "y"), And((
        IntEq(Add(x, y), Card(A)),
        IntLt(x, Const(-3)),
        IntEq(Card(A), Const(1)),
    )))
    verdict = solve(p)
    assert verdict.kind is VerdictKind.SAT
    assert verdict.model.ints["x"] < -3
    assert verdict.model.ints["x"] + verdict.model.ints["y"] == 1
    print("✓ Integers range over all of Z")
    return True


def test_true_and_empty_declarations():
    """Test trivial formulas"""
    print("\nTest 7: Trivial formulas...")
    verdict = solve(Problem(("A",), ("x",), TRUE))
    assert verdict.kind is VerdictKind.SAT
    assert verdict.model.universe_size == 0 and verdict.model.ints == {"x": 0}

    verdict = solve(Problem((), (), IntEq(MaxC(), Const(0))))
    assert verdict.kind is VerdictKind.SAT
    print("✓ Trivial problems decided")
    return True


def test_sparse_strategy():
    """Test the sparse strategy against the explicit one"""
    print("\nTest 8: Sparse strategy...")
    p = Problem(("A", "B", "C"), (), And((
        IntEq(Card(A), Const(2)),
        SetEq(Inter(A, B), Empty()),
        IntLe(Const(1), Card(Inter(B, C))),
    )))
    explicit = solve(p, Strategy.explicit())
    sparse = solve(p, Strategy.sparse())
    full = solve(p, Strategy.sparse(8))
    assert explicit.kind is VerdictKind.SAT
    assert sparse.kind is VerdictKind.SAT
    assert full.kind is VerdictKind.SAT
    assert eval_formula(p.formula, sparse.model)
    assert sparse.strategy.startswith("sparse(")
    assert full.strategy == "sparse(8)"

    contradiction = Problem(("A", "B"), (), And((Subset(A, B), IntLt(Card(B), Card(A)))))
    assert solve(contradiction, Strategy.sparse(4)).kind is VerdictKind.UNSAT
    narrow = solve(contradiction, Strategy.sparse(1))
    assert narrow.kind in (VerdictKind.UNSAT, VerdictKind.UNKNOWN)
    if narrow.kind is VerdictKind.UNKNOWN:
        assert narrow.reason == "sparse-incomplete"
    print("✓ Sparse agrees with explicit")
    return True


def test_sparse_needs_regions():
    """Test that too small a sparse budget cannot claim unsat"""
    print("\nTest 9: Sparse budget too small...")
    # three pairwise disjoint nonempty sets need three nonzero regions
    p = Problem(("A", "B", "C"), (), And((
        IntLe(Const(1), Card(A)), IntLe(Const(1), Card(B)), IntLe(Const(1), Card(C)),
        SetEq(Inter(A, B), Empty()), SetEq(Inter(A, C), Empty()), SetEq(Inter(B, C), Empty()),
    )))
    verdict = solve(p, Strategy.sparse(2))
    assert verdict.kind is VerdictKind.UNKNOWN
    assert verdict.reason == "sparse-incomplete"
    assert solve(p, Strategy.sparse(3)).kind is VerdictKind.SAT
    print("✓ Incomplete sparse search is unknown")
    return True


def test_limits():
    """Test resource limits turning into unknown verdicts"""
    print("\nTest 10: Resource limits...")
    p = Problem(("A", "B", "C"), (), IntLe(Const(1), Card(A)))
    tight = SolverLimits(explicit_max_set_vars=2)
    verdict = solve(p, Strategy.explicit(), tight)
    assert verdict.kind is VerdictKind.UNKNOWN and verdict.reason == "memory"

    branches = SolverLimits(max_branches=0)
    verdict = solve(p, Strategy.explicit(), branches)
    assert verdict.kind is VerdictKind.UNKNOWN and verdict.reason == "branch-count"

    expired = SolverLimits(time_limit_s=-1.0)
    verdict = solve(p, Strategy.explicit(), expired)
    assert verdict.kind is VerdictKind.UNKNOWN and verdict.reason == "time"
    print("✓ Limits reported")
    return True


def test_entailment():
    """Test entailment with counter-models"""
    print("\nTest 11: Entailment...")
    premise = Problem(("A", "B"), (), And((Subset(A, B), IntEq(Card(B), Const(3)))))
    weaker = Problem(("A",), (), IntLe(Card(A), Const(3)))
    stronger = Problem(("A",), (), IntEq(Card(A), Const(3)))

    yes = entails(premise, weaker)
    assert yes.verdict == "yes" and yes.counter_model is None

    no = entails(premise, stronger)
    assert no.verdict == "no"
    assert eval_formula(premise.formula, no.counter_model)
    assert not eval_formula(stronger.formula, no.counter_model)

    # the conclusion's own variables are unconstrained by the premise
    other = Problem(("C",), (), IntEq(Card(SetVar("C")), Const(0)))
    assert entails(premise, other).verdict == "no"
    print("✓ Entailment decided")
    return True


def main():
    print("=== Solver Tests ===\n")

    tests = [
        test_region_naming,
        test_linearize_and_reduce,
        test_sat_with_model,
        test_unsat,
        test_disjunction_and_negation,
        test_integer_variables_negative,
        test_true_and_empty_declarations,
        test_sparse_strategy,
        test_sparse_needs_regions,
        test_limits,
        test_entailment,
    ]

    results = []
    for test in tests:
        try:
            results.append(test())
        except Exception as e:
            print(f"✗ Test failed with exception: {e!r}")
            results.append(False)

    print(f"\n=== Results: {sum(results)}/{len(results)} tests passed ===")

    if all(results):
        print("✓ All tests passed!")
        return 0
    else:
        print("✗ Some tests failed")
        return 1


if __name__ == "__main__":
    sys.exit(main())

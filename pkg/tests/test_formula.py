#!/usr/bin/env python3
"""
Test script for the constraint language: type checking and normal forms
"""

import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.formula import (
    Add, And, BadDivisor, Card, Compl, Const, Dvd, Empty, FALSE, IntEq, IntLe, IntLt, IntVar,
    Inter, Minus, Not, Or, Problem, ProblemTypeError, SetEq, SetVar, SortClash, Subset, TRUE,
    UndeclaredVariable, Union, check_problem, free_vars, is_literal, iter_nodes,
    merge_declarations, remove_minus, symmetric_difference, to_nnf, type_check,
)
from src.hardness import PROFILES, gen_random

A, B = SetVar("A"), SetVar("B")
x, y = IntVar("x"), IntVar("y")


def test_well_typed():
    """Test that a declared problem has no issues"""
    print("Test 1: Well-typed problem...")
    p = Problem(("A", "B"), ("x",), And((Subset(A, B), IntEq(Card(A), x))))
    assert type_check(p) == []
    assert check_problem(p) is p
    print("✓ No issues reported")
    return True


def test_undeclared_and_clash():
    """Test undeclared variables and sort clashes"""
    print("\nTest 2: Undeclared variables and sort clashes...")
    p = Problem(("A",), ("x",), And((SetEq(SetVar("C"), A), IntLe(IntVar("A"), x))))
    issues = type_check(p)
    assert UndeclaredVariable("C", "set") in issues
    assert SortClash("A") in issues
    assert len(issues) == 2

    try:
        check_problem(p)
        print("✗ Should have raised ProblemTypeError")
        return False
    except ProblemTypeError as e:
        assert len(e.issues) == 2
        print(f"✓ Correctly rejected: {e}")
    return True


def test_bad_divisor():
    """Test divisibility atoms with a zero divisor"""
    print("\nTest 3: Divisor below one...")
    p = Problem((), ("x",), Dvd(0, x))
    issues = type_check(p)
    assert len(issues) == 1 and isinstance(issues[0], BadDivisor)
    print(f"✓ {issues[0]}")
    return True


def test_double_declaration():
    """Test a name declared with both sorts"""
    print("\nTest 4: Name declared as set and integer...")
    p = Problem(("A",), ("A",), TRUE)
    assert SortClash("A") in type_check(p)

    try:
        merge_declarations(Problem(("A",), (), TRUE), Problem((), ("A",), TRUE))
        print("✗ Should have raised ProblemTypeError")
        return False
    except ProblemTypeError:
        pass
    merged = merge_declarations(Problem(("A",), ("x",), TRUE), Problem(("B", "A"), ("y",), TRUE))
    assert merged == (("A", "B"), ("x", "y"))
    print("✓ Clash detected, merge keeps first order")
    return True


def test_free_vars_and_traversal():
    """Test variable collection order and preorder traversal"""
    print("\nTest 5: Free variables and traversal...")
    f = Or((IntLt(y, Card(Union(B, A))), SetEq(A, Empty())))
    assert free_vars(f) == (["B", "A"], ["y"])
    kinds = [type(node).__name__ for node in iter_nodes(IntLe(x, Add(y, Const(1))))]
    assert kinds == ["IntLe", "IntVar", "Add", "IntVar", "Const"]
    print("✓ First-occurrence order")
    return True


def test_remove_minus():
    """Test rewriting of set difference"""
    print("\nTest 6: Set difference removal...")
    assert remove_minus(Minus(A, B)) == Inter(A, Compl(B))
    assert remove_minus(Compl(Minus(A, Minus(B, A)))) == Compl(Inter(A, Compl(Inter(B, Compl(A)))))
    print("✓ Minus rewritten to intersection with complement")
    return True


def test_nnf_atoms():
    """Test negation of each atom kind"""
    print("\nTest 7: Negated atoms...")
    assert to_nnf(Not(IntLe(x, y))) == IntLt(y, x)
    assert to_nnf(Not(IntLt(x, y))) == IntLe(y, x)
    assert to_nnf(Not(IntEq(x, y))) == Or((IntLt(x, y), IntLt(y, x)))
    assert to_nnf(Not(SetEq(A, B))) == IntLe(Const(1), Card(symmetric_difference(A, B)))
    assert to_nnf(Not(Subset(A, B))) == IntLe(Const(1), Card(Inter(A, Compl(B))))
    assert to_nnf(Not(Dvd(2, x))) == Not(Dvd(2, x))
    print("✓ Negations pushed into atoms")
    return True


def test_nnf_connectives():
    """Test De Morgan and constant handling"""
    print("\nTest 8: Connectives...")
    f = Not(And((IntLe(x, y), Not(Or((Dvd(3, y), FALSE))))))
    expected = Or((IntLt(y, x), Or((Dvd(3, y), FALSE))))
    assert to_nnf(f) == expected
    assert to_nnf(Not(TRUE)) == FALSE
    assert to_nnf(Not(Not(Subset(Minus(A, B), A)))) == Subset(Inter(A, Compl(B)), A)

    for node in iter_nodes(to_nnf(Not(And((SetEq(A, B), Not(Dvd(2, x))))))):
        if isinstance(node, Not):
            assert isinstance(node.inner, Dvd)
    assert is_literal(Not(Dvd(2, x)))
    assert not is_literal(Not(IntLe(x, y)))
    print("✓ Negation only wraps divisibility atoms")
    return True


def test_nnf_idempotent():
    """Test that a second normalization changes nothing"""
    print("\nTest 9: NNF idempotence...")
    formulas = [
        Not(And((IntLe(x, y), Not(Or((Dvd(3, y), FALSE)))))),
        Not(Or((SetEq(Minus(A, B), Empty()), Not(Subset(Compl(A), B))))),
        Not(IntEq(Card(Minus(A, B)), Add(x, Const(2)))),
    ]
    formulas += [gen_random(seed, PROFILES["small"]).formula for seed in range(40)]
    for f in formulas:
        once = to_nnf(f)
        assert to_nnf(once) == once, f
    print(f"✓ {len(formulas)} formulas unchanged by a second pass")
    return True


def main():
    print("=== Constraint Language Tests ===\n")

    tests = [
        test_well_typed,
        test_undeclared_and_clash,
        test_bad_divisor,
        test_double_declaration,
        test_free_vars_and_traversal,
        test_remove_minus,
        test_nnf_atoms,
        test_nnf_connectives,
        test_nnf_idempotent,
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

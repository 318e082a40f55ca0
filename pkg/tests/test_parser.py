#!/usr/bin/env python3
"""
Test script for the problem and i-tree file parsers
"""

import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.formula import (
    And, Card, Compl, Const, Dvd, Empty, IntEq, IntLe, IntVar, MaxC, MulConst, Not, Or,
    ProblemTypeError, SetEq, SetVar, SortClash, Subset, TRUE, UndeclaredVariable, Union, Univ,
)
from src.itree import ITree, ITreeNode, MalformedTree
from src.sexpr_parser import ParseError, parse_itree, parse_problem, print_itree, print_problem

SAMPLE = """\
; two sets and a counter
(declare-set A)
(declare-set B)
(declare-int x)
(assert (and (subset A B)
             (= (card (union A (compl B))) (+ x 1))
             (not (dvd 3 (* 2 x)))))
"""


def test_parse_sample():
    """Test parsing a problem with comments and nested terms"""
    print("Test 1: Parsing a sample problem...")
    p = parse_problem(SAMPLE)
    assert p.set_vars == ("A", "B")
    assert p.int_vars == ("x",)
    A, B, x = SetVar("A"), SetVar("B"), IntVar("x")
    assert p.formula.args[0] == Subset(A, B)
    eq = p.formula.args[1]
    assert isinstance(eq, IntEq)
    assert eq.left == Card(Union(A, Compl(B)))
    assert p.formula.args[2] == Not(Dvd(3, MulConst(2, x)))
    print("✓ Problem parsed")
    return True


def test_multiple_asserts():
    """Test that several asserts become one conjunction"""
    print("\nTest 2: Multiple asserts...")
    p = parse_problem("(declare-int x) (assert (<= 0 x)) (assert true)")
    assert p.formula == And((IntLe(Const(0), IntVar("x")), TRUE))
    single = parse_problem("(assert (= maxc 4))")
    assert single.formula == IntEq(MaxC(), Const(4))
    print("✓ Asserts conjoined in order")
    return True


def test_equality_sorts():
    """Test that '=' picks set or integer equality from its arguments"""
    print("\nTest 3: Equality sort resolution...")
    p = parse_problem("(declare-set A) (assert (or (= A empty) (= univ A)))")
    assert p.formula == Or((SetEq(SetVar("A"), Empty()), SetEq(Univ(), SetVar("A"))))
    try:
        parse_problem("(declare-set A) (declare-int x) (assert (= A x))")
        print("✗ Should have raised ProblemTypeError")
        return False
    except ProblemTypeError as e:
        assert isinstance(e.issues[0], SortClash)
    print("✓ Sorts resolved")
    return True


def test_big_numerals():
    """Test numerals beyond machine words"""
    print("\nTest 4: Arbitrary-precision numerals...")
    big = 2 ** 200 + 7
    p = parse_problem(f"(declare-int x) (assert (= x {big}))")
    assert p.formula == IntEq(IntVar("x"), Const(big))
    assert str(big) in print_problem(p)
    print("✓ Numeral preserved exactly")
    return True


def test_parse_errors():
    """Test syntax errors with positions"""
    print("\nTest 5: Syntax errors...")
    cases = [
        ("(declare-set A)\n(assert (subset A A)", 2, 1),
        ("(assert true))", 1, 14),
        ("(declare-set A)\n(assert (frob A))", 2, 10),
        ("(declare-set A)", None, None),
        ("(assert (subset A))", None, None),
        ("(assert (dvd x 3))", None, None),
        ("(assert true) (declare-int x)", 1, 15),
    ]
    for text, line, column in cases:
        try:
            parse_problem(text)
            print(f"✗ Should have rejected {text!r}")
            return False
        except ParseError as e:
            if line is not None:
                assert (e.span.line, e.span.column) == (line, column), (text, str(e))
    print("✓ Malformed input rejected with positions")
    return True


def test_type_errors():
    """Test undeclared variables, duplicates and divisors"""
    print("\nTest 6: Type errors from the parser...")
    try:
        parse_problem("(assert (subset A A))")
        print("✗ Should have raised ProblemTypeError")
        return False
    except ProblemTypeError as e:
        assert isinstance(e.issues[0], UndeclaredVariable)

    try:
        parse_problem("(declare-set A) (declare-int A) (assert true)")
        print("✗ Should have raised ProblemTypeError")
        return False
    except ProblemTypeError:
        pass

    try:
        parse_problem("(declare-int x) (assert (dvd 0 x))")
        print("✗ Should have raised ProblemTypeError")
        return False
    except ProblemTypeError:
        pass

    try:
        parse_problem("(declare-set A) (declare-set A) (assert true)")
        print("✗ Should have raised ParseError")
        return False
    except ParseError:
        pass
    print("✓ Type errors reported")
    return True


def test_print_reparse():
    """Test that printed problems parse back to the same tree"""
    print("\nTest 7: Printing and reparsing...")
    p = parse_problem(SAMPLE)
    text = print_problem(p)
    assert text.endswith("\n")
    assert parse_problem(text) == p
    print("✓ Printed text reproduces the problem")
    return True


def test_deep_nesting():
    """Test that very deep nesting is rejected cleanly"""
    print("\nTest 8: Deep nesting...")
    depth = 100000
    text = "(declare-set A) (assert " + "(not " * depth + "true" + ")" * depth + ")"
    try:
        parse_problem(text)
    except ParseError as e:
        print(f"✓ Rejected: {e}")
        return True
    print("✓ Parsed without recursion failure")
    return True


def test_itree_files():
    """Test reading and printing i-tree files"""
    print("\nTest 9: I-tree files...")
    text = "(itree (node A :lo 2 :hi inf :disjoint true (node B :hi 3) (node C)) (node D :hi 0))"
    tree = parse_itree(text)
    expected = ITree((
        ITreeNode("A", 2, None, (ITreeNode("B", 0, 3), ITreeNode("C")), disjoint=True),
        ITreeNode("D", 0, 0),
    ))
    assert tree == expected
    assert parse_itree(print_itree(tree)) == tree
    assert parse_itree("(itree)") == ITree()
    print("✓ I-tree parsed and printed")
    return True


def test_itree_errors():
    """Test malformed i-tree files"""
    print("\nTest 10: Malformed i-trees...")
    for text in ["(itree (node A :lo 3 :hi 2))",
                 "(itree (node A (node A)))",
                 "(itree (node A :exhaustive true))"]:
        try:
            parse_itree(text)
            print(f"✗ Should have rejected {text}")
            return False
        except MalformedTree:
            pass
    for text in ["(itree (node A :lo inf))", "(itree (node A :color red))", "(tree)",
                 "(itree (node A :hi))"]:
        try:
            parse_itree(text)
            print(f"✗ Should have rejected {text}")
            return False
        except ParseError:
            pass
    print("✓ Malformed i-trees rejected")
    return True


def main():
    print("=== Parser Tests ===\n")

    tests = [
        test_parse_sample,
        test_multiple_asserts,
        test_equality_sorts,
        test_big_numerals,
        test_parse_errors,
        test_type_errors,
        test_print_reparse,
        test_deep_nesting,
        test_itree_files,
        test_itree_errors,
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

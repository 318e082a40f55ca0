#!/usr/bin/env python3
"""
Test script for the setcard command line
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

PROJECT_ROOT = Path(__file__).parent.parent
SCRIPT = PROJECT_ROOT / "setcard.py"

SAT_PROBLEM = """\
(declare-set A)
(declare-set B)
(declare-int x)
(assert (and (subset A B) (= (card B) (+ (card A) 2)) (<= 1 (card A)) (= x (card B))))
"""

UNSAT_PROBLEM = """\
(declare-set A)
(declare-set B)
(assert (and (subset A B) (< (card B) (card A))))
"""

DISJOINT_THREE = """\
(declare-set A)
(declare-set B)
(declare-set C)
(assert (and (<= 1 (card A)) (<= 1 (card B)) (<= 1 (card C))
             (= (inter A B) empty) (= (inter A C) empty) (= (inter B C) empty)))
"""

PARTITION = "(itree (node A :hi 10 :disjoint true :exhaustive true (node B :lo 3) (node C :lo 4 :hi 5)))\n"


class Workspace:
    """Temporary directory holding input files and an isolated config dir"""

    def __init__(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.config_dir = self.root / "config"

    def write(self, name: str, text: str) -> str:
        path = self.root / name
        path.write_text(text, encoding='utf-8')
        return str(path)

    def write_config(self, text: str):
        self.config_dir.mkdir(parents=True, exist_ok=True)
        (self.config_dir / "config.toml").write_text(text, encoding='utf-8')

    def run(self, *args):
        return subprocess.run(
            [sys.executable, str(SCRIPT), "--config-dir", str(self.config_dir), *args],
            capture_output=True,
            text=True,
            cwd=PROJECT_ROOT
        )

    def close(self):
        self.tmp.cleanup()


def test_solve_text_and_json():
    """Test solve in text and JSON form"""
    print("Test 1: solve...")
    ws = Workspace()
    try:
        sat_file = ws.write("sat.cbs", SAT_PROBLEM)
        result = ws.run("solve", sat_file)
        assert result.returncode == 0, result.stderr
        assert result.stdout.splitlines()[0] == "sat"

        result = ws.run("solve", sat_file, "--json")
        assert result.returncode == 0, result.stderr
        report = json.loads(result.stdout)
        assert report["verdict"] == "sat"
        assert report["stats"]["ms"] == 0
        assert report["strategy"] == "explicit"
        ints = report["model"]["ints"]
        assert int(ints["x"]) == len(report["model"]["sets"]["B"])

        result = ws.run("solve", ws.write("unsat.cbs", UNSAT_PROBLEM))
        assert result.returncode == 0
        assert result.stdout.splitlines()[0] == "unsat"
        print("✓ Verdicts printed")
        return True
    finally:
        ws.close()


def test_input_errors():
    """Test exit code 2 on bad input"""
    print("\nTest 2: Input errors...")
    ws = Workspace()
    try:
        cases = [
            ("solve", ws.write("bad.cbs", "(assert (subset A")),
            ("solve", ws.write("untyped.cbs", "(assert (subset A B))")),
            ("solve", str(ws.root / "missing.cbs")),
            ("itree-sat", ws.write("bad.itree", "(itree (node A :lo 3 :hi 1))")),
            ("encode", "3sat", ws.write("bad.cnf", "p cnf 3 1\n1 2 0\n")),
        ]
        for args in cases:
            result = ws.run(*args)
            assert result.returncode == 2, (args, result.stdout, result.stderr)
            assert result.stdout == ""
            assert "rror" in result.stderr

        ws.write_config("[solver]\nstrategy = \"greedy\"\n")
        result = ws.run("solve", ws.write("sat.cbs", SAT_PROBLEM))
        assert result.returncode == 2
        assert "Configuration error" in result.stderr
        print("✓ Exit code 2 for malformed input")
        return True
    finally:
        ws.close()


def test_resource_limits():
    """Test exit code 3 for resource-limited unknowns"""
    print("\nTest 3: Resource limits...")
    ws = Workspace()
    try:
        ws.write_config("[limits]\nexplicit_max_set_vars = 1\noracle_ceiling = 10\n")
        sat_file = ws.write("sat.cbs", SAT_PROBLEM)

        result = ws.run("solve", sat_file, "--json")
        assert result.returncode == 3, result.stderr
        report = json.loads(result.stdout)
        assert report["verdict"] == "unknown" and report["reason"] == "memory"

        result = ws.run("oracle", sat_file, "--region-bound", "5", "--int-bound", "5", "--json")
        assert result.returncode == 3
        report = json.loads(result.stdout)
        assert report["verdict"] == "unknown" and report["reason"] == "oracle-ceiling"
        print("✓ Exit code 3 for limits")
        return True
    finally:
        ws.close()


def test_sparse_escalation():
    """Test escalation from an incomplete sparse search"""
    print("\nTest 4: Sparse escalation...")
    ws = Workspace()
    try:
        problem = ws.write("three.cbs", DISJOINT_THREE)
        result = ws.run("solve", problem, "--strategy", "sparse", "--sparse-k", "2", "--json")
        assert result.returncode == 0, result.stderr
        report = json.loads(result.stdout)
        assert report["verdict"] == "sat"
        assert report["strategy"] == "sparse(2)->explicit"

        ws.write_config("[solver]\nsparse_escalate = false\n")
        result = ws.run("solve", problem, "--strategy", "sparse", "--sparse-k", "2")
        assert result.returncode == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "unknown"
        assert "reason: sparse-incomplete" in lines
        print("✓ Escalation follows the config")
        return True
    finally:
        ws.close()


def test_entail():
    """Test entailment between problem files"""
    print("\nTest 5: entail...")
    ws = Workspace()
    try:
        premise = ws.write("p.cbs", "(declare-set A) (declare-set B)\n"
                                    "(assert (and (subset A B) (= (card B) 3)))\n")
        weaker = ws.write("w.cbs", "(declare-set A) (assert (<= (card A) 3))\n")
        stronger = ws.write("s.cbs", "(declare-set A) (assert (= (card A) 3))\n")

        result = ws.run("entail", premise, weaker)
        assert result.returncode == 0 and result.stdout.splitlines()[0] == "yes"

        result = ws.run("entail", premise, stronger, "--json")
        assert result.returncode == 0
        report = json.loads(result.stdout)
        assert report["verdict"] == "no"
        assert report["model"]["universe"] >= 3
        print("✓ Entailment verdicts")
        return True
    finally:
        ws.close()


def test_itree_commands():
    """Test the i-tree commands"""
    print("\nTest 6: i-tree commands...")
    ws = Workspace()
    try:
        tree = ws.write("t.itree", PARTITION)
        result = ws.run("itree-sat", tree, "--json")
        assert result.returncode == 0, result.stderr
        report = json.loads(result.stdout)
        assert report["verdict"] == "sat"
        assert report["witness"] == {"A": "7", "B": "3", "C": "4"}

        result = ws.run("itree-tighten", tree, "--json")
        report = json.loads(result.stdout)
        assert report["intervals"]["B"] == ["3", "6"]

        unsat = ws.write("u.itree", "(itree (node A :hi 2 (node B :lo 3)))")
        result = ws.run("itree-sat", unsat)
        lines = result.stdout.splitlines()
        assert lines[0] == "unsat" and "conflict: A" in lines

        weaker = ws.write("w.itree", "(itree (node B :hi 6))")
        result = ws.run("itree-entail", tree, weaker)
        assert result.stdout.splitlines()[0] == "yes"

        stronger = ws.write("s.itree", "(itree (node B :hi 5))")
        result = ws.run("itree-entail", tree, stronger)
        lines = result.stdout.splitlines()
        assert lines[0] == "no"
        assert any(line.startswith("B = ") for line in lines)
        print("✓ i-tree commands")
        return True
    finally:
        ws.close()


def test_encode_and_gen():
    """Test instance encoding and generation"""
    print("\nTest 7: encode and gen...")
    ws = Workspace()
    try:
        cnf = ws.write("f.cnf", "p cnf 3 2\n1 -2 3 0\n-1 2 -3 0\n")
        out = str(ws.root / "f.cbs")
        result = ws.run("encode", "3sat", cnf, "-o", out)
        assert result.returncode == 0, result.stderr
        result = ws.run("solve", out)
        assert result.stdout.splitlines()[0] == "sat"

        sums = ws.write("s.txt", "9\n3\n5\n4\n")
        result = ws.run("encode", "subsetsum", sums)
        assert result.returncode == 0
        assert "(declare-set S)" in result.stdout

        first = ws.run("gen", "--seed", "11")
        second = ws.run("gen", "--seed", "11")
        assert first.returncode == 0
        assert first.stdout == second.stdout
        assert first.stdout.startswith("(declare-set A)")
        print("✓ Instances written")
        return True
    finally:
        ws.close()


def test_oracle_and_eval():
    """Test the oracle command and model evaluation"""
    print("\nTest 8: oracle and eval...")
    ws = Workspace()
    try:
        sat_file = ws.write("sat.cbs", SAT_PROBLEM)
        result = ws.run("oracle", sat_file, "--region-bound", "3", "--int-bound", "4", "--json")
        assert result.returncode == 0, result.stderr
        report = json.loads(result.stdout)
        assert report["verdict"] == "sat"
        assert report["bounds"] == {"region_bound": "3", "int_bound": "4"}

        model_file = ws.write("model.json", result.stdout)
        result = ws.run("eval", sat_file, model_file)
        assert result.returncode == 0 and result.stdout.strip() == "true"

        unsat_file = ws.write("unsat.cbs", UNSAT_PROBLEM)
        result = ws.run("eval", unsat_file, model_file)
        assert result.returncode == 0 and result.stdout.strip() == "false"

        broken = ws.write("broken.json", "{not json")
        result = ws.run("eval", sat_file, broken)
        assert result.returncode == 2
        print("✓ Oracle model evaluates to true")
        return True
    finally:
        ws.close()


def test_check():
    """Test differential runs"""
    print("\nTest 9: check...")
    ws = Workspace()
    try:
        result = ws.run("check", "--seed", "0", "--count", "2", "--json")
        assert result.returncode == 0, result.stdout + result.stderr
        report = json.loads(result.stdout)
        assert report["verdict"] == "yes"
        counts = report["check"]
        assert counts["instances"] == 2 and counts["disagree"] == 0

        result = ws.run("check", "--seed", "0", "--count", "6", "--profile", "itree", "--json")
        assert result.returncode == 0, result.stdout + result.stderr
        report = json.loads(result.stdout)
        assert report["verdict"] == "yes"
        assert report["entailment"]["pairs"] == 6
        print("✓ No disagreements")
        return True
    finally:
        ws.close()


def test_init_and_help():
    """Test init and the help screen"""
    print("\nTest 10: init and help...")
    ws = Workspace()
    try:
        result = ws.run("init")
        assert result.returncode == 0, result.stderr
        assert (ws.config_dir / "config.toml").exists()
        result = ws.run("init")
        assert "already exists" in result.stdout

        result = ws.run()
        assert result.returncode == 0
        assert "usage" in result.stdout.lower()

        result = ws.run("--timing", "solve", ws.write("sat.cbs", SAT_PROBLEM), "--json")
        assert json.loads(result.stdout)["stats"]["ms"] >= 0
        assert (ws.config_dir / "logs" / "setcard.log").exists()
        print("✓ Configuration initialized")
        return True
    finally:
        ws.close()


def test_large_constants():
    """Test constants beyond the machine word end to end"""
    print("\nTest 11: Large constants...")
    ws = Workspace()
    try:
        word = 2 ** 64
        nested = ws.write("nested.cbs", "(declare-set A) (declare-set B)\n"
                                        f"(assert (and (subset A B) (= (card A) {word}) (= (card B) {word - 1})))\n")
        result = ws.run("solve", nested)
        assert result.returncode == 0, result.stderr
        assert result.stdout.splitlines()[0] == "unsat"

        half = 2 ** 255
        union = ws.write("union.cbs", "(declare-set A) (declare-set B) (declare-set C)\n"
                                      f"(assert (and (= A (union B C)) (= (card B) {half}) (= (card C) {half})"
                                      f" (= (card A) {2 * half - 1})))\n")
        result = ws.run("solve", union, "--json")
        assert result.returncode == 0, result.stderr
        report = json.loads(result.stdout)
        assert report["verdict"] == "sat"
        assert report["model"]["universe"] >= 2 * half - 1
        assert report["model"]["sets"] == {}
        assert set(report["model"]["set_ranges"]) == {"A", "B", "C"}

        result = ws.run("solve", union, "--model")
        assert result.returncode == 0, result.stderr
        lines = result.stdout.splitlines()
        assert lines[0] == "sat"
        assert any(line.startswith("B = [") for line in lines)

        tree = ws.write("big.itree", f"(itree (node A :lo {word} (node B :lo 3)))\n")
        result = ws.run("itree-sat", tree, "--json")
        assert result.returncode == 0, result.stderr
        assert json.loads(result.stdout)["witness"]["A"] == str(word)

        items = ws.write("items.txt", f"{2 ** 63 + 3}\n{2 ** 63}\n{2 ** 64 + 5}\n3\n")
        encoded = str(ws.root / "items.cbs")
        assert ws.run("encode", "subsetsum", items, "-o", encoded).returncode == 0
        result = ws.run("solve", encoded)
        assert result.returncode == 0, result.stderr
        assert result.stdout.splitlines()[0] == "sat"
        print("✓ No overflow above 2^63")
        return True
    finally:
        ws.close()


def main():
    print("=== Command Line Tests ===\n")

    tests = [
        test_solve_text_and_json,
        test_input_errors,
        test_resource_limits,
        test_sparse_escalation,
        test_entail,
        test_itree_commands,
        test_encode_and_gen,
        test_oracle_and_eval,
        test_check,
        test_init_and_help,
        test_large_constants,
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

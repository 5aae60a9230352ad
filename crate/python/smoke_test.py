"""Builds the extension module with cargo and exercises it.

    python3 python/smoke_test.py
"""

import importlib.util
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "trinum-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libtrinum.so"
    dest = pathlib.Path(tempfile.mkdtemp()) / "trinum.so"
    shutil.copy(lib, dest)
    spec = importlib.util.spec_from_file_location("trinum", dest)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    trinum = build()

    assert trinum.triangular_number(12) == 78
    f = trinum.TriangularForm([3, 1, 1])
    assert f.coeffs == [1, 1, 3]
    assert str(f) == "[1,1,3]"
    assert not f.represents(8)
    assert f.missing_up_to(20) == [8, 17]
    assert f.smallest_missing("odd", 100) == 17
    assert trinum.TriangularForm([1, 1, 1]).count_reps(6) == 6
    xs = trinum.TriangularForm([2, 3, 4]).find_representation(89)
    assert trinum.TriangularForm([2, 3, 4]).evaluate(xs) == 89
    assert trinum.TriangularForm([1, 2, 5]).shift_identity_check(0)

    q = trinum.TernaryQuadraticForm(2, 4, 7, 0, 0, 4)
    assert q.rq_count(9) == 8
    assert trinum.rq_odd_count([1, 2, 5], 8) == 8
    assert trinum.inclusion_exclusion_odd([1, 1, 1], 3) == 8

    tree = trinum.build_tree("odd")
    assert tree["s0"] == [1, 5, 7, 9, 11, 13, 17, 19, 25, 29, 35, 49, 89]
    assert ([1, 1, 3, 12], 81) in tree["stuck"]
    assert trinum.build_tree("form:2,3,4")["s0"] == [2, 3, 4, 5, 10, 16, 17, 19, 89]

    size, violations = trinum.witness_form([1], 5, "odd", 2000)
    assert size == 1 + 3 * 36 and violations == []
    assert all(trinum.table1_check(r, 500) == [] for r in range(8))
    assert trinum.table3_scan([1, 2, 8], 100000)["sporadics"] == [4, 19, 112]
    assert all(ok for _, ok in trinum.verify_rules([1, 1, 3], 10000))

    code, out, _ = trinum.run_cli(["truant", "--form", "1,1,3", "--set", "odd", "--bound", "1000"])
    assert code == 0 and out.endswith("TRUANT\t17\n")

    for bad in (lambda: trinum.TriangularForm([1, 0]), lambda: trinum.TernaryQuadraticForm(1, 1, -1)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    sys.exit(main())

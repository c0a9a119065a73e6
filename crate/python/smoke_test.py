"""Smoke test for the pybtq extension module.

Usage: python3 python/smoke_test.py [path/to/libpybtq.so]

Without an argument the module is built with cargo first.
"""

import cmath
import json
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def locate_library():
    if len(sys.argv) > 1:
        return sys.argv[1]
    subprocess.run(["cargo", "build", "--release", "-p", "btq-py"], cwd=ROOT, check=True)
    ext = {"darwin": "dylib", "win32": "dll"}.get(sys.platform, "so")
    prefix = "" if sys.platform == "win32" else "lib"
    return os.path.join(ROOT, "target", "release", f"{prefix}pybtq.{ext}")


def load(lib, workdir):
    # Python wants the file named after the module.
    target = os.path.join(workdir, "pybtq.pyd" if sys.platform == "win32" else "pybtq.so")
    shutil.copy(lib, target)
    sys.path.insert(0, workdir)
    import pybtq

    return pybtq


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL {msg}")
    print(f"ok   {msg}")


def main():
    with tempfile.TemporaryDirectory() as work:
        btq = load(locate_library(), work)

        ids = btq.list_checks()
        check("bergman" in ids and "suite" in ids, f"list_checks ({len(ids)} ids)")
        check("commutator" in btq.describe("commutator"), "describe")
        try:
            btq.describe("nope")
            check(False, "unknown id raises")
        except ValueError:
            check(True, "unknown id raises")

        x, y = 0.3 + 0.2j, -0.1 + 0.25j
        for geom in ["bargmann", "fubini_study", "poincare_disc"]:
            got = btq.bergman_kernel(geom, 16, x, y)
            want = btq.reference_kernel(geom, 16, x, y)
            err = abs(got - want) / abs(want)
            check(err < 1e-8, f"{geom} kernel matches closed form (rel err {err:.1e})")

        # The plane kernel is p on the whole diagonal.
        z = cmath.exp(0.4j)
        k = btq.reference_kernel("bargmann", 8, z, z)
        check(abs(k - 8) < 1e-12, "bargmann diagonal equals p")

        f = {"kind": "bump", "center": [0.1, 0.0], "radius": 1.5, "power": 8}
        g = {"kind": "gaussian", "center": [0.0, 0.2], "width": 0.6}
        rows = btq.product_defect("fubini_study", f, g, [16, 32, 64])
        e1 = [r[3] for r in rows]
        check(e1[0] > e1[1] > e1[2], f"product defect decreases {['%.2e' % e for e in e1]}")

        norm, sup = btq.toeplitz_norm("fubini_study", f, 32)
        check(norm <= sup * (1 + 1e-9), f"operator norm {norm:.4f} <= sup {sup:.4f}")

        cfg = {
            "geometry": {"name": "fubini_study"},
            "p_list": [8, 16, 32],
            "symbols": {"f": f, "g": g},
            "checks": ["space", "bergman", "product"],
        }
        out = os.path.join(work, "report")
        code, summary = btq.run(cfg, out, seed=3)
        summary = json.loads(summary)
        check(code == 0 and summary["status"] == "pass", f"run exit code {code}")
        check(os.path.exists(os.path.join(out, "product.csv")), "run wrote product.csv")

        ok, rows = btq.criterion(1)
        check(ok and rows, f"criterion 1 ({len(rows)} comparisons)")
    print("smoke test passed")


if __name__ == "__main__":
    main()

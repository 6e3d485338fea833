#!/usr/bin/env python3
"""Smoke test for the fracheat_py extension module.

Builds nothing itself: run `cargo build -p fracheat-py --release` first.
The script copies the cdylib next to itself under the importable name and
exercises the bindings end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def locate_library() -> Path:
    names = ["libfracheat_py.so", "fracheat_py.dll", "libfracheat_py.dylib"]
    for profile in ["release", "debug"]:
        for name in names:
            cand = ROOT / "target" / profile / name
            if cand.exists():
                return cand
    sys.exit("build the extension first: cargo build -p fracheat-py --release")


def main() -> None:
    lib = locate_library()
    tmp = Path(tempfile.mkdtemp(prefix="fracheat_py_"))
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    shutil.copy2(lib, tmp / f"fracheat_py{suffix}")
    sys.path.insert(0, str(tmp))
    import fracheat_py as fh

    checks = 0

    def ok(name: str, cond: bool, detail: str = "") -> None:
        nonlocal checks
        checks += 1
        if not cond:
            sys.exit(f"FAIL {name} {detail}")
        print(f"PASS {name} {detail}")

    # Mittag-Leffler spot values
    v = fh.mittag_leffler(1.0, -1.0)
    ok("E_{1,1}(-1) = 1/e", abs(v - math.exp(-1)) < 1e-12, f"got {v:.12e}")
    v = fh.mittag_leffler(0.5, -1.0)
    ok("E_{1/2,1}(-1)", abs(v - 0.42758357615580700) < 1e-9, f"got {v:.12e}")

    # kernel fit quality and nonnegativity
    fit = fh.fit_kernel(0.5, t_max=1.0, tau=1e-3, tol=1e-6)
    ok(
        "kernel fit converged below 1e-6",
        fit.converged and fit.max_rel_error <= 1e-6,
        f"m={len(fit.poles)} err={fit.max_rel_error:.2e}",
    )
    ok(
        "kernel parameters nonnegative",
        all(p >= 0 for p in fit.poles)
        and all(w >= 0 for w in fit.weights)
        and fit.omega_inf >= 0,
    )
    ok("kernel eval near exact", abs(fit.eval(4.0) - 0.5) <= 1e-6)

    # solver paths against the analytic solution
    ref = fh.solve(0.5, 1, 17, 1.0, method="reference")
    ok("reference path error", ref.err_h <= 1e-2, f"err_h={ref.err_h:.2e}")
    sch = fh.solve(0.5, 1, 17, 1.0, method="schrodingerize", n_p=256)
    ok("warped-phase path error", sch.err_h <= 5e-2, f"err_h={sch.err_h:.2e}")
    norm = math.sqrt(sum(u * u for u in ref.u_exact))
    ok("exact column populated", norm > 0)

    # cost model arithmetic
    _, headline = fh.quantum_query_bound(1.0, 1, 1.0 / 32.0, 0.01, 10.0, 0.1, 5.0, 1.0)
    ok("headline factor 2^40", headline == float(2**40), f"got {headline}")
    c1 = fh.classical_op_count(1, 1.0 / 16.0, 1.0, 8)
    c8 = fh.classical_op_count(8, 1.0 / 16.0, 1.0, 8)
    ok("classical count grows with dimension", c8 > 1e6 * c1)

    print(f"all {checks} smoke checks passed")


if __name__ == "__main__":
    main()

"""Run every validation suite and report one line per suite.

Exit status is nonzero if any suite fails.
"""

import argparse
import contextlib
import io
import sys

from metasir import cli
from metasir.config import SUITES


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    worst = 0
    for suite in SUITES:
        argv = ["validate", "--suite", suite, "--lambda", "1", "--alpha", "4", "--R", "0.5",
                "--eps", "0.01", "--theta", "1", "--samples", str(args.samples), "--seed", str(args.seed),
                "--workers", str(args.workers)]
        with contextlib.redirect_stdout(io.StringIO()):
            code = cli.main(argv)
        print(f"{suite}: {'PASS' if code == 0 else f'FAIL (exit {code})'}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())

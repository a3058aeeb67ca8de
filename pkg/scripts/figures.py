"""Regenerate the figure data (fig1 realization, fig2, fig3) as CSV files.

    python scripts/figures.py --out results --samples 20000 --workers 4
"""

import argparse
import pathlib
import sys

from metasir import cli

NETWORK = ["--lambda", "1", "--alpha", "4", "--R", "0.5"]


def jobs(samples: int):
    n = ["--samples", str(samples)]
    return {
        "fig1_realization.csv": ["realization", "--theta", "1", "--nu", "0.9", "--window", "4,4"],
        "fig2_nu90.csv": ["fig2", "--nu", "0.9", "--densities", "0.25,1", "--k", "1,3", *n,
                          "--t-grid", "1e-3:10:41:log"],
        "fig3_eps01.csv": ["fig3", "--eps", "0.01", *n, "--theta-grid", "1e-3:1e3:31:log"],
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    common = [*NETWORK, "--seed", str(args.seed), "--workers", str(args.workers)]
    for name, command in jobs(args.samples).items():
        code = cli.main([*command, *common, "--out", str(out / name)])
        print(f"{name}: exit {code}", file=sys.stderr)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""How far the k-nearest threshold estimate sits from the exact threshold.

Prints, per k, the fraction of realizations where the estimate exceeds the
exact threshold and quantiles of the ratio estimate / exact.
"""

import argparse

import numpy as np

from metasir.mc import McConfig, threshold_samples
from metasir.model import NetworkParams, ReliabilityTarget


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--nu", type=float, default=0.9)
    ap.add_argument("--ks", default="1,2,3,5,10,20")
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args(argv)
    ks = tuple(int(k) for k in args.ks.split(","))
    params = NetworkParams(1.0, 4.0, 0.5)
    ts = threshold_samples(params, ReliabilityTarget.from_nu(args.nu), McConfig(args.samples, args.seed), ks=ks)
    print("k,frac_above,ratio_q05,ratio_median,ratio_q95")
    for k in ks:
        ratio = ts.k_nearest[k] / ts.exact
        q = np.quantile(ratio, [0.05, 0.5, 0.95])
        print(f"{k},{np.mean(ratio > 1 + 1e-9):.4f},{q[0]:.4f},{q[1]:.4f},{q[2]:.4f}")


if __name__ == "__main__":
    main()

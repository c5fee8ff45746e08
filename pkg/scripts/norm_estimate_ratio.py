"""How loose is the Fourier norm estimate?

For each catalog symbol, prints the largest observed
``||T(X)|| / (total^2 * norm_estimate * ||X||)`` over random positive definite
inputs, together with the estimate itself and the node count.

    python3 scripts/norm_estimate_ratio.py --count 500
"""

import argparse
import math

from pdti.harness import SamplerConfig, sample
from pdti.operators import fourier_representation, norm_estimate_ratio
from pdti.spectral import eigendecompose
from pdti.suite import catalog_cycle
from pdti.tensor import random_tensor


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = SamplerConfig(seed=args.seed)
    for label, g, (_, _, _, _, gp, kp) in catalog_cycle():
        rep = fourier_representation(g, t_max=max(gp, kp) * math.log(4.0), gamma_power=gp, kappa_power=kp)
        worst = 0.0
        for i in range(args.count):
            rng = cfg.rng(10, i)
            A, B, X = sample(cfg, rng), sample(cfg, rng), random_tensor(cfg.shape, rng)
            worst = max(worst, norm_estimate_ratio(rep, eigendecompose(A), eigendecompose(B), X))
        print(f"{label:12s} nodes={len(rep.nodes):4d} estimate={rep.norm_estimate:.4f} max_ratio={worst:.4f}")


if __name__ == "__main__":
    main()

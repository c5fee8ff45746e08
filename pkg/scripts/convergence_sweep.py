"""Mean operator gap of T_psi as the decompositions are perturbed.

Prints the gap at each t for the Gaussian symbol (spectral route) and the
Heinz symbol (Fourier quadrature route), with the fitted log-log slope.

    python3 scripts/convergence_sweep.py --trials 200
"""

import argparse
import math

import numpy as np

from pdti.bounds import heinz_g
from pdti.harness import SamplerConfig, convergence_experiment, gaussian_symbol, sample_hermitian
from pdti.operators import fourier_representation
from pdti.tensor import spectral_norm


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    t_grid = (1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001)
    cfg = SamplerConfig(seed=args.seed, spectrum_range=(2.0, 4.0))
    D = sample_hermitian(SamplerConfig(seed=args.seed, ensemble="gaussian-hermitian"))
    D = D / spectral_norm(D)
    symbols = {
        "gaussian": gaussian_symbol(),
        # ||D|| = 1 keeps the perturbed spectra inside [1, 5]
        "heinz": fourier_representation(heinz_g(1, 0.25), t_max=math.log(5.0)),
    }
    for name, psi in symbols.items():
        rep = convergence_experiment(psi, cfg, D, t_grid=t_grid, trials=args.trials)
        slope = np.polyfit(np.log(t_grid), np.log(rep.mean_operator_gap), 1)[0]
        print(f"{name}: slope={slope:.3f} passed={rep.passed}")
        for t, gap, se in zip(rep.t_grid, rep.mean_operator_gap, rep.operator_gap_stderr):
            print(f"  t={t:<6g} gap={gap:.4e} +- {se:.1e}")


if __name__ == "__main__":
    main()

"""Growth of the maximal directional multiplier norm in the number of
directions.

Estimates the restricted L2 -> L2 norm of the maximal smoothed directional
Hilbert transform over N directions and prints r(N) next to sqrt(log N) and
sqrt(N) reference columns.  The interesting part is that r(N)/sqrt(N) falls
while r(N) keeps rising: growth is there, but it is logarithmic-type.

Run with: python3 demos/maximal_growth.py  (about a minute)
"""

import math

from grsio.multipliers import builtin
from grsio.operators import TorusSpec, opnorm_growth_experiment


def main():
    spec = TorusSpec(n=2, L=16.0, M=256)
    m = builtin("hilbert_smoothed", d=1, eps=0.05)
    N_list = [8, 16, 32, 64, 128]
    rows = opnorm_growth_experiment(m, 2, N_list, trials=2, seed=0, spec=spec, alpha=0.002)
    print(f"{'N':>5} {'r(N)':>10} {'r/sqrt(log N)':>15} {'r/sqrt(N)':>12}")
    for row in rows:
        N, r = row["N"], float(row["r"])
        print(f"{N:>5} {r:>10.4f} {r / math.sqrt(math.log(N)):>15.4f} {r / math.sqrt(N):>12.4f}")


if __name__ == "__main__":
    main()

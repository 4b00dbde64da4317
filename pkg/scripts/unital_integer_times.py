"""Return times of random unital channels are integers: the dimension of the explored subspace."""
import argparse

import numpy as np

from qkac.asymptotics import kac_hypothesis, relevant_subspace, steady_state
from qkac.constructions import random_pure_state, random_unital_channel
from qkac.monitor import return_time_cross_check


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--max-dim", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    print(f"{'seed':>6} {'d':>2} {'unitaries':>9} {'T':>12} {'dim H_rel':>9} {'1/lambda':>12} hypothesis")
    for i in range(args.n):
        rng = np.random.default_rng([args.seed, i])
        d = int(rng.integers(1, args.max_dim + 1))
        k = int(rng.integers(1, min(3, d * d) + 1))
        ch = random_unital_channel(d, k, args.seed + i)
        psi = random_pure_state(d, rng)
        t = return_time_cross_check(ch, psi).expected_time
        a = steady_state(ch, psi)
        dim_rel = relevant_subspace(ch, psi).shape[1]
        holds = kac_hypothesis(a).holds
        print(f"{args.seed + i:>6} {d:>2} {k:>9} {t:>12.8f} {dim_rel:>9} {1 / a.lam:>12.8f} {holds}")


if __name__ == "__main__":
    main()

"""Mean hitting times of random inner channels through the ancilla return-time construction.

Prints the ancilla return time next to a direct conditional iteration of the
inner channel; both count the step on which the target is found.
"""
import argparse

import numpy as np

from qkac.constructions import hitting_time_channel, random_channel, random_pure_state
from qkac.monitor import return_time_cross_check


def direct_hitting_time(inner, source, target, tol=1e-14, max_steps=10**6):
    rho = np.outer(source, source.conj())
    q = np.eye(source.size) - np.outer(target, target.conj())
    total = 0.0
    for _ in range(max_steps):
        s = np.trace(rho).real
        total += s
        if s < tol:
            break
        rho = q @ inner(rho) @ q
    return total


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--max-dim", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    print(f"{'seed':>6} {'d':>2} {'rank':>4} {'ancilla':>14} {'direct':>14} {'rel err':>9}")
    for i in range(args.n):
        rng = np.random.default_rng([args.seed, i])
        d = int(rng.integers(1, args.max_dim + 1))
        r = int(rng.integers(1, d * d + 1))
        inner = random_channel(d, r, args.seed + i)
        src, tgt = random_pure_state(d, rng), random_pure_state(d, rng)
        ch, anc = hitting_time_channel(inner, src, tgt)
        t = return_time_cross_check(ch, anc).expected_time
        ref = direct_hitting_time(inner, src, tgt)
        print(f"{args.seed + i:>6} {d:>2} {r:>4} {t:>14.8f} {ref:>14.8f} {abs(t - ref) / ref:>9.1e}")


if __name__ == "__main__":
    main()

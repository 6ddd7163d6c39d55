"""Measured vs formula transfer costs across (n, k), plus the naive k-fold baseline.

    python3 scripts/cost_sweep.py --max-n 12 --bits 64
"""

import argparse
import random

from knot.costs import account_run, expected_costs, naive_baseline, run_naive_k_fold
from knot.group import generate_safe_prime
from knot.protocol import SessionParams
from knot.transport import run_local


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=10)
    ap.add_argument("--bits", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    group = generate_safe_prime(args.bits, rng)
    print(f"# p = {group.p} ({args.bits} bits), g = {group.g}")
    print(f"{'n':>3} {'k':>3} {'direct':>7} {'naive':>6} {'gap':>5} {'bytes':>7}")
    for n in range(1, args.max_n + 1):
        secrets = [f"secret {i}".encode() for i in range(n)]
        for k in range(1, n + 1):
            session = SessionParams.default(group, n, k)
            choices = rng.sample(range(1, n + 1), k)
            run = run_local(session, secrets, choices, sender_rng=random.Random(rng.random()),
                            receiver_rng=random.Random(rng.random()))
            direct = account_run(run.transcript, session)
            naive, _ = run_naive_k_fold(session, choices, secrets, sender_rng=rng, receiver_rng=rng)
            assert direct.counts() == expected_costs(n, k).counts()
            assert naive.counts() == naive_baseline(n, k).counts()
            gap = naive.elements - direct.elements
            print(f"{n:>3} {k:>3} {direct.elements:>7} {naive.elements:>6} {gap:>5} {direct.wire_bytes:>7}")


if __name__ == "__main__":
    main()

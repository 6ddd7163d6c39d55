"""Randomized key-agreement sessions at several group sizes, with timings.

    python3 scripts/key_agreement_sweep.py --sessions 200 --bits 16 64 512
"""

import argparse
import random
import time

from knot.group import generate_safe_prime
from knot.protocol import SessionParams, run_k_of_n


def sweep(bits: int, sessions: int, max_n: int, rng: random.Random):
    t0 = time.perf_counter()
    group = generate_safe_prime(bits, rng)
    gen_time = time.perf_counter() - t0
    failures = 0
    t0 = time.perf_counter()
    for _ in range(sessions):
        n = rng.randint(1, min(max_n, group.p - 2))
        k = rng.randint(1, n)
        session = SessionParams.default(group, n, k)
        choices = rng.sample(range(1, n + 1), k)
        result = run_k_of_n(session, choices, sender_rng=rng, receiver_rng=rng)
        if result.receiver.keys != tuple(result.sender.keys[c - 1] for c in sorted(choices)):
            failures += 1
    return group, gen_time, time.perf_counter() - t0, failures


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sessions", type=int, default=200)
    ap.add_argument("--bits", type=int, nargs="+", default=[16, 64, 256, 512])
    ap.add_argument("--max-n", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    print(f"{'bits':>5} {'p_gen_s':>8} {'run_s':>7} {'ms/session':>10} {'failures':>8}")
    for bits in args.bits:
        _, gen_time, run_time, failures = sweep(bits, args.sessions, args.max_n, rng)
        print(f"{bits:>5} {gen_time:>8.3f} {run_time:>7.3f} {1000 * run_time / args.sessions:>10.2f} {failures:>8}")


if __name__ == "__main__":
    main()

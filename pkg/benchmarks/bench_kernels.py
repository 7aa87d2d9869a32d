"""Timing comparison of the numba kernels against the numpy fallbacks.

Run directly:  python3 benchmarks/bench_kernels.py [--quick]

Each kernel is warmed once (numba compiles on first call, cached on disk),
then timed over several repetitions; the table reports best-of wall times
and the speedup factor.  Pass --quick for smaller sizes.
"""

import argparse
import time

import numpy as np

from omegafib import kernels


def best_of(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(quick: bool):
    n_sieve = 10**6 if quick else 10**7
    n_box = 300 if quick else 1500
    n_pairs = 2000 if quick else 20000
    probs = np.random.default_rng(0).uniform(0.01, 0.99, size=20000 if quick else 200000)

    spf = kernels.spf_sieve(10**5)
    fires = np.ones((2, 10**5 + 1), dtype=np.uint8)
    vals = np.random.default_rng(1).integers(2, 10**5, size=(2, 10**5)).astype(np.int64)

    mu = kernels.mobius_sieve(10**6)
    alphas = np.array([0, 1], dtype=np.int64)
    betas = np.array([1, 2], dtype=np.int64)
    qp = np.array([3], dtype=np.int64)

    return [
        ("prime_sieve(%g)" % n_sieve,
         lambda: kernels.nb_prime_sieve(n_sieve),
         lambda: kernels.np_prime_sieve(n_sieve)),
        ("spf_sieve(%g)" % n_sieve,
         lambda: kernels.nb_spf_sieve(n_sieve),
         lambda: kernels.np_spf_sieve(n_sieve)),
        ("omega_sieve(%g)" % n_sieve,
         lambda: kernels.nb_omega_sieve(n_sieve),
         lambda: kernels.np_omega_sieve(n_sieve)),
        ("mobius_sieve(%g)" % n_sieve,
         lambda: kernels.nb_mobius_sieve(n_sieve),
         lambda: kernels.np_mobius_sieve(n_sieve)),
        ("coprime_pairs(%d)" % n_pairs,
         lambda: kernels.nb_coprime_quadrant(1, n_pairs + 1, n_pairs),
         lambda: kernels.np_coprime_quadrant(1, n_pairs + 1, n_pairs)),
        ("primitive_box(3, %d)" % n_box,
         lambda: kernels.nb_box_count(3, n_box, 1, n_box + 1),
         lambda: kernels.np_box_count(3, n_box, 1, n_box + 1)),
        ("poibin_pmf(%d, cap 64)" % len(probs),
         lambda: kernels.nb_poibin_pmf(probs, 64),
         lambda: kernels.np_poibin_pmf(probs, 64)),
        ("marked_omega(2x1e5)",
         lambda: kernels.nb_marked_omega(vals, spf, fires, 2, -1),
         lambda: kernels.np_marked_omega(vals, spf, fires, 2, -1)),
        ("mobius_class_sum(1e6)",
         lambda: kernels.nb_mobius_class_sum(mu, 10**6, 3, qp, alphas, betas),
         lambda: kernels.np_mobius_class_sum(mu, 10**6, 3, qp, alphas, betas)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller sizes")
    args = ap.parse_args()

    rows = []
    for name, nb_fn, np_fn in cases(args.quick):
        nb_fn()  # warm the JIT cache before timing
        t_nb = best_of(nb_fn)
        t_np = best_of(np_fn)
        rows.append((name, t_nb, t_np, t_np / t_nb if t_nb > 0 else float("inf")))

    width = max(len(r[0]) for r in rows)
    print("%-*s  %10s  %10s  %8s" % (width, "kernel", "numba [s]", "numpy [s]", "speedup"))
    for name, t_nb, t_np, ratio in rows:
        print("%-*s  %10.4f  %10.4f  %7.1fx" % (width, name, t_nb, t_np, ratio))


if __name__ == "__main__":
    main()

"""Compiled kernels against the pure-Python fallback.

Runs each hot kernel on identical seeded inputs with both backends, checks the
outputs agree and prints median wall times and the speedup.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import statistics
import time

import numpy as np

from lipext import _kernels, linprog
from lipext.metric import sample_sphere


def _timeit(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), out


def transport_case(m, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((2 * m, 3))
    supply = rng.uniform(0.1, 1, m)
    demand = rng.uniform(0.1, 1, m)
    demand *= supply.sum() / demand.sum()
    cost = np.linalg.norm(X[:m, None] - X[None, m:], axis=-1)

    def run(kern):
        return lambda: kern.transport_simplex(supply, demand, cost, 1e-12, 1_000_000)

    def value(out):
        return float((out[0] * cost).sum())

    return run, value


def greedy_case(count, seed):
    cand = sample_sphere(np.random.default_rng(seed), count, 3, 1.0)

    def run(kern):
        return lambda: kern.greedy_select(cand, 0.3, 1.0, 0)

    return run, lambda out: int(np.asarray(out).sum())


def lp_case(k, seed):
    # KR dual on k random points: max w.phi s.t. phi_a - phi_b <= d(a, b)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((k, 2))
    w = rng.standard_normal(k)
    w -= w.mean()
    d = np.linalg.norm(X[:, None] - X[None], axis=-1)
    rows, rhs = [], []
    for a in range(k):
        for b in range(k):
            if a != b:
                r = np.zeros(k)
                r[a], r[b] = 1.0, -1.0
                rows.append(r)
                rhs.append(d[a, b])
    A, b = np.array(rows), np.array(rhs)

    def run(kern):
        name = "cython" if kern is not _kernels.get_backend("python") else "python"
        return lambda: linprog.solve(-w, A, b, backend=name)

    return run, lambda out: float(out.fun)


CASES = {
    "transport_simplex 40x40": lambda s: transport_case(40, s),
    "transport_simplex 120x120": lambda s: transport_case(120, s),
    "greedy_select 20000 candidates": lambda s: greedy_case(20_000, s),
    "tableau_simplex (KR dual, 12 points)": lambda s: lp_case(12, s),
    "tableau_simplex (KR dual, 20 points)": lambda s: lp_case(20, s),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", default=None, help="write results here")
    args = ap.parse_args(argv)

    backends = _kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the fallback is timed")
    rows = []
    print(f"{'kernel':40s} {'backend':8s} {'median s':>10s} {'speedup':>8s}  result")
    for name, make in CASES.items():
        run, value = make(args.seed)
        timings = {}
        results = {}
        for b in backends:
            t, out = _timeit(run(_kernels.get_backend(b)), args.repeat)
            timings[b] = t
            results[b] = value(out)
        base = timings["python"]
        for b in backends:
            print(f"{name:40s} {b:8s} {timings[b]:10.5f} {base / timings[b]:8.1f}x  {results[b]}")
        agree = len({round(v, 9) if isinstance(v, float) else v for v in results.values()}) == 1
        if not agree:
            print(f"  WARNING: backends disagree on {name}: {results}")
        rows.append({"kernel": name, "seconds": timings, "results": results, "agree": agree})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, sort_keys=True, indent=2)


if __name__ == "__main__":
    main()

"""Time the brute-force edge-use enumeration: Cython kernel against pure Python.

    python3 benchmarks/bench_kernels.py [--count 12] [--repeat 3] [--edges 14]

Without ``--edges`` the suite instances are used; with it, random graphs on
9 nodes with that many edges and every node required.

Both kernels run on the same suite instances; their results must agree.
"""
import argparse
import time

from stsp import _pykernels
from stsp.generate import random_instance, suite_instance

try:
    from stsp import _ckernels
except ImportError:
    _ckernels = None


def args_of(inst):
    return (inst.node_count, [e.u for e in inst.edges], [e.v for e in inst.edges],
            [float(e.cost) for e in inst.edges], sorted(inst.stsp_required), -1)


def best_of(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=12)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--edges", type=int, default=None)
    ns = ap.parse_args()
    if _ckernels is None:
        print("compiled kernel not built; only the Python fallback is available")
    print(f"{'inst':>4} {'|V|':>4} {'|E|':>4} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    tot_py = tot_c = 0.0
    for seed in range(ns.count):
        inst = suite_instance(seed) if ns.edges is None else random_instance(seed, 9, ns.edges, n_required=9)
        a = args_of(inst)
        t_py, r_py = best_of(_pykernels.min_edge_uses, a, ns.repeat)
        tot_py += t_py
        if _ckernels is not None:
            t_c, r_c = best_of(_ckernels.min_edge_uses, a, ns.repeat)
            tot_c += t_c
            assert r_py[0] == r_c[0] and list(r_py[1]) == list(r_c[1]), f"kernels disagree on instance {seed}"
            print(f"{seed:>4} {inst.node_count:>4} {inst.edge_count:>4} {t_py:>10.4f} {t_c:>10.4f} {t_py / t_c:>8.1f}")
        else:
            print(f"{seed:>4} {inst.node_count:>4} {inst.edge_count:>4} {t_py:>10.4f} {'-':>10} {'-':>8}")
    if _ckernels is not None:
        print(f"total python {tot_py:.3f} s, cython {tot_c:.3f} s, speedup {tot_py / tot_c:.1f}x")


if __name__ == "__main__":
    main()

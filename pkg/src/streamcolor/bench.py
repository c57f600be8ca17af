"""Benchmark the numba stream kernels against the pure-numpy fallbacks.

The three per-edge kernels dominate the main pass: field-sketch
accumulation, neighbor reservoirs, and the union-find census.  Run with

    python -m streamcolor.bench [--n 2000] [--delta 16] [--repeats 5]

Numbers cover one full pass over a random regular graph.  The active
default backend is chosen by STREAMCOLOR_BACKEND (numba when available).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from streamcolor import _kernels as K
from streamcolor.field import SketchBank
from streamcolor.generators import generate_instance
from streamcolor.params import ParamSet, sketch_rates


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _sketch_pass(impl, bank_proto, us, vs):
    for r in bank_proto.rates:
        Y = np.zeros_like(bank_proto._Y[r])
        Z = np.zeros_like(bank_proto._Z[r])
        impl(Y, Z, bank_proto._pos[r], us, vs, bank_proto.p, bank_proto.zseed, r)


def _reservoir_pass(impl, n, cap, us, vs):
    res = np.full((n, cap), -1, dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    impl(res, counts, us, vs, 12345)


def _uf_pass(impl, n, us, vs):
    parent = np.arange(n, dtype=np.int64)
    impl(parent, us, vs)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--delta", type=int, default=16)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    inst = generate_instance("random-regular", args.delta, n=args.n, seed=1)
    us = np.ascontiguousarray(inst.edges[:, 0])
    vs = np.ascontiguousarray(inst.edges[:, 1])
    params = ParamSet.desk(args.n, args.delta)
    bank = SketchBank(args.n, args.delta, params, seed=1)
    cap = min(params.neighbor_reservoir_size(args.n), args.delta)

    print(f"n={args.n} delta={args.delta} edges={us.size} "
          f"rates={sketch_rates(args.delta)} active_backend={K.backend()}")

    rows = []
    pairs = [
        ("sketch-update", lambda impl: _sketch_pass(impl, bank, us, vs),
         getattr(K, "_sketch_update_rate_numba", None), K._sketch_update_rate_numpy),
        ("reservoir", lambda impl: _reservoir_pass(impl, args.n, cap, us, vs),
         getattr(K, "_reservoir_update_numba", None), K._reservoir_update_numpy),
        ("union-find", lambda impl: _uf_pass(impl, args.n, us, vs),
         getattr(K, "_uf_union_batch_numba", None), K._uf_union_batch_numpy),
    ]
    for name, runner, jit, plain in pairs:
        t_plain = _time(lambda: runner(plain), args.repeats)
        if jit is not None:
            runner(jit)  # warm the JIT outside the timed region
            t_jit = _time(lambda: runner(jit), args.repeats)
            rows.append((name, t_jit, t_plain, t_plain / t_jit))
        else:
            rows.append((name, float("nan"), t_plain, float("nan")))

    print(f"{'kernel':15} {'numba (s)':>12} {'numpy (s)':>12} {'speedup':>9}")
    for name, t_jit, t_plain, speedup in rows:
        print(f"{name:15} {t_jit:>12.5f} {t_plain:>12.5f} {speedup:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

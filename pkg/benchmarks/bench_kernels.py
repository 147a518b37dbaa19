"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Each case is a register shape that the swap engine actually produces:
a single-qudit gate on an (n + 3)-qudit register, the Bell projection of
two qudits, and the cat projection of n + 1 qudits.  Results are checked
for agreement before timing.  The first numba call (JIT or cache load) is
excluded.
"""

import argparse
import time

import numpy as np

from qsms import _kernels as K


def _state(rng, shape):
    psi = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return np.ascontiguousarray(psi / np.linalg.norm(psi))


def cases(rng):
    for d, n in ((2, 3), (3, 3), (5, 3), (7, 3), (7, 4)):
        size = n + 3
        mid = size // 2
        psi = _state(rng, (d**mid, d, d ** (size - mid - 1)))
        u = np.linalg.qr(_state(rng, (d, d)))[0]
        yield f"apply_single d={d} qudits={size}", K.apply_single_numba, K.apply_single_numpy, (psi, u)

        rest = d ** (size - 2)
        psi = _state(rng, (d, d, rest))
        yield f"bell_coeffs  d={d} rest={rest}", K.bell_coefficients_numba, K.bell_coefficients_numpy, (psi, d)

        k = n + 1
        psi = _state(rng, (d**k, d ** (size - k)))
        yield f"cat_coeffs   d={d} k={k}", K.cat_coefficients_numba, K.cat_coefficients_numpy, (psi, d, k)


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not K.NUMBA_AVAILABLE:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'case':<32}{'numba (us)':>12}{'numpy (us)':>12}{'speedup':>10}")
    for name, fast, slow, fargs in cases(rng):
        a, b = fast(*fargs), slow(*fargs)  # also warms the JIT
        if not np.allclose(a, b, atol=1e-10):
            raise SystemExit(f"{name}: kernels disagree (max diff {np.abs(a - b).max():.2e})")
        t_fast = best_of(fast, fargs, args.repeat)
        t_slow = best_of(slow, fargs, args.repeat)
        print(f"{name:<32}{t_fast * 1e6:>12.1f}{t_slow * 1e6:>12.1f}{t_slow / t_fast:>9.2f}x")


if __name__ == "__main__":
    main()

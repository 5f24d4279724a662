"""Time the compiled and numpy kernel backends on representative sizes.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from randqfi import kernels
from randqfi import randmeas as rm
from randqfi.dynamics import IsingParams


def cases(rng):
    n = 8
    d = 2**n
    pa = rng.dirichlet(np.ones(d), size=64)
    pb = rng.dirichlet(np.ones(d), size=64)
    vecs = (rng.normal(size=(4, d)) + 1j * rng.normal(size=(4, d))) / np.sqrt(2 * d)
    factors = rm.u2_from_params(*rm.draw_haar_u2_params(rng, n))
    spec = rm.EnsembleSpec(rm.HAMILTONIAN, n, ising=IsingParams(n, 1.0, 1.5, 1.0))
    diags = rng.normal(size=(spec.K, n)) @ rm._z_signs(n)
    xspec = rm.ising_hadamard_spectrum(spec.ising)
    return {
        "hamming_form N=8 x64": lambda impl: kernels.hamming_form(pa, pb, n, impl=impl),
        "apply_local N=8 x4": lambda impl: kernels.apply_local(vecs, factors, impl=impl),
        f"evolve N=8 K={spec.K} x4": lambda impl: kernels.evolve(vecs, diags, xspec, spec.T, impl=impl),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    impls = kernels.backends()
    print(f"default backend: {kernels.BACKEND}")
    print(f"{'kernel':28s}" + "".join(f"{name:>12s}" for name in impls) + ("     speedup" if len(impls) > 1 else ""))
    for label, fn in cases(np.random.default_rng(0)).items():
        times = {}
        for name, impl in impls.items():
            fn(impl)  # warm up
            times[name] = min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
        line = f"{label:28s}" + "".join(f"{times[k] * 1e3:10.2f}ms" for k in impls)
        if "cython" in times:
            line += f"{times['python'] / times['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()

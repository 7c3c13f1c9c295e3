"""Compare the numba kernels with their pure-numpy fallbacks.

Run ``python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 5]``.  The
first numba call (compilation) is excluded from the timings.
"""
import argparse
import time

import numpy as np

from matuniform import _accel, kernels
from matuniform.constitutive import MODEL_CARDS, ConstitutiveModel


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _maxdiff(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return max(float(np.nanmax(np.abs(x - y))) for x, y in zip(a, b))


def _cases(rng, n):
    fs = np.eye(3) + 0.3 * rng.normal(size=(n, 3, 3))
    fs[np.linalg.det(fs) < 0] *= -1.0
    gam = rng.normal(size=(n, 3, 3, 3))
    dgam = rng.normal(size=(n, 3, 3, 3, 3))
    cases = [("polar", lambda: kernels.polar_batch_nb(fs), lambda: kernels.polar_batch_np(fs))]
    for mid in MODEL_CARDS:
        card, row = ConstitutiveModel(mid).card_at(np.zeros(3))
        cases.append((f"energy/{mid}",
                      lambda c=card.code, r=row: kernels.energy_batch_nb(c, r, fs),
                      lambda c=card.code, r=row: kernels.energy_batch_np(c, r, fs)))
    cases.append(("riemann", lambda: kernels.riemann_batch_nb(gam, dgam),
                  lambda: kernels.riemann_batch_np(gam, dgam)))
    return cases


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000, help="batch size")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
        return
    rng = np.random.default_rng(args.seed)
    # 456 = 19 Jacobian columns x 24 probes, the batch of one optimiser step
    for n, repeat in ((456, 50 * args.repeat), (args.n, args.repeat)):
        print(f"\nbatch size {n}, best of {repeat}")
        print(f"{'kernel':<26}{'numba [ms]':>12}{'numpy [ms]':>12}{'speed-up':>10}{'max diff':>12}")
        for name, nb, npf in _cases(rng, n):
            diff = _maxdiff(nb(), npf())  # warm-up, also compiles
            t_nb, t_np = _best(nb, repeat), _best(npf, repeat)
            print(f"{name:<26}{1e3 * t_nb:>12.3f}{1e3 * t_np:>12.3f}{t_np / t_nb:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()

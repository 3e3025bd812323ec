"""Compare the compiled kernels against the pure-numpy fallback.

Run as: python benchmarks/bench_kernels.py [--repeat N]

Times the five backend kernels plus a full forward/backward pass through
the default network, once per available backend, and prints the speedup of
the compiled extension over the numpy implementation.
"""

import argparse
import time

import numpy as np

from coocnet import backend, net
from coocnet.cooc import CoOccConfig, cooccur_tensor


def timeit(fn, repeat):
    fn()  # warm up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(name, repeat):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(512, 512, 3), dtype=np.uint8)
    channel = np.ascontiguousarray(img[:, :, 0])

    spec = net.default_network_spec(bins=64)
    params = net.init_params(spec, seed=1)
    x = rng.random((3, 64, 64), dtype=np.float32)

    xp = rng.random((32, 130, 130), dtype=np.float32)
    cols = np.empty((16 * 128, 32 * 9), dtype=np.float32)
    gp = np.zeros_like(xp)
    feat = rng.random((64, 64, 64), dtype=np.float32)
    pooled = np.empty((64, 32, 32), dtype=np.float32)
    idx = np.empty((64, 32, 32), dtype=np.uint8)
    dx = np.empty_like(feat)

    with backend.use_backend(name):
        ker = backend.kernels()
        results = {
            "cooc_counts 512x512 B=256": timeit(
                lambda: ker.cooc_counts(channel, 0, 1, 256), repeat),
            "cooc tensor 512x512 B=256": timeit(
                lambda: cooccur_tensor(img, CoOccConfig()), repeat),
            "im2col 16 rows k=3 c=32": timeit(
                lambda: ker.im2col_rows(xp, 3, 0, 16, 128, cols), repeat),
            "col2im 16 rows k=3 c=32": timeit(
                lambda: ker.col2im_rows_add(cols, gp, 3, 0, 16, 128), repeat),
            "maxpool fwd 64x64x64": timeit(
                lambda: ker.maxpool2_forward(feat, pooled, idx), repeat),
            "maxpool bwd 64x64x64": timeit(
                lambda: ker.maxpool2_backward(pooled, idx, dx), repeat),
            "net fwd+bwd B=64": timeit(
                lambda: net.backward(params, spec, x, 1), max(1, repeat // 2)),
        }
    return results


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    names = backend.available_backends()
    print(f"backends: {', '.join(names)}")
    tables = {name: bench_backend(name, args.repeat) for name in names}

    width = max(len(k) for k in next(iter(tables.values())))
    header = f"{'kernel':<{width}}  " + "  ".join(f"{n:>12}" for n in names)
    if len(names) > 1:
        header += f"  {'speedup':>8}"
    print(header)
    for key in next(iter(tables.values())):
        row = f"{key:<{width}}  " + "  ".join(
            f"{tables[n][key] * 1e3:9.3f} ms" for n in names)
        if len(names) > 1:
            row += f"  {tables['python'][key] / tables['compiled'][key]:7.2f}x"
        print(row)


if __name__ == "__main__":
    main()

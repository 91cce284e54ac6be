"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel runs once untimed (JIT warm-up), then best-of-N wall time.
Results are also checked for agreement between backends.
"""

import argparse
import time

import numpy as np

from flattorus import kernels
from flattorus.globopt import OptimizerConfig, seed_circle_packing, torus_voronoi
from flattorus.hexgrid import KNOWN_TILINGS, hex_partition, minimize_hex, solve_hex_system
from flattorus.satgrid import GridGraphSpec, build_grid_graph


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases():
    a, b = KNOWN_TILINGS[11]
    poly = hex_partition(minimize_hex(solve_hex_system(a, b, 11))).regions[0]
    vx = np.array([float(v[0]) for v in poly.vertices])
    vy = np.array([float(v[1]) for v in poly.vertices])
    yield "polygon_masks n=512", lambda nb: kernels.polygon_masks(vx, vy, 512, use_numba=nb)

    yield "grid_edges s=40 k=300", lambda nb: kernels.grid_edges(40, 300, use_numba=nb)

    spec = GridGraphSpec(4, 8, 3)
    adj = np.zeros((16, 16), dtype=bool)
    e = build_grid_graph(spec)
    adj[e[:, 0], e[:, 1]] = adj[e[:, 1], e[:, 0]] = True
    yield "colorable s=4 k=8 m=3", lambda nb: kernels.colorable(adj, 3, use_numba=nb)

    mesh = torus_voronoi(seed_circle_packing(16, 3))
    cfg = OptimizerConfig()

    def run_descent(nb):
        X = mesh.X.copy()
        m1, m2 = np.zeros_like(X), np.zeros_like(X)
        state = np.array([0.0, 1.0])
        phi, _, _ = kernels.descent(X, mesh.topology(), 2000, cfg.step_size, cfg.beta1, cfg.beta2, cfg.eps,
                                    0.0, cfg.tie_tol, cfg.min_step, m1, m2, state, use_numba=nb)
        return phi

    yield "descent m=16 2000 iters", run_descent


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and (np.array_equal(a, b) or np.allclose(a, b, atol=1e-9))
    if isinstance(a, float):
        return abs(a - b) < 1e-9
    return a == b


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':<26} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}  agree")
    for name, fn in cases():
        t_nb, r_nb = best_of(lambda: fn(True), args.repeat)
        t_np, r_np = best_of(lambda: fn(False), args.repeat)
        print(f"{name:<26} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}  {same(r_nb, r_np)}")


if __name__ == "__main__":
    main()

import os
import subprocess
import sys

import numpy as np
import pytest

from flattorus import globopt, kernels
from flattorus.globopt import OptimizerConfig


def test_polygon_masks_agree():
    vx = np.array([0.9, 1.4, 1.2, 0.7])
    vy = np.array([-0.1, 0.2, 0.45, 0.3])
    a = kernels.polygon_masks(vx, vy, 97, use_numba=True)
    b = kernels.polygon_masks(vx, vy, 97, use_numba=False)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert a[1].any() and (a[0] >= a[1]).all()


@pytest.mark.parametrize("s,k", [(5, 3), (12, 40), (17, 60)])
def test_grid_edges_agree(s, k):
    assert np.array_equal(kernels.grid_edges(s, k, use_numba=True), kernels.grid_edges(s, k, use_numba=False))


def test_colorable_agree():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = int(rng.integers(3, 11))
        adj = rng.random((n, n)) < 0.5
        adj = np.triu(adj, 1)
        adj = adj | adj.T
        for m in (1, 2, 3, 4):
            assert kernels.colorable(adj, m, use_numba=True) == kernels.colorable(adj, m, use_numba=False)


def test_subgradient_and_descent_agree():
    mesh = globopt.torus_voronoi(globopt.seed_circle_packing(11, 2))
    topo = mesh.topology()
    for temp in (0.0, 1e-3):
        pa, ga = kernels.phi_and_subgradient(mesh.X, topo, temp, use_numba=True)
        pb, gb = kernels.phi_and_subgradient(mesh.X, topo, temp, use_numba=False)
        assert pa == pytest.approx(pb, abs=1e-15) and np.allclose(ga, gb, atol=1e-12)
    cfg = OptimizerConfig()
    out = []
    for flag in (True, False):
        X = mesh.X.copy()
        m1, m2, st = np.zeros_like(X), np.zeros_like(X), np.array([0.0, 1.0])
        out.append(kernels.descent(X, topo, 300, cfg.step_size, cfg.beta1, cfg.beta2, cfg.eps, 0.0,
                                   cfg.tie_tol, cfg.min_step, m1, m2, st, use_numba=flag))
    assert out[0][0] == pytest.approx(out[1][0], abs=1e-9)
    assert len(out[0][1]) == len(out[1][1])


def test_env_flag_selects_numpy():
    env = dict(os.environ, FLATTORUS_NUMBA="0")
    code = "from flattorus import _accel; print(_accel.backend_name())"
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert res.stdout.strip() == "numpy"

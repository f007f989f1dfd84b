"""Time the numba kernels against their pure-numpy twins.

    python3 benchmarks/bench_kernels.py [--level 4] [--repeat 5]

Both variants are imported from ``quasifem.kernels`` directly, so the
``QUASIFEM_DISABLE_NUMBA`` flag does not matter here.
"""
import argparse
import time

import numpy as np

from quasifem import kernels
from quasifem.fem import assemble
from quasifem.geometry import unit_square_mesh
from quasifem.models import builtin_model, constant_source


def best_of(func, repeat):
    func()  # warm-up (includes numba compilation)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        func()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(level):
    mesh = unit_square_mesh(level)
    pts, tris = np.ascontiguousarray(mesh.points), np.ascontiguousarray(mesh.triangles)
    rng = np.random.default_rng(0)
    values = rng.standard_normal(mesh.n_vertices)
    system = assemble(mesh, builtin_model("rational"), np.zeros(mesh.n_vertices), constant_source(1.0))
    A = system.matrix
    b = system.rhs
    positions = rng.integers(0, 1000, size=200_000)
    contrib = rng.standard_normal(200_000)
    n = 200_000
    sub, sup = -np.ones(n - 1), -np.ones(n - 1)
    diag = np.full(n, 2.5)
    rhs = rng.standard_normal(n)
    ip, ix = A.indptr.astype(np.int64), A.indices.astype(np.int64)
    return {
        "triangle_geometry": lambda v: v(pts, tris),
        "element_variation": lambda v: v(values, tris),
        "scatter_add": lambda v: v(np.zeros(1000), positions, contrib),
        "pcg": lambda v: v(ip, ix, A.data, b, np.zeros(len(b)), 1e-10, 10_000),
        "tridiag_solve": lambda v: v(sub, diag, sup, rhs),
    }, mesh


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--level", type=int, default=4, help="red refinements of the unit-square mesh")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    table, mesh = cases(args.level)
    print(f"mesh: {mesh.n_elements} triangles, {mesh.n_vertices} vertices")
    print(f"{'kernel':<20}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, call in table.items():
        fast = getattr(kernels, f"{name}_loops")
        slow = getattr(kernels, f"{name}_numpy")
        tf = best_of(lambda: call(fast), args.repeat)
        ts = best_of(lambda: call(slow), args.repeat)
        print(f"{name:<20}{tf * 1e3:12.3f}{ts * 1e3:12.3f}{ts / tf:10.2f}")


if __name__ == "__main__":
    main()

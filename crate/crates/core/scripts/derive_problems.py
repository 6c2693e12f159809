"""Symbolic derivation of the manufactured sources and tensor partials.

Checks that the closed forms used in src/problems.rs,

    f = -(K11 u_xx + 2 K12 u_xy + K22 u_yy
          + (dK11/dx + dK12/dy) u_x + (dK12/dx + dK22/dy) u_y),

agree with -div(K grad u) for each built-in problem, and prints reference
values that are frozen into the Rust unit tests.

    python3 scripts/derive_problems.py
"""

import sympy as sp

x, y = sp.symbols("x y", real=True)


def rotated(theta, d1, d2):
    c, s = sp.cos(theta), sp.sin(theta)
    p = sp.Matrix([[c, s], [-s, c]])
    return sp.simplify(p.T * sp.diag(d1, d2) * p)


PROBLEMS = {
    1: (sp.eye(2), 2 * sp.exp(2 * x + y)),
    2: (
        rotated(sp.pi / 8, 1 + 2 * x**2 + y**2, 1 + x**2 + 2 * y**2),
        sp.sin(sp.pi * x) * sp.sin(sp.pi * y),
    ),
    3: (
        rotated(sp.pi / 4, 1 + 2 * x**2 + y**2 + y**5, 1 + x**2 + 2 * y**2 + x**3),
        sp.sin(sp.pi * x) * sp.sin(sp.pi * y),
    ),
}

SAMPLES = [(0.0, 0.0), (0.3, 0.7), (0.81, 0.12), (1.0, 1.0)]

for pid, (k, u) in PROBLEMS.items():
    grad = sp.Matrix([sp.diff(u, x), sp.diff(u, y)])
    flux = k * grad
    f_div = -(sp.diff(flux[0], x) + sp.diff(flux[1], y))
    k11, k12, k22 = k[0, 0], k[0, 1], k[1, 1]
    assert sp.simplify(k[0, 1] - k[1, 0]) == 0
    f_closed = -(
        k11 * sp.diff(u, x, 2)
        + 2 * k12 * sp.diff(u, x, y)
        + k22 * sp.diff(u, y, 2)
        + (sp.diff(k11, x) + sp.diff(k12, y)) * sp.diff(u, x)
        + (sp.diff(k12, x) + sp.diff(k22, y)) * sp.diff(u, y)
    )
    assert sp.simplify(f_div - f_closed) == 0, pid
    print(f"problem {pid}")
    print("  K11 =", sp.simplify(k11))
    print("  K12 =", sp.simplify(k12))
    print("  K22 =", sp.simplify(k22))
    print("  f   =", sp.simplify(f_div))
    partials = [sp.diff(k11, x), sp.diff(k12, y), sp.diff(k12, x), sp.diff(k22, y)]
    for px, py in SAMPLES:
        at = {x: px, y: py}
        fv = sp.N(f_div.subs(at), 20)
        dk = [sp.N(d.subs(at), 20) for d in partials]
        kv = [sp.N(v.subs(at), 20) for v in (k11, k12, k22)]
        print(f"  ({px}, {py}): f = {fv}")
        print(f"      K = {kv}")
        print(f"      dK = {dk}")

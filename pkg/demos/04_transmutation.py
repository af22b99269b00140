"""The Volterra transform maps p-solutions to q-solutions.

v = u + int_0^x K(x, y) u(y) dy solves the q-equation with the lateral
source -K(x, 0) u_x(0, t), and shares u's Cauchy data at x = 0. With zero
flux the source disappears; with a nonzero flux dropping it breaks the
identity.
"""

import numpy as np

from tfdlab import (
    CoefficientField,
    ProblemConfig,
    apply_transform,
    extract_trace,
    make_uniform_grid,
    solve_ibvp,
    solve_kernel,
    transformed_equation_residual,
)

cfg = ProblemConfig(alpha=0.5)
for flux_name, flux in (("zero flux", None), ("flux 1 + sin 3t", lambda t: 1 + np.sin(3 * t))):
    print(flux_name)
    for n, m in ((50, 100), (100, 200), (200, 400)):
        g = make_uniform_grid(1.0, n)
        p = CoefficientField.from_function(lambda x: 1 + x**2, g, "p")
        q = CoefficientField.from_function(lambda x: 2 + np.sin(2 * x), g, "q")
        a = CoefficientField.from_function(lambda x: 2 + np.cos(np.pi * x), g, "a")
        u = solve_ibvp(cfg, p, a, m, left_flux=flux)
        v = apply_transform(u, solve_kernel(p, q))
        tr = extract_trace(u)
        full = transformed_equation_residual(v, q, tr)
        dropped = transformed_equation_residual(v, q, tr, include_boundary_term=False)
        print(f"  N={n:3d} M={m:3d}  residual {full:.2e}   without the K(x,0) u_x(0,t) term {dropped:.2e}")
    print(f"  v(0, t) == u(0, t): {np.array_equal(v.values[0], u.values[0])}")
